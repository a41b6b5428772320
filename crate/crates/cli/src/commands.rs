//! Subcommand drivers. Each returns a [`Table`] plus human-readable summary
//! lines; writing and exit-code policy live in the binary.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use vortex_oam::matrix::DIRECT_MIN_TOL;
use vortex_oam::specfun::{beam_reconstruct, bessel_j, graf_coefficients};
use vortex_oam::spectra::{limit_rows, spectrum_from_engine};
use vortex_oam::{
    azimuthal_selection, kernel_coefficient, kernel_fourier, AtomicState, BesselBeam, ChannelWindow, DichroicPair,
    DichroismStudy, DipoleTransition, DirectOracle, Displacement, Error, ExpansionEngine, SelectionSign,
};

use crate::config::{ConfigError, RunConfig};
use crate::output::Table;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const NON_CONVERGENCE: i32 = 2;
    pub const INTERNAL: i32 = 3;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Validation(String),
    NonConvergence(String),
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => exit::VALIDATION,
            Self::NonConvergence(_) => exit::NON_CONVERGENCE,
            Self::Internal(_) => exit::INTERNAL,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "invalid input: {m}"),
            Self::NonConvergence(m) => write!(f, "numerical non-convergence: {m}"),
            Self::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::Domain(_)
            | Error::InvalidInterval { .. }
            | Error::InconsistentSelection { .. }
            | Error::ToleranceTooTight { .. }
            | Error::DegenerateDenominator => Self::Validation(e.to_string()),
            Error::NonConvergence(_) | Error::NonFinite { .. } => Self::NonConvergence(e.to_string()),
            other => Self::Internal(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Validation(e.to_string())
    }
}

/// A finished run: the result table, summary lines and how many rows are
/// not converged.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub summary: Vec<String>,
    pub unconverged: usize,
}

fn transition(cfg: &RunConfig) -> Result<DipoleTransition, Failure> {
    let t = &cfg.transition;
    let initial = AtomicState::new(t.initial_n, t.initial_m, t.scale)?;
    let final_state = AtomicState::new(t.final_n, t.initial_m - t.alpha, t.scale)?;
    Ok(DipoleTransition::new(initial, final_state)?)
}

fn engine(cfg: &RunConfig) -> Result<ExpansionEngine, Failure> {
    let beam = BesselBeam::new(cfg.beam.l, cfg.beam.k_rho)?;
    let e = ExpansionEngine::new(
        beam,
        cfg.beam.k_rho_out,
        transition(cfg)?,
        cfg.tolerance.quad,
        cfg.selection_sign,
    )?;
    Ok(e.with_overrides(cfg.truncation.p, cfg.truncation.r_max)?)
}

/// Outgoing-OAM spectra at every `geometry.r0`.
pub fn run_spectrum(cfg: &RunConfig) -> Result<Outcome, Failure> {
    if cfg.geometry.r0.is_empty() {
        return Err(Failure::Validation("geometry.r0 is empty".into()));
    }
    let engine = engine(cfg)?;
    let reference = engine.reference_scale()?;
    let spectra = cfg
        .geometry
        .r0
        .par_iter()
        .map(|&r0| spectrum_from_engine(&engine, Displacement::new(r0)?, cfg.window, cfg.tolerance.window_tail))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(
        "spectrum",
        vec![
            "r0",
            "l_out",
            "weight",
            "abs_m",
            "phase",
            "m_re",
            "m_im",
            "p_truncation",
            "terms_used",
            "tail_estimate",
            "r_max",
            "converged",
            "window_ok",
        ],
    );
    let mut summary = Vec::new();
    let mut unconverged = 0;
    for s in &spectra {
        for (l_out, a) in &s.raw {
            let value: Complex64 = a.value;
            let ok = a.converged && a.convergence.tail_estimate <= cfg.tolerance.tail * value.norm().max(reference);
            unconverged += usize::from(!ok);
            table.push(vec![
                s.r0.into(),
                (*l_out).into(),
                s.weights[l_out].into(),
                value.norm().into(),
                value.arg().into(),
                value.re.into(),
                value.im.into(),
                a.convergence.p_truncation.into(),
                a.convergence.terms_used.into(),
                a.convergence.tail_estimate.into(),
                a.convergence.r_max.into(),
                ok.into(),
                s.window_ok.into(),
            ]);
        }
        summary.push(format!(
            "R0 = {}: spread {:.6}, off-channel weight {:.6e}, boundary weight {:.3e}{}",
            s.r0,
            vortex_oam::spectral_spread(s),
            s.off_channel_weight(engine.allowed_channel()),
            s.boundary_weight,
            if s.window_ok { "" } else { " (window too narrow)" }
        ));
    }
    Ok(Outcome {
        table,
        summary,
        unconverged,
    })
}

/// Cluster-averaged dichroism at every `geometry.cluster_radii`.
pub fn run_dichroism(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let radii = &cfg.geometry.cluster_radii;
    if radii.is_empty() {
        return Err(Failure::Validation("geometry.cluster_radii is empty".into()));
    }
    for alpha in [1, -1] {
        let allowed = cfg.selection_sign.allowed_channel(cfg.beam.l, alpha);
        if !cfg.window.contains(allowed) {
            return Err(Failure::Validation(format!(
                "window [{}, {}] must contain the α = {alpha} channel {allowed}",
                cfg.window.lo, cfg.window.hi
            )));
        }
    }
    let t = &cfg.transition;
    let pair = DichroicPair::from_states(AtomicState::new(t.initial_n, t.initial_m, t.scale)?, t.final_n)?;
    let beam = BesselBeam::new(cfg.beam.l, cfg.beam.k_rho)?;
    let study = DichroismStudy::new(beam, cfg.beam.k_rho_out, pair, cfg.window, cfg.tolerance.quad)?
        .with_overrides(cfg.truncation.p, cfg.truncation.r_max)?;
    let n = cfg.geometry.n_samples;
    let totals = radii
        .par_iter()
        .map(|&rc| study.cluster_totals(rc, n))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(
        "dichroism",
        vec![
            "cluster_radius",
            "d",
            "total_plus",
            "total_minus",
            "n_samples",
            "converged",
        ],
    );
    let mut unconverged = 0;
    let mut ds = Vec::with_capacity(radii.len());
    for (&rc, t) in radii.iter().zip(&totals) {
        let d = t.asymmetry()?;
        ds.push(d);
        unconverged += usize::from(!t.converged);
        table.push(vec![
            rc.into(),
            d.into(),
            t.plus.into(),
            t.minus.into(),
            n.into(),
            t.converged.into(),
        ]);
    }
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let fading = order.windows(2).all(|w| ds[w[1]].abs() <= ds[w[0]].abs());
    let mut summary = vec![format!(
        "trend: |D| non-increasing with cluster radius: {}",
        if fading { "yes" } else { "no" }
    )];
    let (first, last) = (order[0], order[order.len() - 1]);
    if ds[first] != 0.0 && first != last {
        summary.push(format!(
            "|D({})| / |D({})| = {:.6}",
            radii[last],
            radii[first],
            ds[last].abs() / ds[first].abs()
        ));
    }
    Ok(Outcome {
        table,
        summary,
        unconverged,
    })
}

/// Off-channel weight along `geometry.limit_sequence`.
pub fn run_limit_study(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let seq = &cfg.geometry.limit_sequence;
    if seq.last() != Some(&0.0) || seq.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Failure::Validation(
            "geometry.limit_sequence must be strictly decreasing and end at 0".into(),
        ));
    }
    let engine = engine(cfg)?;
    let rows = limit_rows(&engine, seq, cfg.window)?;
    let mut table = Table::new("limit-study", vec!["r0", "off_channel_weight", "converged"]);
    let mut unconverged = 0;
    for r in &rows {
        unconverged += usize::from(!r.converged);
        table.push(vec![r.r0.into(), r.off_channel_weight.into(), r.converged.into()]);
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].off_channel_weight < w[0].off_channel_weight);
    let mut summary = vec![format!(
        "trend: off-channel weight strictly decreasing: {}",
        if monotone { "yes" } else { "no" }
    )];
    let nonzero: Vec<_> = rows.iter().filter(|r| r.r0 > 0.0).collect();
    if let [.., a, b] = nonzero.as_slice() {
        if a.off_channel_weight > 0.0 && b.off_channel_weight > 0.0 {
            let slope = (a.off_channel_weight / b.off_channel_weight).ln() / (a.r0 / b.r0).ln();
            summary.push(format!("log-log slope over the last two nonzero points: {slope:.4}"));
        }
    }
    Ok(Outcome {
        table,
        summary,
        unconverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Quick,
    Full,
}

/// Deliberate defects for exercising the verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Azimuthal selection fires on `λ = α` instead of `λ = −α`.
    Selection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn selection_identity(fault: Option<Fault>) -> Check {
    let selection = |lambda: i32, alpha: i32| match fault {
        Some(Fault::Selection) => azimuthal_selection(lambda, -alpha),
        None => azimuthal_selection(lambda, alpha),
    };
    let mut bad = 0;
    for lambda in -5..=5 {
        for alpha in -5..=5 {
            let want = if lambda == -alpha { 2.0 * PI } else { 0.0 };
            bad += usize::from(selection(lambda, alpha) != want);
        }
    }
    check(
        "selection identity",
        bad == 0,
        format!("{bad} of 121 (λ, α) pairs wrong"),
    )
}

fn kernel_closed_form() -> Result<Check, Failure> {
    let mut worst: f64 = 0.0;
    for lambda in 0..=3 {
        for &(r, q) in &[(0.3, 1.7), (1.0, 1.4), (2.5, 0.6), (4.0, 3.1), (0.8, 0.75)] {
            let slow = kernel_fourier(lambda, r, q, 1e-13)?;
            let fast = kernel_coefficient(lambda, r, q)?;
            worst = worst.max(((fast - slow) / slow).abs());
        }
    }
    Ok(check(
        "kernel closed form",
        worst < 1e-8,
        format!("max relative deviation {worst:.3e}"),
    ))
}

fn graf_reconstruction() -> Result<Check, Failure> {
    let mut worst: f64 = 0.0;
    for &x in &[0.5, 2.0, 5.0] {
        let p = graf_coefficients(1, x, 1e-14)?.truncation.max(25);
        for i in 0..10 {
            for j in 0..10 {
                let (rp, ph) = (0.05 + f64::from(i), 2.0 * PI * f64::from(j) / 10.0 + 0.1);
                let v = beam_reconstruct(1, 1.0, x, rp, ph, p)?;
                let (bx, by) = (rp * ph.cos() + x, rp * ph.sin());
                let direct = Complex64::from_polar(bessel_j(1, bx.hypot(by))?, by.atan2(bx));
                worst = worst.max((v - direct).norm());
            }
        }
    }
    Ok(check(
        "graf reconstruction",
        worst < 1e-10,
        format!("max deviation {worst:.3e}"),
    ))
}

fn default_engine(l: i32, alpha: i32) -> Result<ExpansionEngine, Failure> {
    let t = DipoleTransition::s_to_p(alpha, 1.0)?;
    Ok(ExpansionEngine::new(
        BesselBeam::new(l, 1.0)?,
        1.0,
        t,
        1e-6,
        SelectionSign::Plus,
    )?)
}

fn default_window() -> ChannelWindow {
    ChannelWindow { lo: -6, hi: 8 }
}

fn onaxis_collapse() -> Result<Check, Failure> {
    let mut worst: f64 = 0.0;
    for alpha in [1, -1] {
        let s = spectrum_from_engine(
            &default_engine(1, alpha)?,
            Displacement::on_axis(),
            default_window(),
            1e-3,
        )?;
        for (&l, &w) in &s.weights {
            let want = if l == 1 + alpha { 1.0 } else { 0.0 };
            worst = worst.max((w - want).abs());
        }
    }
    Ok(check(
        "on-axis collapse",
        worst < 1e-12,
        format!("max weight deviation {worst:.3e}"),
    ))
}

fn off_axis_spectrum() -> Result<Check, Failure> {
    let s = spectrum_from_engine(&default_engine(1, 1)?, Displacement::new(2.0)?, default_window(), 1e-3)?;
    let sum: f64 = s.weights.values().sum();
    let populated = s.weights.values().filter(|&&w| w > 0.01).count();
    Ok(check(
        "off-axis spectrum",
        (sum - 1.0).abs() < 1e-12 && populated >= 3 && s.converged,
        format!("{populated} channels above 0.01, weight sum - 1 = {:.1e}", sum - 1.0),
    ))
}

fn mirror_symmetry() -> Result<Check, Failure> {
    let d = Displacement::new(1.3)?;
    let a = spectrum_from_engine(&default_engine(1, 1)?, d, default_window(), 1e-3)?;
    let b = spectrum_from_engine(&default_engine(-1, -1)?, d, ChannelWindow { lo: -8, hi: 6 }, 1e-3)?;
    let worst = a
        .weights
        .iter()
        .map(|(l, w)| (w - b.weights[&-l]).abs())
        .fold(0.0, f64::max);
    Ok(check(
        "mirror symmetry",
        worst <= 1e-8,
        format!("max weight difference {worst:.3e}"),
    ))
}

fn oracle_grid() -> Result<Check, Failure> {
    let t = DipoleTransition::s_to_p(1, 1.0)?;
    let beam = BesselBeam::new(1, 1.0)?;
    let e = default_engine(1, 1)?;
    let oracle = DirectOracle::new(beam, 1.0, t, 1e-4)?;
    let reference = e.reference_scale()?;
    let cases: Vec<(f64, i32)> = [0.0, 0.5, 2.0].iter().flat_map(|&r| [(r, 2), (r, 1)]).collect();
    let diffs = cases
        .par_iter()
        .map(|&(r0, l)| {
            let d = Displacement::new(r0)?;
            Ok((oracle.amplitude(l, d)?.value - e.amplitude(l, d)?.value).norm() / reference)
        })
        .collect::<Result<Vec<f64>, Failure>>()?;
    let worst = diffs.iter().copied().fold(0.0, f64::max);
    let budget = 2.0 * (1e-6 + 1e-4);
    Ok(check(
        "oracle grid",
        worst <= budget,
        format!("max |ΔM|/reference {worst:.3e} (budget {budget:.3e})"),
    ))
}

fn oracle_onaxis() -> Result<Check, Failure> {
    let t = DipoleTransition::s_to_p(1, 1.0)?;
    let oracle = DirectOracle::new(BesselBeam::new(1, 1.0)?, 1.0, t, DIRECT_MIN_TOL)?;
    let allowed = oracle.amplitude(2, Displacement::on_axis())?.value.norm();
    let off = [1, 3]
        .iter()
        .map(|&l| oracle.amplitude(l, Displacement::on_axis()).map(|a| a.value.norm()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let ratio = off / allowed;
    Ok(check(
        "oracle on-axis",
        ratio < 1e-6,
        format!("max off-channel |M| ratio {ratio:.3e}"),
    ))
}

/// Runs the self-checks; `Full` adds the direct-quadrature comparisons.
pub fn run_verify(level: VerifyLevel, fault: Option<Fault>) -> Result<Vec<Check>, Failure> {
    let mut checks = vec![
        selection_identity(fault),
        kernel_closed_form()?,
        graf_reconstruction()?,
        onaxis_collapse()?,
        off_axis_spectrum()?,
        mirror_symmetry()?,
    ];
    if level == VerifyLevel::Full {
        checks.push(oracle_onaxis()?);
        checks.push(oracle_grid()?);
    }
    Ok(checks)
}

/// Fixed-width pass/fail listing.
pub fn render_checks(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!(
            "{:<20} {}  {}\n",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        ));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    s.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    s
}
