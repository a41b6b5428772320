//! Outgoing-OAM spectra and the diagnostics built on them: spectral spread,
//! dichroic asymmetry, cluster averages and the on-axis limit.

use std::collections::BTreeMap;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::{ChannelAmplitude, ExpansionEngine, SelectionSign};
use crate::model::{AtomicState, BesselBeam, DipoleTransition, Displacement};
use crate::specfun::gauss_rule;

/// Boundary weight above which a window is flagged as too narrow.
pub const DEFAULT_WINDOW_TAIL_TOL: f64 = 1e-3;

/// Inclusive range of outgoing OAM `l′`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelWindow {
    pub lo: i32,
    pub hi: i32,
}

impl ChannelWindow {
    pub fn new(lo: i32, hi: i32) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidParameter(format!("empty channel window [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, l: i32) -> bool {
        (self.lo..=self.hi).contains(&l)
    }

    pub fn channels(&self) -> std::ops::RangeInclusive<i32> {
        self.lo..=self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// An outgoing channel and the `(p, p′)` shift pairs that feed it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachableChannel {
    pub l_out: i32,
    pub pairs: Vec<(i32, i32)>,
}

/// Every `l′ = l + α + p − p′` with `|p|, |p′| ≤ P`.
pub fn enumerate_channels(l: i32, alpha: i32, truncation: usize) -> Vec<ReachableChannel> {
    enumerate_channels_with(l, alpha, truncation, SelectionSign::Plus)
}

/// [`enumerate_channels`] under either selection-sign convention.
pub fn enumerate_channels_with(l: i32, alpha: i32, truncation: usize, sign: SelectionSign) -> Vec<ReachableChannel> {
    let big_p = truncation as i32;
    let base = sign.allowed_channel(l, alpha);
    let mut map: BTreeMap<i32, Vec<(i32, i32)>> = BTreeMap::new();
    for p in -big_p..=big_p {
        for q in -big_p..=big_p {
            map.entry(base + p - q).or_default().push((p, q));
        }
    }
    map.into_iter()
        .map(|(l_out, pairs)| ReachableChannel { l_out, pairs })
        .collect()
}

/// Normalized outgoing-OAM distribution for one atom position.
#[derive(Debug, Clone, PartialEq)]
pub struct OamSpectrum {
    pub l_in: i32,
    pub alpha: i32,
    pub r0: f64,
    pub window: ChannelWindow,
    /// `|M(l′)|² / Σ_window |M|²`.
    pub weights: BTreeMap<i32, f64>,
    pub raw: BTreeMap<i32, ChannelAmplitude>,
    /// `Σ_window |M|²` before normalization.
    pub total: f64,
    /// Larger of the two end-channel weights.
    pub boundary_weight: f64,
    /// False when `boundary_weight` exceeds the window tail tolerance.
    pub window_ok: bool,
    /// True when every amplitude converged.
    pub converged: bool,
}

impl OamSpectrum {
    /// Weight outside the on-axis channel `l + α`, summed directly.
    pub fn off_channel_weight(&self, allowed: i32) -> f64 {
        self.weights.iter().filter(|(&l, _)| l != allowed).map(|(_, w)| w).sum()
    }
}

/// Spectrum from an existing engine, sharing its radial cache.
pub fn spectrum_from_engine(
    engine: &ExpansionEngine,
    d: Displacement,
    window: ChannelWindow,
    window_tail_tol: f64,
) -> Result<OamSpectrum> {
    let allowed = engine.allowed_channel();
    if !window.contains(allowed) {
        return Err(Error::InvalidParameter(format!(
            "window [{}, {}] must contain the allowed channel {allowed}",
            window.lo, window.hi
        )));
    }
    let amps: Vec<ChannelAmplitude> = window
        .channels()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|l_out| engine.amplitude(l_out, d))
        .collect::<Result<_>>()?;
    let total: f64 = amps.iter().map(|a| a.value.norm_sqr()).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateDenominator);
    }
    let weights: BTreeMap<i32, f64> = amps.iter().map(|a| (a.l_out, a.value.norm_sqr() / total)).collect();
    let boundary_weight = weights[&window.lo].max(weights[&window.hi]);
    Ok(OamSpectrum {
        l_in: engine.beam_in().l,
        alpha: engine.transition().alpha,
        r0: d.r0,
        window,
        boundary_weight,
        window_ok: boundary_weight <= window_tail_tol,
        converged: amps.iter().all(|a| a.converged),
        total,
        weights,
        raw: amps.into_iter().map(|a| (a.l_out, a)).collect(),
    })
}

/// `|M(l′)|²` over the window, normalized.
pub fn oam_spectrum(
    beam_in: BesselBeam,
    k_out: f64,
    t: DipoleTransition,
    d: Displacement,
    window: ChannelWindow,
    tol: f64,
) -> Result<OamSpectrum> {
    let engine = ExpansionEngine::new(beam_in, k_out, t, tol, SelectionSign::Plus)?;
    spectrum_from_engine(&engine, d, window, DEFAULT_WINDOW_TAIL_TOL)
}

/// Standard deviation of `l′` under the spectrum weights.
pub fn spectral_spread(s: &OamSpectrum) -> f64 {
    let mean: f64 = s.weights.iter().map(|(&l, &w)| f64::from(l) * w).sum();
    let var: f64 = s
        .weights
        .iter()
        .map(|(&l, &w)| {
            let d = f64::from(l) - mean;
            d * d * w
        })
        .sum();
    var.max(0.0).sqrt()
}

/// The two chiral dipole transitions `α = +1` and `α = −1` with shared radial
/// profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichroicPair {
    pub plus: DipoleTransition,
    pub minus: DipoleTransition,
}

impl DichroicPair {
    pub fn new(plus: DipoleTransition, minus: DipoleTransition) -> Result<Self> {
        let same_profiles = plus.initial.profile == minus.initial.profile
            && plus.final_state.profile == minus.final_state.profile
            && plus.initial.m == minus.initial.m
            && plus.final_state.m == -minus.final_state.m;
        if plus.alpha != 1 || minus.alpha != -1 || !same_profiles {
            return Err(Error::InvalidParameter(
                "dichroic pair needs α = +1 and α = −1 transitions with shared radial profiles".into(),
            ));
        }
        Ok(Self { plus, minus })
    }

    /// `m = 0 → m′ = ∓1` with lowest radial profiles.
    pub fn s_to_p(scale: f64) -> Result<Self> {
        Self::new(
            DipoleTransition::s_to_p(1, scale)?,
            DipoleTransition::s_to_p(-1, scale)?,
        )
    }

    /// Same pair built from an explicit initial state and final radial index.
    pub fn from_states(initial: AtomicState, final_n: u32) -> Result<Self> {
        let scale = initial.profile.scale;
        let m = initial.m;
        Self::new(
            DipoleTransition::new(initial, AtomicState::new(final_n, m - 1, scale)?)?,
            DipoleTransition::new(initial, AtomicState::new(final_n, m + 1, scale)?)?,
        )
    }
}

/// Cached engines for both chiralities over one window.
#[derive(Debug)]
pub struct DichroismStudy {
    plus: ExpansionEngine,
    minus: ExpansionEngine,
    window: ChannelWindow,
}

/// `Σ|M₊|²` and `Σ|M₋|²` at one geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichroicTotals {
    pub plus: f64,
    pub minus: f64,
    pub converged: bool,
}

impl DichroicTotals {
    /// `D = (Σ₊ − Σ₋)/(Σ₊ + Σ₋)`.
    pub fn asymmetry(&self) -> Result<f64> {
        if self.plus < 1e-30 && self.minus < 1e-30 {
            return Err(Error::DegenerateDenominator);
        }
        Ok((self.plus - self.minus) / (self.plus + self.minus))
    }
}

impl DichroismStudy {
    pub fn new(beam_in: BesselBeam, k_out: f64, pair: DichroicPair, window: ChannelWindow, tol: f64) -> Result<Self> {
        Ok(Self {
            plus: ExpansionEngine::new(beam_in, k_out, pair.plus, tol, SelectionSign::Plus)?,
            minus: ExpansionEngine::new(beam_in, k_out, pair.minus, tol, SelectionSign::Plus)?,
            window,
        })
    }

    /// Applies [`ExpansionEngine::with_overrides`] to both engines.
    pub fn with_overrides(self, truncation: Option<usize>, r_max: Option<f64>) -> Result<Self> {
        Ok(Self {
            plus: self.plus.with_overrides(truncation, r_max)?,
            minus: self.minus.with_overrides(truncation, r_max)?,
            window: self.window,
        })
    }

    fn channel_sum(&self, engine: &ExpansionEngine, d: Displacement) -> Result<(f64, bool)> {
        let amps: Vec<ChannelAmplitude> = self
            .window
            .channels()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|l_out| engine.amplitude(l_out, d))
            .collect::<Result<_>>()?;
        Ok((
            amps.iter().map(|a| a.value.norm_sqr()).sum(),
            amps.iter().all(|a| a.converged),
        ))
    }

    pub fn totals(&self, d: Displacement) -> Result<DichroicTotals> {
        let (plus, c1) = self.channel_sum(&self.plus, d)?;
        let (minus, c2) = self.channel_sum(&self.minus, d)?;
        Ok(DichroicTotals {
            plus,
            minus,
            converged: c1 && c2,
        })
    }

    pub fn signal(&self, d: Displacement) -> Result<f64> {
        self.totals(d)?.asymmetry()
    }

    /// Totals averaged over a disk of radius `R_c` with weight `2πR₀ dR₀`,
    /// using an `n`-point Gauss-Legendre rule in `R₀`.
    pub fn cluster_totals(&self, cluster_radius: f64, n_samples: usize) -> Result<DichroicTotals> {
        if !(cluster_radius >= 0.0) || !cluster_radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cluster radius must be >= 0, got {cluster_radius}"
            )));
        }
        if n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
        }
        if cluster_radius == 0.0 {
            return self.totals(Displacement::on_axis());
        }
        let rule = gauss_rule(n_samples, 0.0, cluster_radius)?;
        let area = 0.5 * cluster_radius * cluster_radius;
        let mut acc = DichroicTotals {
            plus: 0.0,
            minus: 0.0,
            converged: true,
        };
        for (&r0, &w) in rule.nodes.iter().zip(&rule.weights) {
            let t = self.totals(Displacement::new(r0)?)?;
            let weight = w * r0 / area;
            acc.plus += weight * t.plus;
            acc.minus += weight * t.minus;
            acc.converged &= t.converged;
        }
        Ok(acc)
    }

    pub fn cluster_point(&self, cluster_radius: f64, n_samples: usize) -> Result<DichroismPoint> {
        let t = self.cluster_totals(cluster_radius, n_samples)?;
        Ok(DichroismPoint {
            radius: cluster_radius,
            d: t.asymmetry()?,
            converged: t.converged,
        })
    }
}

/// `D = (Σ|M₊|² − Σ|M₋|²)/(Σ|M₊|² + Σ|M₋|²)` at a single atom position.
pub fn dichroic_signal(
    beam_in: BesselBeam,
    k_out: f64,
    pair: DichroicPair,
    d: Displacement,
    window: ChannelWindow,
    tol: f64,
) -> Result<f64> {
    DichroismStudy::new(beam_in, k_out, pair, window, tol)?.signal(d)
}

/// One point of a dichroism curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichroismPoint {
    /// `R₀` or cluster radius `R_c`.
    pub radius: f64,
    pub d: f64,
    pub converged: bool,
}

/// Dichroism against atom position or cluster size.
#[derive(Debug, Clone, PartialEq)]
pub struct DichroismCurve {
    pub points: Vec<DichroismPoint>,
    /// SHA-256 over the inputs that determine the curve.
    pub fingerprint: String,
}

/// Incoherent disk average of the dichroic totals, for one cluster radius.
#[allow(clippy::too_many_arguments)]
pub fn cluster_average(
    beam_in: BesselBeam,
    k_out: f64,
    pair: DichroicPair,
    cluster_radius: f64,
    n_samples: usize,
    window: ChannelWindow,
    tol: f64,
) -> Result<DichroismPoint> {
    DichroismStudy::new(beam_in, k_out, pair, window, tol)?.cluster_point(cluster_radius, n_samples)
}

/// Cluster-averaged dichroism for several radii with shared engines.
#[allow(clippy::too_many_arguments)]
pub fn cluster_curve(
    beam_in: BesselBeam,
    k_out: f64,
    pair: DichroicPair,
    radii: &[f64],
    n_samples: usize,
    window: ChannelWindow,
    tol: f64,
) -> Result<DichroismCurve> {
    let study = DichroismStudy::new(beam_in, k_out, pair, window, tol)?;
    let points = radii
        .iter()
        .map(|&rc| study.cluster_point(rc, n_samples))
        .collect::<Result<Vec<_>>>()?;
    let fingerprint = fingerprint(&format!(
        "cluster|{beam_in:?}|{k_out:e}|{pair:?}|{radii:?}|{n_samples}|{window:?}|{tol:e}"
    ));
    Ok(DichroismCurve { points, fingerprint })
}

fn fingerprint(s: &str) -> String {
    Sha256::digest(s.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Off-channel weight at one displacement of a limit study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub r0: f64,
    pub off_channel_weight: f64,
    pub converged: bool,
}

/// Weight outside `l + α` along a displacement sequence decreasing to zero.
pub fn onaxis_limit_study(
    beam_in: BesselBeam,
    k_out: f64,
    t: DipoleTransition,
    r0_sequence: &[f64],
    window: ChannelWindow,
    tol: f64,
) -> Result<Vec<LimitRow>> {
    if r0_sequence.last() != Some(&0.0) || r0_sequence.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidParameter(
            "R0 sequence must be strictly decreasing and end at 0".into(),
        ));
    }
    let engine = ExpansionEngine::new(beam_in, k_out, t, tol, SelectionSign::Plus)?;
    limit_rows(&engine, r0_sequence, window)
}

/// [`onaxis_limit_study`] on an existing engine.
pub fn limit_rows(engine: &ExpansionEngine, r0_sequence: &[f64], window: ChannelWindow) -> Result<Vec<LimitRow>> {
    let allowed = engine.allowed_channel();
    r0_sequence
        .iter()
        .map(|&r0| {
            let s = spectrum_from_engine(engine, Displacement::new(r0)?, window, DEFAULT_WINDOW_TAIL_TOL)?;
            Ok(LimitRow {
                r0,
                off_channel_weight: s.off_channel_weight(allowed),
                converged: s.converged,
            })
        })
        .collect()
}
