use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;

use super::radial::{radial_integral, PairDensity, RadialIntegral, TransitionPotential};
use super::{ChannelAmplitude, ConvergenceReport, SelectionSign};
use crate::error::{Error, Result};
use crate::model::{BesselBeam, DipoleTransition, Displacement};
use crate::specfun::{graf_coefficients, jn, GrafCoefficients};

/// Shift-expansion evaluator for one (beam pair, transition, tolerance).
///
/// After the selection delta, `M(l′) = 2π Σ_p (−1)^{p+p′} J_p(k_ρR₀) J_{p′}(k_ρ′R₀) I(l+p)`
/// with `p′ = l + p + α − l′` and
/// `I(n) = ∫ r′dr′ J_n(k_ρr′) J_{n+α}(k_ρ′r′) G(r′)`. `I(n)` depends on
/// neither `l′` nor `R₀`, so it is computed once per `n` and cached; the cache
/// holds pure functions of `n` and never changes results.
#[derive(Debug)]
pub struct ExpansionEngine {
    beam_in: BesselBeam,
    k_out: f64,
    transition: DipoleTransition,
    tol: f64,
    sign: SelectionSign,
    potential: TransitionPotential,
    truncation: Option<usize>,
    r_max: Option<f64>,
    cache: Mutex<BTreeMap<i32, RadialIntegral>>,
}

impl ExpansionEngine {
    pub fn new(
        beam_in: BesselBeam,
        k_out: f64,
        transition: DipoleTransition,
        tol: f64,
        sign: SelectionSign,
    ) -> Result<Self> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {tol}")));
        }
        if !(k_out > 0.0) || !k_out.is_finite() {
            return Err(Error::InvalidParameter(format!("k_out must be > 0, got {k_out}")));
        }
        // K_λ is even in λ, so the λ = −α coefficient equals K_α.
        let potential = TransitionPotential::new(PairDensity::Transition(transition), transition.alpha)?;
        Ok(Self {
            beam_in,
            k_out,
            transition,
            tol,
            sign,
            potential,
            truncation: None,
            r_max: None,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    /// Fixes the shift truncation `P` and/or caps the radial integration
    /// range instead of choosing them adaptively.
    pub fn with_overrides(mut self, truncation: Option<usize>, r_max: Option<f64>) -> Result<Self> {
        if let Some(r) = r_max {
            if !(r > self.potential.near_radius()) || !r.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "r_max must exceed the atomic support radius {}, got {r}",
                    self.potential.near_radius()
                )));
            }
        }
        self.truncation = truncation;
        self.r_max = r_max;
        self.cache.lock().expect("radial cache poisoned").clear();
        Ok(self)
    }

    pub fn beam_in(&self) -> BesselBeam {
        self.beam_in
    }

    pub fn k_out(&self) -> f64 {
        self.k_out
    }

    pub fn transition(&self) -> DipoleTransition {
        self.transition
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn selection_sign(&self) -> SelectionSign {
        self.sign
    }

    /// The channel that carries all weight on axis.
    pub fn allowed_channel(&self) -> i32 {
        self.sign.allowed_channel(self.beam_in.l, self.transition.alpha)
    }

    /// `I(n)`, cached.
    pub fn radial(&self, n: i32) -> Result<RadialIntegral> {
        if let Some(r) = self.cache.lock().expect("radial cache poisoned").get(&n) {
            return Ok(*r);
        }
        let m = n + self.sign.effective_alpha(self.transition.alpha);
        let r = radial_integral(
            &self.potential,
            n,
            m,
            self.beam_in.k_rho,
            self.k_out,
            0.1 * self.tol,
            self.r_max,
        )?;
        self.cache.lock().expect("radial cache poisoned").insert(n, r);
        Ok(r)
    }

    /// `|M(l + α)|` on axis, `2π|I(l)|`: the natural amplitude scale.
    pub fn reference_scale(&self) -> Result<f64> {
        Ok(2.0 * PI * self.radial(self.beam_in.l)?.value.abs())
    }

    /// `M(l′)` for an atom at `R₀`.
    pub fn amplitude(&self, l_out: i32, d: Displacement) -> Result<ChannelAmplitude> {
        self.amplitude_with(l_out, d, self.truncation)
    }

    /// `M(l′)` with the shift sum cut at exactly `|p| ≤ truncation`.
    pub fn amplitude_truncated(&self, l_out: i32, d: Displacement, truncation: usize) -> Result<ChannelAmplitude> {
        self.amplitude_with(l_out, d, Some(truncation))
    }

    fn amplitude_with(&self, l_out: i32, d: Displacement, truncation: Option<usize>) -> Result<ChannelAmplitude> {
        let l = self.beam_in.l;
        let alpha = self.sign.effective_alpha(self.transition.alpha);
        let x_in = self.beam_in.k_rho * d.r0;
        let x_out = self.k_out * d.r0;
        let mut shift = graf_coefficients(l, x_in, 0.01 * self.tol)?;
        if let Some(p) = truncation {
            shift = truncate_shift(shift, p);
        }
        let big_p = shift.truncation as i32;
        let offset = l
            .checked_add(alpha)
            .and_then(|v| v.checked_sub(l_out))
            .ok_or(Error::InconsistentSelection { l, alpha, l_out })?;

        let mut sum = 0.0;
        let mut tail = 0.0;
        let mut terms = 0;
        let mut r_max: f64 = 0.0;
        let mut converged = true;
        let mut largest_radial: f64 = 0.0;
        for p in shift.orders() {
            let jp = shift.shift(p);
            let p_out = p + offset;
            let jq = signed_bessel(p_out, x_out);
            let weight = jp * jq;
            if weight == 0.0 {
                continue;
            }
            let ri = self.radial(l + p)?;
            sum += weight * ri.value;
            tail += weight.abs() * ri.tail_estimate;
            largest_radial = largest_radial.max(ri.value.abs() + ri.tail_estimate);
            r_max = r_max.max(ri.r_max);
            converged &= ri.converged;
            terms += 1;
        }
        // Discarded shift orders |p| > P.
        tail += shift.tail_bound * largest_radial.max(self.radial(l)?.value.abs());

        let value = 2.0 * PI * sum;
        let tail_estimate = 2.0 * PI * tail;
        let scale = value.abs().max(self.reference_scale()?);
        converged &= tail_estimate <= self.tol * scale;
        Ok(ChannelAmplitude {
            l_out,
            value: Complex64::new(value, 0.0),
            convergence: ConvergenceReport {
                p_truncation: big_p as usize,
                terms_used: terms,
                quad_tol: self.tol,
                tail_estimate,
                r_max,
            },
            converged,
        })
    }
}

/// Re-cut the shift coefficients at `p`, recomputing the tail bound from the
/// terms actually dropped.
fn truncate_shift(mut g: GrafCoefficients, p: usize) -> GrafCoefficients {
    let x = g.argument;
    if p <= g.truncation {
        let drop = g.truncation - p;
        g.coefficients = g.coefficients[drop..g.coefficients.len() - drop].to_vec();
    } else {
        let big = p as i32;
        g.coefficients = (-big..=big).map(|q| jn(q, x)).collect();
    }
    g.truncation = p;
    let big = p as i32;
    // Direct sum of the dropped magnitudes; they decay super-exponentially.
    g.tail_bound = if x == 0.0 {
        0.0
    } else {
        (big + 1..big + 200).map(|q| 2.0 * jn(q, x).abs()).sum()
    };
    g
}

/// `(−1)^p J_p(x)`, exactly `δ_{p0}` at `x = 0`.
fn signed_bessel(p: i32, x: f64) -> f64 {
    if x == 0.0 {
        return if p == 0 { 1.0 } else { 0.0 };
    }
    let v = jn(p, x);
    if p.rem_euclid(2) == 1 {
        -v
    } else {
        v
    }
}

/// `M(l′)` with `l′ = beam_out.l` through the shift expansion.
pub fn matrix_element_expansion(
    beam_in: BesselBeam,
    beam_out: BesselBeam,
    t: DipoleTransition,
    d: Displacement,
    tol: f64,
) -> Result<ChannelAmplitude> {
    ExpansionEngine::new(beam_in, beam_out.k_rho, t, tol, SelectionSign::Plus)?.amplitude(beam_out.l, d)
}
