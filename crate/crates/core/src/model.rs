//! Physical state definitions: Bessel probe beams, 2D hydrogen-like atomic
//! bound states, dipole transitions between them, and the displaced-atom
//! geometry.
//!
//! Radial profiles are the bound states of the 2D hydrogen problem with Bohr
//! radius `2a`:
//!
//! ```text
//! u_{n,|m|}(q) = N x^{|m|} L_n^{(2|m|)}(x) e^{−x/2},   x = 2q/(νa),   ν = 2n + 2|m| + 1,
//! N² = (2/(νa))² n! / ((n + 2|m|)! ν)
//! ```
//!
//! normalized as `∫ u² q dq = 1`; the azimuthal factor `e^{imφ}/√(2π)` carries
//! the angular normalization. The ground state is `2e^{−q/a}/a`. States sharing
//! `|m|` with different `n` are eigenstates of one Hamiltonian and hence
//! orthogonal.

use crate::error::{Error, Result};
use crate::specfun::Integrator;

/// Probe state `J_l(k_ρ r) e^{ilΦ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselBeam {
    pub l: i32,
    pub k_rho: f64,
}

impl BesselBeam {
    pub fn new(l: i32, k_rho: f64) -> Result<Self> {
        if !(k_rho > 0.0) || !k_rho.is_finite() {
            return Err(Error::InvalidParameter(format!("k_rho must be > 0, got {k_rho}")));
        }
        Ok(Self { l, k_rho })
    }
}

/// Radial profile selector within the built-in family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    /// Radial index (number of radial nodes).
    pub n: u32,
    /// Radial scale `a`.
    pub scale: f64,
    /// Overall sign, ±1.
    pub sign: f64,
}

impl RadialProfile {
    pub fn new(n: u32, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radial scale must be > 0, got {scale}"
            )));
        }
        Ok(Self { n, scale, sign: 1.0 })
    }
}

/// Atomic bound state `u(q) e^{imφ_q}/√(2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicState {
    pub m: i32,
    pub profile: RadialProfile,
    norm: f64,
}

impl AtomicState {
    pub fn new(n: u32, m: i32, scale: f64) -> Result<Self> {
        let profile = RadialProfile::new(n, scale)?;
        let abs_m = m.unsigned_abs();
        let nu = f64::from(2 * n + 2 * abs_m + 1);
        let log_ratio: f64 = (n + 1..=n + 2 * abs_m).map(|k| f64::from(k).ln()).sum::<f64>() + nu.ln();
        let norm = 2.0 / (nu * scale) * (-0.5 * log_ratio).exp();
        Ok(Self { m, profile, norm })
    }

    /// Same state with the radial profile multiplied by −1.
    pub fn negated(mut self) -> Self {
        self.profile.sign = -self.profile.sign;
        self
    }

    pub fn normalization_constant(&self) -> f64 {
        self.norm
    }

    /// `ν = 2n + 2|m| + 1`; the profile decays as `e^{−q/(νa)}`.
    pub fn shell(&self) -> f64 {
        f64::from(2 * self.profile.n + 2 * self.m.unsigned_abs() + 1)
    }

    /// Radial part `u(q)`.
    pub fn radial(&self, q: f64) -> f64 {
        let abs_m = self.m.unsigned_abs();
        let x = 2.0 * q / (self.shell() * self.profile.scale);
        let lag = laguerre(self.profile.n, f64::from(2 * abs_m), x);
        self.profile.sign * self.norm * x.powi(abs_m as i32) * lag * (-0.5 * x).exp()
    }

    /// Radius beyond which `u²` is negligible (below about 1e-30 after
    /// polynomial growth).
    pub fn support_radius(&self) -> f64 {
        let extra = 4.0 * f64::from(self.profile.n + self.m.unsigned_abs());
        (35.0 + extra) * self.shell() * self.profile.scale
    }
}

/// Generalized Laguerre polynomial `L_n^{(β)}(x)` by upward recurrence.
fn laguerre(n: u32, beta: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + beta - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + beta - x) * cur - (kf + beta) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Radial part `u(q)` of an atomic state.
pub fn radial_u(state: &AtomicState, q: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(Error::Domain(format!("radial coordinate must be >= 0, got {q}")));
    }
    Ok(state.radial(q))
}

/// Transition `ψ_e → ψ_e′` with `α = m − m′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleTransition {
    pub initial: AtomicState,
    pub final_state: AtomicState,
    pub alpha: i32,
}

impl DipoleTransition {
    /// Builds the transition, enforcing orthogonality of the internal states.
    /// For `m ≠ m′` orthogonality is exact through the azimuthal factor; for
    /// `m = m′` the radial overlap is checked numerically.
    pub fn new(initial: AtomicState, final_state: AtomicState) -> Result<Self> {
        let t = Self {
            initial,
            final_state,
            alpha: initial.m - final_state.m,
        };
        if t.alpha == 0 {
            let overlap = radial_overlap(&initial, &final_state)?;
            if overlap.abs() > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "initial and final states are not orthogonal (overlap {overlap:e})"
                )));
            }
        }
        Ok(t)
    }

    /// Default s-like → p-like transition (`n = 0` both, `m = 0 → m′ = −α`).
    pub fn s_to_p(alpha: i32, scale: f64) -> Result<Self> {
        Self::new(AtomicState::new(0, 0, scale)?, AtomicState::new(0, -alpha, scale)?)
    }

    pub fn is_dipole(&self) -> bool {
        self.alpha.abs() == 1
    }

    /// `u(q) u′(q)`; both profiles are real.
    pub fn pair_density(&self, q: f64) -> f64 {
        self.initial.radial(q) * self.final_state.radial(q)
    }

    /// Radius beyond which `u u′` is negligible; the pair decays as
    /// `e^{−q(1/ν + 1/ν′)/a}`.
    pub fn support_radius(&self) -> f64 {
        let rate = 1.0 / self.initial.shell() + 1.0 / self.final_state.shell();
        let degree = self.initial.profile.n
            + self.initial.m.unsigned_abs()
            + self.final_state.profile.n
            + self.final_state.m.unsigned_abs();
        (70.0 + 8.0 * f64::from(degree)) / rate * self.initial.profile.scale.max(self.final_state.profile.scale)
    }

    /// Radial moment `∫ q^{j+1} u u′ dq`.
    pub fn moment(&self, j: u32) -> Result<f64> {
        let upper = self.support_radius();
        let r = Integrator::new(1e-13).abs_tol(1e-300).integrate(
            |q| q.powi(j as i32 + 1) * self.pair_density(q),
            0.0,
            upper,
        )?;
        Ok(r.value)
    }

    /// Mean transition radius `∫ q |u u′| q dq / ∫ |u u′| q dq`.
    pub fn mean_radius(&self) -> Result<f64> {
        let upper = self.support_radius();
        let integ = Integrator::new(1e-12);
        let num = integ.integrate(|q| q * q * self.pair_density(q).abs(), 0.0, upper)?;
        let den = integ.integrate(|q| q * self.pair_density(q).abs(), 0.0, upper)?;
        Ok(num.value / den.value)
    }
}

/// `u(q)·u′(q)` for a transition.
pub fn radial_pair_density(t: &DipoleTransition, q: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(Error::Domain(format!("radial coordinate must be >= 0, got {q}")));
    }
    Ok(t.pair_density(q))
}

/// `∫ u u′ q dq`.
pub fn radial_overlap(a: &AtomicState, b: &AtomicState) -> Result<f64> {
    let upper = a.support_radius().max(b.support_radius());
    let r = Integrator::new(1e-13)
        .abs_tol(1e-15)
        .integrate(|q| q * a.radial(q) * b.radial(q), 0.0, upper)?;
    Ok(r.value)
}

/// Position `R₀` of the atom on the +x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub r0: f64,
}

impl Displacement {
    pub fn new(r0: f64) -> Result<Self> {
        if !(r0 >= 0.0) || !r0.is_finite() {
            return Err(Error::InvalidParameter(format!("displacement must be >= 0, got {r0}")));
        }
        Ok(Self { r0 })
    }

    pub fn on_axis() -> Self {
        Self { r0: 0.0 }
    }
}
