use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use super::{ChannelAmplitude, ConvergenceReport};
use crate::error::{Error, Result};
use crate::model::{BesselBeam, DipoleTransition, Displacement};
use crate::specfun::{jn, Integrator};

/// Tightest tolerance the direct oracle accepts.
pub const DIRECT_MIN_TOL: f64 = 1e-6;

/// Multipole orders kept for the far-zone potential.
const FAR_ORDERS: usize = 40;

/// Brute-force lab-frame evaluation of the matrix element.
///
/// The Coulomb potential of the transition charge `u u′ e^{iαφ_q}` at lab
/// point `s` is integrated in polar coordinates centred on `s` itself,
/// `V(s) = ∫_0^∞ dρ ∫_0^{2π} dθ (u u′ e^{iαφ_q})(s + ρ e_θ)`, where the `1/ρ`
/// of the kernel cancels the Jacobian. Rotating the frame so that `s` lies on
/// the +x axis gives `V(s) = e^{iαφ_s} W(|s|)` with real `W`. The probe
/// integral over `(r, Φ)` then runs in lab coordinates with the exact kernel;
/// neither the beam shift expansion nor the kernel Fourier coefficients enter.
#[derive(Debug)]
pub struct DirectOracle {
    beam_in: BesselBeam,
    k_out: f64,
    transition: DipoleTransition,
    tol: f64,
    /// Beyond this distance the charge lies entirely inside `|q| < |s|`.
    sigma_far: f64,
    /// `A_j μ_j` with `A_j = ∫_0^{2π} cos(αψ) P_j(cos ψ) dψ`.
    far: Vec<f64>,
    w_scale: f64,
    reference: OnceLock<f64>,
    cache: Mutex<HashMap<u64, f64>>,
}

impl DirectOracle {
    pub fn new(beam_in: BesselBeam, k_out: f64, transition: DipoleTransition, tol: f64) -> Result<Self> {
        if !(tol >= DIRECT_MIN_TOL) || !tol.is_finite() {
            return Err(Error::ToleranceTooTight {
                tol,
                min: DIRECT_MIN_TOL,
            });
        }
        if !(k_out > 0.0) || !k_out.is_finite() {
            return Err(Error::InvalidParameter(format!("k_out must be > 0, got {k_out}")));
        }
        let alpha = transition.alpha;
        let far = (0..FAR_ORDERS)
            .map(|j| {
                let a = angular_legendre_weight(alpha, j);
                if a.abs() < 1e-13 {
                    Ok(0.0)
                } else {
                    Ok(a * transition.moment(j as u32)?)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut oracle = Self {
            beam_in,
            k_out,
            transition,
            tol,
            sigma_far: transition.support_radius(),
            far,
            w_scale: 0.0,
            reference: OnceLock::new(),
            cache: Mutex::new(HashMap::new()),
        };
        let mut w_scale: f64 = 0.0;
        for &s in &[0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0] {
            w_scale = w_scale.max(oracle.radial_potential(s)?.abs());
        }
        oracle.w_scale = w_scale.max(1e-300);
        Ok(oracle)
    }

    /// `W(σ)`: the potential at distance `σ` from the atom with the phase
    /// `e^{iαφ_s}` removed.
    pub fn radial_potential(&self, sigma: f64) -> Result<f64> {
        if sigma >= self.sigma_far {
            return Ok(self.far_potential(sigma));
        }
        let key = sigma.to_bits();
        if let Some(&v) = self.cache.lock().expect("potential cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = self.near_potential(sigma)?;
        self.cache.lock().expect("potential cache poisoned").insert(key, v);
        Ok(v)
    }

    fn far_potential(&self, sigma: f64) -> f64 {
        let inv = 1.0 / sigma;
        let mut power = inv;
        let mut sum = 0.0;
        for &w in &self.far {
            sum += w * power;
            power *= inv;
        }
        sum
    }

    fn near_potential(&self, sigma: f64) -> Result<f64> {
        let t = self.transition;
        let order = t.alpha.unsigned_abs();
        let inner_tol = 1e-3 * self.tol;
        let rho_max = sigma + self.sigma_far;
        let mut failure = None;
        // Symmetry θ → −θ conjugates the phase, so W = 2 ∫_0^π Re(...).
        let res = Integrator::new(1e-2 * self.tol)
            .abs_tol(1e-300)
            .max_subdivisions(2000)
            .integrate_with_breaks(
                |rho| {
                    let inner = Integrator::new(inner_tol)
                        .abs_tol(1e-300)
                        .max_subdivisions(2000)
                        .integrate(
                            |theta| {
                                let qx = sigma + rho * theta.cos();
                                let c = (0.5 * theta).cos();
                                let d = sigma - rho;
                                let q = (d * d + 4.0 * sigma * rho * c * c).sqrt();
                                if q == 0.0 {
                                    return 0.0;
                                }
                                t.pair_density(q) * chebyshev_t(order, qx / q)
                            },
                            0.0,
                            PI,
                        );
                    match inner {
                        Ok(r) => 2.0 * r.value,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    }
                },
                0.0,
                rho_max,
                &[sigma],
            );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(res?.value)
    }

    /// `V(s)` at lab-frame offset `s` from the atom.
    fn potential(&self, sx: f64, sy: f64) -> Result<Complex64> {
        let sigma = sx.hypot(sy);
        if sigma == 0.0 {
            let w = self.radial_potential(0.0)?;
            return Ok(if self.transition.alpha == 0 {
                Complex64::new(w, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            });
        }
        let w = self.radial_potential(sigma)?;
        let phase = Complex64::new(sx / sigma, sy / sigma).powi(self.transition.alpha);
        Ok(phase * w)
    }

    /// `|2π ∫ r J_l(k_ρr) J_{l+α}(k_ρ′r) W(r) dr|`: the on-axis allowed
    /// amplitude, used as the absolute error scale.
    pub fn reference_scale(&self) -> Result<f64> {
        if let Some(&v) = self.reference.get() {
            return Ok(v);
        }
        let v = self.compute_reference()?;
        Ok(*self.reference.get_or_init(|| v))
    }

    fn compute_reference(&self) -> Result<f64> {
        let l = self.beam_in.l;
        let m = l + self.transition.alpha;
        let r_max = self.cutoff(0.0, 1.0);
        let (k, kp) = (self.beam_in.k_rho, self.k_out);
        let breaks = panel_breaks(0.0, r_max, PI / k.max(kp), &[self.sigma_far]);
        let mut failure = None;
        let res = Integrator::new(1e-2 * self.tol)
            .abs_tol(1e-300)
            .max_subdivisions(breaks.len() * 6 + 500)
            .integrate_with_breaks(
                |r| match self.radial_potential(r) {
                    Ok(w) => r * jn(l, k * r) * jn(m, kp * r) * w,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                },
                0.0,
                r_max,
                &breaks,
            );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(2.0 * PI * res?.value.abs())
    }

    /// Envelope of the probe-integral tail beyond `R` (all terms fall off
    /// like the far potential, `R^{-2}` for a dipole charge).
    fn tail_envelope(&self, r0: f64, big_r: f64) -> f64 {
        let (k, kp) = (self.beam_in.k_rho, self.k_out);
        let sigma = big_r - r0;
        let mut env = 0.0;
        let mut power = 1.0 / sigma;
        for &w in &self.far {
            env += w.abs() * power;
            power /= sigma;
        }
        let osc = 2.0 / (PI * (k * kp).sqrt())
            * (1.0 / (k + kp)
                + if (k - kp).abs() > 1e-12 {
                    1.0 / (k - kp).abs()
                } else {
                    0.0
                });
        2.0 * PI * env * ((1.0 + r0) / (PI * k.min(kp)) + osc)
    }

    /// Outer radial cutoff for a tail envelope below a quarter of the
    /// tolerance relative to `scale`.
    fn cutoff(&self, r0: f64, scale: f64) -> f64 {
        let mut big_r = r0 + (2.0 * self.sigma_far).max(64.0 / self.beam_in.k_rho.min(self.k_out));
        while self.tail_envelope(r0, big_r) > 0.25 * self.tol * scale && big_r < 1e6 {
            big_r *= 1.5;
        }
        big_r
    }

    /// `M(l′)` for an atom at `R₀`.
    pub fn amplitude(&self, l_out: i32, d: Displacement) -> Result<ChannelAmplitude> {
        let l = self.beam_in.l;
        let (k, kp) = (self.beam_in.k_rho, self.k_out);
        let r0 = d.r0;
        let reference = self.reference_scale()?;
        let r_max = self.cutoff(r0, reference);
        let dl = f64::from(l - l_out);
        let w_floor = 1e-3 * self.tol * self.w_scale;
        let mut failure = None;
        let mut evaluations = 0usize;
        let mut inner_converged = true;
        let breaks = panel_breaks(0.0, r_max, PI / k.max(kp), &[r0, r0 + self.sigma_far]);
        let res = Integrator::new(0.3 * self.tol)
            .abs_tol(1e-2 * self.tol * reference)
            .max_subdivisions(breaks.len() * 6 + 500)
            .integrate_with_breaks(
                |r| {
                    let radial = r * jn(l, k * r) * jn(l_out, kp * r);
                    if radial == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let angular = Integrator::new(0.1 * self.tol)
                        .abs_tol(w_floor)
                        .max_subdivisions(1000)
                        .integrate_with_breaks(
                            |phi: f64| match self.potential(r * phi.cos() - r0, r * phi.sin()) {
                                Ok(v) => Complex64::from_polar(1.0, dl * phi) * v,
                                Err(e) => {
                                    failure.get_or_insert(e);
                                    Complex64::new(f64::NAN, 0.0)
                                }
                            },
                            -PI,
                            PI,
                            &[0.0],
                        );
                    match angular {
                        Ok(a) => {
                            evaluations += a.evaluations;
                            inner_converged &= a.converged;
                            a.value * radial
                        }
                        Err(e) => {
                            failure.get_or_insert(e);
                            Complex64::new(f64::NAN, 0.0)
                        }
                    }
                },
                0.0,
                r_max,
                &breaks,
            );
        if let Some(e) = failure {
            return Err(e);
        }
        let res = res?;
        let tail_estimate = res.error + self.tail_envelope(r0, r_max);
        let converged = res.converged && inner_converged && tail_estimate <= self.tol * reference.max(res.value.norm());
        Ok(ChannelAmplitude {
            l_out,
            value: res.value,
            convergence: ConvergenceReport {
                p_truncation: 0,
                terms_used: evaluations,
                quad_tol: self.tol,
                tail_estimate,
                r_max,
            },
            converged,
        })
    }
}

/// `A_j = ∫_0^{2π} cos(αψ) P_j(cos ψ) dψ`. The integrand is a trigonometric
/// polynomial of degree `j + |α|`, which the periodic trapezoid rule with
/// more nodes than that integrates exactly.
fn angular_legendre_weight(alpha: i32, j: usize) -> f64 {
    let nodes = 4 * (j + alpha.unsigned_abs() as usize) + 16;
    let h = 2.0 * PI / nodes as f64;
    (0..nodes)
        .map(|i| {
            let psi = i as f64 * h;
            (f64::from(alpha) * psi).cos() * legendre_p(j, psi.cos())
        })
        .sum::<f64>()
        * h
}

fn legendre_p(j: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if j == 0 {
        return prev;
    }
    for n in 1..j {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `T_n(x) = cos(n arccos x)` by recurrence.
fn chebyshev_t(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn panel_breaks(a: f64, b: f64, h: f64, extra: &[f64]) -> Vec<f64> {
    let count = (b / h).ceil() as usize;
    let mut v: Vec<f64> = (1..count).map(|i| a + i as f64 * h).filter(|&x| x < b).collect();
    v.extend(extra.iter().copied().filter(|&x| x > a && x < b));
    v
}

/// `M(l′)` with `l′ = beam_out.l` by direct lab-frame quadrature.
pub fn matrix_element_direct(
    beam_in: BesselBeam,
    beam_out: BesselBeam,
    t: DipoleTransition,
    d: Displacement,
    tol: f64,
) -> Result<ChannelAmplitude> {
    DirectOracle::new(beam_in, beam_out.k_rho, t, tol)?.amplitude(beam_out.l, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_weights() {
        // A_0 = 2π δ_{α0}; A_1 = π for |α| = 1; A_j = 0 for j < |α|.
        assert!((angular_legendre_weight(0, 0) - 2.0 * PI).abs() < 1e-13);
        assert!(angular_legendre_weight(1, 0).abs() < 1e-13);
        assert!((angular_legendre_weight(1, 1) - PI).abs() < 1e-13);
        assert!((angular_legendre_weight(-1, 1) - PI).abs() < 1e-13);
        assert!(angular_legendre_weight(2, 1).abs() < 1e-13);
        assert!(angular_legendre_weight(1, 2).abs() < 1e-13);
    }

    #[test]
    fn chebyshev_matches_cosine() {
        for n in 0..6 {
            for &a in &[0.1, 1.0, 2.5] {
                let x: f64 = f64::cos(a);
                assert!((chebyshev_t(n, x) - (n as f64 * a).cos()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rejects_tight_tolerance() {
        let t = DipoleTransition::s_to_p(1, 1.0).unwrap();
        let b = BesselBeam::new(1, 1.0).unwrap();
        assert!(matches!(
            DirectOracle::new(b, 1.0, t, 1e-8),
            Err(Error::ToleranceTooTight { .. })
        ));
    }

    #[test]
    fn near_and_far_potential_agree() {
        let t = DipoleTransition::s_to_p(1, 1.0).unwrap();
        let b = BesselBeam::new(1, 1.0).unwrap();
        let o = DirectOracle::new(b, 1.0, t, 1e-6).unwrap();
        for &s in &[23.0, 38.0] {
            let near = o.near_potential(s).unwrap();
            let far = o.far_potential(s);
            assert!((near - far).abs() < 1e-7 * far.abs(), "σ={s}: {near} vs {far}");
        }
    }
}
