use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use super::ConvergenceReport;
use crate::error::{Error, Result};
use crate::kernel::{kernel_coefficient, multipole_coefficients};
use crate::model::DipoleTransition;
use crate::specfun::{jn, Integrator};

/// Relative tolerance of the inner `q` integral. Fixed so that cached
/// potential values never depend on which caller asked first.
const POTENTIAL_TOL: f64 = 1e-11;
/// Highest multipole order kept in the far field.
const MULTIPOLE_ORDERS: u32 = 60;
/// Radial cutoff never grows beyond this many units of `1/k`.
const MAX_KR: f64 = 2.0e5;

/// Radial charge density `u(q) u′(q)` entering the inner integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairDensity {
    Transition(DipoleTransition),
    /// `w δ(q)/(2πq)`: a point charge at the atom, for closed-form checks.
    PointAtOrigin {
        weight: f64,
    },
}

impl PairDensity {
    /// Radius beyond which the density is negligible (zero for a point).
    pub fn support_radius(&self) -> f64 {
        match self {
            PairDensity::Transition(t) => t.support_radius(),
            PairDensity::PointAtOrigin { .. } => 0.0,
        }
    }

    /// `∫ q^{j+1} ρ(q) dq`.
    pub fn moment(&self, j: u32) -> Result<f64> {
        match self {
            PairDensity::Transition(t) => t.moment(j),
            PairDensity::PointAtOrigin { weight } => Ok(if j == 0 { *weight } else { 0.0 }),
        }
    }
}

/// The transition potential `G(r′) = ∫ q dq ρ(q) K_λ(r′, q)`.
///
/// It does not depend on the beam orders, on `p` or on `R₀`, so one instance
/// serves every radial integral of a study. Inside the support radius it is
/// integrated numerically (and memoized per `r′`); outside, the density lies
/// entirely at `q < r′` and the multipole series `Σ_j g_j r′^{−(j+1)}` is exact
/// to rounding.
#[derive(Debug)]
pub struct TransitionPotential {
    lambda: i32,
    density: PairDensity,
    r_near: f64,
    far: Vec<f64>,
    cache: Mutex<HashMap<u64, f64>>,
}

impl TransitionPotential {
    pub fn new(density: PairDensity, lambda: i32) -> Result<Self> {
        let c = multipole_coefficients(lambda, MULTIPOLE_ORDERS);
        let far = c
            .iter()
            .enumerate()
            .map(|(j, &cj)| {
                if cj == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(cj * density.moment(j as u32)?)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            lambda,
            density,
            r_near: density.support_radius(),
            far,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn lambda(&self) -> i32 {
        self.lambda
    }

    /// Radius from which the multipole form is used.
    pub fn near_radius(&self) -> f64 {
        self.r_near
    }

    /// `g_j` for `j = 0..=60`.
    pub fn far_coefficients(&self) -> &[f64] {
        &self.far
    }

    /// Multipole form `Σ_j g_j r^{−(j+1)}`.
    pub fn far_field(&self, r: f64) -> f64 {
        let inv = 1.0 / r;
        let mut power = inv;
        let mut sum = 0.0;
        let mut seen = false;
        for &g in &self.far {
            if g != 0.0 {
                let term = g * power;
                sum += term;
                if seen && term.abs() <= 1e-18 * sum.abs() {
                    break;
                }
                seen = true;
            }
            power *= inv;
        }
        sum
    }

    /// `G(r′)`.
    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("radius must be finite and >= 0, got {r}")));
        }
        if r >= self.r_near {
            return Ok(self.far_field(r));
        }
        let key = r.to_bits();
        if let Some(&v) = self.cache.lock().expect("potential cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = self.near_field(r)?;
        self.cache.lock().expect("potential cache poisoned").insert(key, v);
        Ok(v)
    }

    fn near_field(&self, r: f64) -> Result<f64> {
        let t = match &self.density {
            PairDensity::Transition(t) => t,
            PairDensity::PointAtOrigin { .. } => unreachable!("point density has no near zone"),
        };
        let lambda = self.lambda;
        let integrand = |q: f64| match kernel_coefficient(lambda, r, q) {
            Ok(k) => q * t.pair_density(q) * k,
            // A node within rounding of the logarithmic diagonal carries no
            // measurable weight.
            Err(Error::DiagonalSingularity(_)) => 0.0,
            Err(_) => f64::NAN,
        };
        // Unit-normalized states keep G of order one; the absolute floor
        // stops refinement where G passes through zero.
        let res = Integrator::new(POTENTIAL_TOL)
            .abs_tol(POTENTIAL_TOL * 1e-3)
            .max_subdivisions(4000)
            .integrate_with_breaks(integrand, 0.0, self.r_near, &[r])?;
        Ok(res.value)
    }
}

/// A radial double integral with its truncation bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialIntegral {
    pub value: f64,
    /// Quadrature error plus the bound on the neglected radial tail.
    pub tail_estimate: f64,
    /// `∫ |integrand|` over the integrated range, a scale for the error.
    pub abs_scale: f64,
    pub r_max: f64,
    pub converged: bool,
}

/// `∫_0^∞ r′ dr′ J_{order_r}(k_in r′) J_{order_out}(k_out r′) G(r′)` with
/// `G(r′) = ∫ q dq ρ(q) K_λ(r′, q)`.
pub fn radial_double_integral(
    order_r: i32,
    order_out: i32,
    k_in: f64,
    k_out: f64,
    density: &PairDensity,
    lambda: i32,
    tol: f64,
) -> Result<(f64, ConvergenceReport)> {
    let pot = TransitionPotential::new(*density, lambda)?;
    let ri = radial_integral(&pot, order_r, order_out, k_in, k_out, tol, None)?;
    let report = ConvergenceReport {
        p_truncation: 0,
        terms_used: 1,
        quad_tol: tol,
        tail_estimate: ri.tail_estimate,
        r_max: ri.r_max,
    };
    if !ri.converged {
        return Err(Error::NonConvergence(format!(
            "radial integral ({order_r}, {order_out}) did not converge: tail estimate {:e}",
            ri.tail_estimate
        )));
    }
    Ok((ri.value, report))
}

/// Core of [`radial_double_integral`], reusing a prepared potential.
///
/// The range splits into the near zone `[0, r_near]` (numerical `G`), a far
/// zone `[r_near, R]` (multipole `G`, Kronrod panels per half oscillation),
/// and the tail beyond `R`. For `k_in = k_out` the non-oscillatory part of
/// `J_n J_m` is integrated analytically over the tail from the large-argument
/// expansion and the oscillating part gets its leading endpoint term; `R`
/// doubles until the bound on what remains is below a quarter of the
/// tolerance or `R` reaches `r_cap` (default `2·10⁵/min(k, k′)`).
pub(crate) fn radial_integral(
    pot: &TransitionPotential,
    n: i32,
    m: i32,
    k: f64,
    kp: f64,
    tol: f64,
    r_cap: Option<f64>,
) -> Result<RadialIntegral> {
    if let Some(c) = r_cap {
        if !(c > pot.near_radius()) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "r_max must exceed the near-zone radius {}, got {c}",
                pot.near_radius()
            )));
        }
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {tol}")));
    }
    if !(k > 0.0 && kp > 0.0) || !k.is_finite() || !kp.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "wavenumbers must be finite and > 0, got {k}, {kp}"
        )));
    }
    let half_period = PI / k.max(kp);
    let quad_tol = 0.1 * tol;
    let bessel_product = |r: f64| r * jn(n, k * r) * jn(m, kp * r);

    let mut value = 0.0;
    let mut error = 0.0;
    let mut abs_scale = 0.0;
    let mut converged = true;

    let r_near = pot.near_radius();
    if r_near > 0.0 {
        let mut failure = None;
        let breaks = panel_breaks(0.0, r_near, half_period);
        let res = Integrator::new(quad_tol)
            .abs_tol(1e-300)
            .max_subdivisions(breaks.len() * 8 + 400)
            .integrate_with_breaks(
                |r| match pot.value(r) {
                    Ok(g) => bessel_product(r) * g,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                },
                0.0,
                r_near,
                &breaks,
            );
        if let Some(e) = failure {
            return Err(e);
        }
        let res = res?;
        value += res.value;
        error += res.error;
        abs_scale += res.abs_value;
        converged &= res.converged;
    }

    let k_min = k.min(kp);
    let x_start = 2.0 * f64::from(n * n + m * m) + 20.0;
    let mut lo = r_near;
    let mut hi = (2.0 * r_near).max(x_start / k_min).max(64.0 / k_min);
    let cap = r_cap.unwrap_or(MAX_KR / k_min);
    hi = hi.min(cap);
    loop {
        let breaks = panel_breaks(lo, hi, half_period);
        // Later segments carry little net weight; judge them against what
        // has been accumulated so far rather than against themselves.
        let floor = 0.1 * quad_tol * value.abs().max(1e-3 * abs_scale);
        let res = Integrator::new(quad_tol)
            .abs_tol(floor.max(1e-300))
            .max_subdivisions(breaks.len() * 8 + 400)
            .integrate_with_breaks(|r| bessel_product(r) * pot.far_field(r), lo, hi, &breaks)?;
        value += res.value;
        error += res.error;
        abs_scale += res.abs_value;
        converged &= res.converged;

        let tail = tail_beyond(pot, n, m, k, kp, hi);
        let total = value + tail.correction;
        let budget = 0.25 * tol * total.abs().max(1e-3 * abs_scale);
        if tail.bound <= budget || hi >= cap {
            let ok = tail.bound <= budget;
            return Ok(RadialIntegral {
                value: total,
                tail_estimate: tail.bound + error,
                abs_scale,
                r_max: hi,
                converged: converged && ok,
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
    }
}

/// Panel edges at multiples of `h` strictly inside `(a, b)`.
fn panel_breaks(a: f64, b: f64, h: f64) -> Vec<f64> {
    let first = (a / h).floor() as i64 + 1;
    let last = (b / h).ceil() as i64 - 1;
    (first..=last)
        .map(|i| i as f64 * h)
        .filter(|&x| x > a && x < b)
        .collect()
}

struct Tail {
    /// Analytic estimate of the integral beyond `R`.
    correction: f64,
    /// Bound on what `correction` misses.
    bound: f64,
}

/// `sin(x − qπ/2)` with the quarter turns applied exactly.
fn sin_quarter(x: f64, q: i32) -> f64 {
    match q.rem_euclid(4) {
        0 => x.sin(),
        1 => -x.cos(),
        2 => -x.sin(),
        _ => x.cos(),
    }
}

/// Tail of `∫_R^∞ r J_n(kr) J_m(k′r) Σ_j g_j r^{−(j+1)} dr`.
///
/// With `J_n(x) ≈ √(2/πx) cos(x − nπ/2 − π/4)` the integrand is
/// `Σ_j g_j/(π√(kk′)) r^{−(j+1)} [cos(ω₋r + φ₋) + cos(ω₊r + φ₊)]`,
/// `ω± = k ± k′`. Oscillating pieces get the leading integration-by-parts
/// term `−R^{−p} sin(ωR + φ)/ω`. For `k = k′` the `ω₋` piece is the
/// non-oscillatory mean of `J_n(x) J_m(x)`, taken to second order:
/// `(1/πx)[c₀ + c₁/x + c₂/x²]` with `δ = (m−n)π/2`, `c₀ = cos δ`,
/// `c₁ = sin δ (m² − n²)/2`, `c₂ = cos δ [(4n² + 4m² − 2)/16 − (n² − m²)²/8]`.
fn tail_beyond(pot: &TransitionPotential, n: i32, m: i32, k: f64, kp: f64, big_r: f64) -> Tail {
    let g = pot.far_coefficients();
    let (nf, mf) = (f64::from(n), f64::from(m));
    let (n2, m2) = (nf * nf, mf * mf);
    let spread = (1.0 + n2 + m2) / k.min(kp);
    let pref = 1.0 / (PI * (k * kp).sqrt());
    let same_k = (k - kp).abs() <= 1e-12 * k.max(kp);

    // (ω, x = ωR, quarter turns q) so that the phase is x − qπ/2.
    let mut waves = vec![(k + kp, (k + kp) * big_r, n + m + 1)];
    if !same_k {
        let w = k - kp;
        if w > 0.0 {
            waves.push((w, w * big_r, n - m));
        } else {
            waves.push((-w, -w * big_r, m - n));
        }
    }

    let mut correction = 0.0;
    let mut bound = 0.0;
    let mut power = 1.0 / big_r; // R^{−(j+1)}
    for (j, &gj) in g.iter().enumerate() {
        if gj != 0.0 {
            let a = gj * pref;
            let p = (j + 1) as f64;
            for &(w, x, q) in &waves {
                correction -= a * power * sin_quarter(x, q) / w;
                bound += 2.0 * (a * power).abs() / (w * big_r) * (p / w + spread);
            }
        }
        power /= big_r;
        if power < 1e-300 {
            break;
        }
    }
    if !same_k {
        return Tail { correction, bound };
    }

    let (cos_d, sin_d) = match (m - n).rem_euclid(4) {
        0 => (1.0, 0.0),
        1 => (0.0, 1.0),
        2 => (-1.0, 0.0),
        _ => (0.0, -1.0),
    };
    let c = [
        cos_d,
        sin_d * (m2 - n2) / 2.0,
        cos_d * ((4.0 * n2 + 4.0 * m2 - 2.0) / 16.0 - (n2 - m2) * (n2 - m2) / 8.0),
    ];
    let next_coeff = (1.0 + n2 + m2).powi(3) / 8.0;
    for (j, &gj) in g.iter().enumerate() {
        if gj == 0.0 {
            continue;
        }
        for (i, &ci) in c.iter().enumerate() {
            if ci == 0.0 {
                continue;
            }
            // ∫_R^∞ g_j c_i / (π k^{i+1}) r^{−s} dr with s = j + i + 1.
            let s = (j + i + 1) as i32;
            if s == 1 {
                return Tail {
                    correction: 0.0,
                    bound: f64::INFINITY,
                };
            }
            correction += gj * ci / (PI * k.powi(i as i32 + 1)) * big_r.powi(1 - s) / f64::from(s - 1);
        }
        let s = (j + 4) as i32;
        bound += (gj * next_coeff / (PI * k.powi(4))).abs() * big_r.powi(1 - s) / f64::from(s - 1);
    }
    Tail { correction, bound }
}
