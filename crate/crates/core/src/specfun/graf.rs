use num_complex::Complex64;

use super::bessel::{bessel_j_range, jn};
use crate::error::{Error, Result};

/// Shift coefficients `J_p(k_ρR₀)` for `p ∈ [−P, P]`.
///
/// With the atom on the +x axis at distance `R₀` and atom-centred
/// coordinates `r′ = r − R₀x̂` (both azimuths measured from +x), a Bessel beam
/// re-expands as
///
/// ```text
/// J_l(k|r′ + R₀x̂|) e^{ilΦ} = Σ_p (−1)^p J_p(kR₀) J_{l+p}(kr′) e^{i(l+p)φ′}
/// ```
///
/// The stored coefficients are the plain `J_p(kR₀)`; the `(−1)^p` shift sign
/// is applied by [`GrafCoefficients::shift`].
#[derive(Debug, Clone, PartialEq)]
pub struct GrafCoefficients {
    pub center_order: i32,
    pub argument: f64,
    pub truncation: usize,
    /// `J_p(argument)` for `p = −truncation ..= truncation`.
    pub coefficients: Vec<f64>,
    /// Upper bound on `Σ_{|p|>P} |J_p(argument)|`.
    pub tail_bound: f64,
}

impl GrafCoefficients {
    /// `J_p(argument)`, zero outside the truncation window.
    pub fn coefficient(&self, p: i32) -> f64 {
        let big_p = self.truncation as i32;
        if p.abs() > big_p {
            0.0
        } else {
            self.coefficients[(p + big_p) as usize]
        }
    }

    /// `(−1)^p J_p(argument)`: the coefficient multiplying `J_{l+p}(kr′) e^{i(l+p)φ′}`.
    pub fn shift(&self, p: i32) -> f64 {
        let c = self.coefficient(p);
        if p.rem_euclid(2) == 1 {
            -c
        } else {
            c
        }
    }

    pub fn orders(&self) -> std::ops::RangeInclusive<i32> {
        let big_p = self.truncation as i32;
        -big_p..=big_p
    }

    /// Partial Bessel sum rule `Σ_{|p|≤P} J_p²`, which tends to 1.
    pub fn sum_of_squares(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }
}

/// Default truncation `P = ceil(x + 8 + 4 x^{1/3})`, zero on axis.
pub fn truncation_heuristic(argument: f64) -> usize {
    if argument == 0.0 {
        0
    } else {
        (argument + 8.0 + 4.0 * argument.cbrt()).ceil() as usize
    }
}

/// Bound on `Σ_{|p|>P} |J_p(x)|` from the ratio bound
/// `J_{ν+1}/J_ν < x / (2(ν+1) − x)` valid past the turning point.
fn tail_bound(big_p: usize, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let rho = x / (2.0 * (big_p as f64 + 2.0) - x);
    if !(0.0..1.0).contains(&rho) {
        return f64::INFINITY;
    }
    2.0 * jn(big_p as i32 + 1, x).abs() / (1.0 - rho)
}

/// Build the shift coefficients for a beam of OAM `l` displaced by
/// `k_rho_r0 = k_ρR₀`, extending the heuristic truncation until the discarded
/// terms are below `tail_tol`.
pub fn graf_coefficients(l: i32, k_rho_r0: f64, tail_tol: f64) -> Result<GrafCoefficients> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tail_tol must be > 0, got {tail_tol}")));
    }
    if !(k_rho_r0 >= 0.0) || !k_rho_r0.is_finite() {
        return Err(Error::Domain(format!(
            "k_rho*R0 must be finite and >= 0, got {k_rho_r0}"
        )));
    }
    let mut big_p = truncation_heuristic(k_rho_r0);
    let mut bound = tail_bound(big_p, k_rho_r0);
    while bound >= tail_tol {
        big_p += 1;
        bound = tail_bound(big_p, k_rho_r0);
    }
    let p = big_p as i32;
    let coefficients = (-p..=p).map(|q| jn(q, k_rho_r0)).collect();
    Ok(GrafCoefficients {
        center_order: l,
        argument: k_rho_r0,
        truncation: big_p,
        coefficients,
        tail_bound: bound,
    })
}

/// Truncated re-expansion of `J_l(k_ρ r) e^{ilΦ}` about an atom at `R₀x̂`,
/// evaluated at atom-centred polar coordinates `(r′, φ′)`.
pub fn beam_reconstruct(
    l: i32,
    k_rho: f64,
    r0: f64,
    r_prime: f64,
    phi_prime: f64,
    truncation: usize,
) -> Result<Complex64> {
    if !(r_prime >= 0.0) || !(r0 >= 0.0) || !(k_rho > 0.0) {
        return Err(Error::Domain(format!(
            "beam_reconstruct needs r' >= 0, R0 >= 0, k > 0 (got {r_prime}, {r0}, {k_rho})"
        )));
    }
    let p = truncation as i32;
    let shift = bessel_j_range(-p, p, k_rho * r0)?;
    let centred = bessel_j_range(l - p, l + p, k_rho * r_prime)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, pp) in (-p..=p).enumerate() {
        let sign = if pp.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
        let amp = sign * shift[i] * centred[i];
        if amp != 0.0 {
            acc += Complex64::from_polar(amp, (l + pp) as f64 * phi_prime);
        }
    }
    Ok(acc)
}
