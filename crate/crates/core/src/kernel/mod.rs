//! The exact inverse-distance kernel between probe and atomic electron in
//! atom-centred polar coordinates, its azimuthal Fourier coefficients, and the
//! selection delta produced by the atomic azimuthal integral.

mod table;

use std::f64::consts::PI;

pub use table::{GridSpec, KernelCoefficientTable, TABLE_FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::specfun::Integrator;

/// `F(r′, q, φ) = [r′² + q² − 2r′q cos φ]^{−1/2}`.
pub fn kernel_f(r_prime: f64, q: f64, phi: f64) -> Result<f64> {
    if !(r_prime >= 0.0) || !(q >= 0.0) {
        return Err(Error::Domain(format!("radii must be >= 0, got r'={r_prime}, q={q}")));
    }
    let d2 = distance_squared(r_prime, q, phi);
    if d2 <= 0.0 {
        return Err(Error::SingularKernel { r_prime, q, phi });
    }
    Ok(1.0 / d2.sqrt())
}

/// `(r′ − q)² + 4r′q sin²(φ/2)`: the squared distance without the
/// cancellation of the cosine form near coincidence.
#[inline]
fn distance_squared(r_prime: f64, q: f64, phi: f64) -> f64 {
    let d = r_prime - q;
    let s = (0.5 * phi).sin();
    d * d + 4.0 * r_prime * q * s * s
}

/// `K_λ(r′, q) = ∫_0^{2π} e^{iλφ} F(r′, q, φ) dφ`, real by evenness of `F`.
///
/// Computed by adaptive quadrature on `[0, π]` with geometric split points
/// near `φ = 0`, where the integrand peaks with width `|r′ − q|/√(r′q)`.
pub fn kernel_fourier(lambda: i32, r_prime: f64, q: f64, tol: f64) -> Result<f64> {
    if !(r_prime >= 0.0) || !(q >= 0.0) {
        return Err(Error::Domain(format!("radii must be >= 0, got r'={r_prime}, q={q}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {tol}")));
    }
    let (lo, hi) = if r_prime < q { (r_prime, q) } else { (q, r_prime) };
    if hi == 0.0 {
        return Err(Error::SingularKernel { r_prime, q, phi: 0.0 });
    }
    if lo == 0.0 {
        return Ok(if lambda == 0 { 2.0 * PI / hi } else { 0.0 });
    }
    if hi - lo < 1e-14 * hi {
        return Err(Error::DiagonalSingularity(hi));
    }
    let width = (hi - lo) / (hi * lo).sqrt();
    let mut breaks = Vec::new();
    let mut b = width;
    while b < PI {
        breaks.push(b);
        b *= 4.0;
    }
    let order = lambda.unsigned_abs() as f64;
    if order > 4.0 {
        let step = PI / order;
        let mut x = step;
        while x < PI {
            breaks.push(x);
            x += step;
        }
    }
    let r = Integrator::new(tol)
        .abs_tol(1e-300)
        .max_subdivisions(4000)
        .integrate_with_breaks(
            |phi| (order * phi).cos() / distance_squared(r_prime, q, phi).sqrt(),
            0.0,
            PI,
            &breaks,
        )?;
    Ok(2.0 * r.value)
}

/// `K_λ(r′, q)` in closed form, for use inside nested integrals.
///
/// Well-separated radii (`r_< / r_> < 1/2`) use the multipole series; otherwise
/// `K_0 = 4K(k)/(r′+q)` and `K_1 = 4[(2 − k²)K(k) − 2E(k)]/(k²(r′+q))` with
/// `k² = 4r′q/(r′+q)²`, and higher orders follow the Legendre degree
/// recurrence `(λ+½)K_{λ+1} = 2λzK_λ − (λ−½)K_{λ−1}`, `z = (r′²+q²)/(2r′q)`.
pub fn kernel_coefficient(lambda: i32, r_prime: f64, q: f64) -> Result<f64> {
    if !(r_prime >= 0.0) || !(q >= 0.0) {
        return Err(Error::Domain(format!("radii must be >= 0, got r'={r_prime}, q={q}")));
    }
    let (lo, hi) = if r_prime < q { (r_prime, q) } else { (q, r_prime) };
    if hi == 0.0 {
        return Err(Error::SingularKernel { r_prime, q, phi: 0.0 });
    }
    if hi - lo < 1e-14 * hi {
        return Err(Error::DiagonalSingularity(hi));
    }
    let order = lambda.unsigned_abs();
    let t = lo / hi;
    if t < 0.5 {
        return Ok(multipole_sum(order, t) / hi);
    }
    let sum = hi + lo;
    let k2 = 4.0 * t / ((1.0 + t) * (1.0 + t));
    let kc = (1.0 - t) / (1.0 + t);
    let (ke, ee) = elliptic_ke(k2, kc);
    let k0 = 4.0 * ke / sum;
    if order == 0 {
        return Ok(k0);
    }
    let k1 = 4.0 * ((2.0 - k2) * ke - 2.0 * ee) / (k2 * sum);
    let z = (1.0 + t * t) / (2.0 * t);
    let (mut prev, mut cur) = (k0, k1);
    for l in 1..order {
        let lf = l as f64;
        let next = (2.0 * lf * z * cur - (lf - 0.5) * prev) / (lf + 0.5);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `Σ_j 2π c_{(j−λ)/2} c_{(j+λ)/2} t^j` for `t < 1`.
fn multipole_sum(order: u32, t: f64) -> f64 {
    let mut hi_c = 1.0;
    for k in 0..order {
        hi_c *= (2 * k + 1) as f64 / (2 * k + 2) as f64;
    }
    let mut lo_c = 1.0;
    let t2 = t * t;
    let mut power = t.powi(order as i32);
    let mut sum = 0.0;
    let mut i = 0u32;
    loop {
        let term = lo_c * hi_c * power;
        sum += term;
        if term <= 1e-17 * sum || i > 2000 {
            break;
        }
        let a = i;
        let b = i + order;
        lo_c *= (2 * a + 1) as f64 / (2 * a + 2) as f64;
        hi_c *= (2 * b + 1) as f64 / (2 * b + 2) as f64;
        power *= t2;
        i += 1;
    }
    2.0 * PI * sum
}

/// Complete elliptic integrals `(K(k), E(k))` by the arithmetic-geometric
/// mean, taking both `k²` and `k′ = √(1−k²)` to avoid cancellation near `k = 1`.
fn elliptic_ke(k2: f64, kc: f64) -> (f64, f64) {
    let mut a = 1.0f64;
    let mut b = kc;
    let mut c2_sum = 0.5 * k2;
    let mut weight = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        let next_a = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next_a;
        weight *= 2.0;
        c2_sum += weight * c * c;
        if c.abs() <= 1e-17 * a {
            break;
        }
    }
    let ke = PI / (2.0 * a);
    (ke, ke * (1.0 - c2_sum))
}

/// The atomic azimuthal integral `∫_0^{2π} e^{i(λ+α)φ_q} dφ_q`: `2π` when
/// `λ = −α`, exactly zero otherwise.
pub fn azimuthal_selection(lambda: i32, alpha: i32) -> f64 {
    if lambda == -alpha {
        2.0 * PI
    } else {
        0.0
    }
}

/// Far-field expansion of `K_λ` for `q < r′`:
/// `K_λ(r′, q) = (2π/r′) Σ_{j ≥ |λ|, j ≡ λ (mod 2)} c_{(j−λ)/2} c_{(j+λ)/2} (q/r′)^j`,
/// with `c_k = (2k choose k)/4^k`. Returns the coefficients
/// `2π c_{(j−λ)/2} c_{(j+λ)/2}` for `j = 0..=j_max` (zero where absent).
pub fn multipole_coefficients(lambda: i32, j_max: u32) -> Vec<f64> {
    let order = lambda.unsigned_abs();
    let mut central = vec![1.0f64; (j_max as usize) / 2 + order as usize + 2];
    for k in 1..central.len() {
        central[k] = central[k - 1] * (2 * k - 1) as f64 / (2 * k) as f64;
    }
    (0..=j_max)
        .map(|j| {
            if j < order || (j - order) % 2 == 1 {
                0.0
            } else {
                let lo = ((j - order) / 2) as usize;
                let hi = ((j + order) / 2) as usize;
                2.0 * PI * central[lo] * central[hi]
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `Q_{ν}(z)` for half-integer `ν = |λ| − 1/2` from the hypergeometric
    /// series `Q_ν(z) = √π Γ(ν+1) / (Γ(ν+3/2) (2z)^{ν+1})
    /// ₂F₁((ν+2)/2, (ν+1)/2; ν+3/2; 1/z²)`.
    fn legendre_q_half(order: u32, z: f64) -> f64 {
        let nu = order as f64 - 0.5;
        let (a, b, c) = ((nu + 2.0) / 2.0, (nu + 1.0) / 2.0, nu + 1.5);
        let x = 1.0 / (z * z);
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        while k < 2e6 {
            term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            k += 1.0;
        }
        // Γ(ν+1)/Γ(ν+3/2) with ν+1 = order + 1/2 and ν+3/2 = order + 1.
        let mut gamma_ratio = PI.sqrt(); // Γ(1/2)/Γ(1)
        for i in 0..order {
            gamma_ratio *= (i as f64 + 0.5) / (i as f64 + 1.0);
        }
        PI.sqrt() * gamma_ratio / (2.0 * z).powf(nu + 1.0) * sum
    }

    fn closed_form(lambda: i32, r: f64, q: f64) -> f64 {
        let z = (r * r + q * q) / (2.0 * r * q);
        2.0 / (r * q).sqrt() * legendre_q_half(lambda.unsigned_abs(), z)
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_f(2.0, 0.0, 0.7).unwrap(), 0.5);
        assert!((kernel_f(1.0, 1.0, PI).unwrap() - 0.5).abs() < 1e-15);
        assert!((kernel_f(3.0, 4.0, PI / 2.0).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(kernel_f(1.0, 1.0, 0.0), Err(Error::SingularKernel { .. })));
        assert!(kernel_f(-1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn kernel_lower_bound() {
        for &(r, q, phi) in &[(0.3, 2.0, 0.1), (5.0, 5.0, 3.0), (1.0, 1.2, 0.0)] {
            assert!(kernel_f(r, q, phi).unwrap() >= 1.0 / (r + q));
        }
    }

    #[test]
    fn fourier_examples() {
        assert!((kernel_fourier(0, 2.0, 0.0, 1e-12).unwrap() - PI).abs() < 1e-15);
        assert_eq!(kernel_fourier(1, 2.0, 0.0, 1e-12).unwrap(), 0.0);
        let v = kernel_fourier(1, 1.0, 0.5, 1e-12).unwrap();
        let want = closed_form(1, 1.0, 0.5);
        assert!(((v - want) / want).abs() < 1e-10, "{v} vs {want}");
        assert!(matches!(
            kernel_fourier(1, 1.0, 1.0, 1e-10),
            Err(Error::DiagonalSingularity(_))
        ));
    }

    #[test]
    fn closed_form_cross_check_on_random_points() {
        // Deterministic pseudo-random sample of off-diagonal points.
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for lambda in 0..=2 {
            for _ in 0..20 {
                let r = 0.1 + 9.9 * next();
                let ratio = 0.05 + 0.85 * next();
                let q = if next() < 0.5 { r * ratio } else { r / ratio };
                let v = kernel_fourier(lambda, r, q, 1e-12).unwrap();
                let want = closed_form(lambda, r, q);
                assert!(((v - want) / want).abs() < 1e-8, "λ={lambda} r={r} q={q}");
            }
        }
    }

    #[test]
    fn near_diagonal_is_finite_and_large() {
        let a = kernel_fourier(1, 1.0, 1.0 + 1e-8, 1e-10).unwrap();
        let b = kernel_fourier(1, 1.0, 1.0 + 1e-4, 1e-10).unwrap();
        assert!(a.is_finite() && a > b);
        // Logarithmic divergence: K ≈ 2 ln(1/δ) + O(1).
        assert!(((a - b) - 2.0 * 1e4f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn multipole_series_matches_quadrature() {
        for lambda in 0..=3 {
            let coeffs = multipole_coefficients(lambda, 120);
            for &(r, q) in &[(4.0, 1.0), (10.0, 3.0), (2.0, 0.2)] {
                let t: f64 = q / r;
                let series: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * t.powi(j as i32))
                    .sum::<f64>()
                    / r;
                let quad = kernel_fourier(lambda, r, q, 1e-13).unwrap();
                assert!(((series - quad) / quad).abs() < 1e-11, "λ={lambda}: {series} vs {quad}");
            }
        }
    }

    #[test]
    fn multipole_decay() {
        for lambda in 0..=2 {
            let r = 10.0;
            let base = kernel_fourier(lambda, r, 0.1 * r, 1e-12).unwrap();
            let lower = kernel_fourier(lambda, r, 0.05 * r, 1e-12).unwrap();
            let ratio = lower / base;
            let expected = 0.5f64.powi(lambda);
            assert!(
                (ratio / expected - 1.0).abs() < 0.1,
                "λ={lambda}: {ratio} vs {expected}"
            );
        }
    }

    #[test]
    fn closed_form_evaluation_matches_quadrature_and_oracle() {
        for lambda in 0..=5 {
            for &t in &[0.02, 0.3, 0.499, 0.501, 0.7, 0.9, 0.99, 0.9999] {
                for &r in &[0.3, 2.0, 17.0] {
                    let q = r * t;
                    let fast = kernel_coefficient(lambda, r, q).unwrap();
                    let slow = kernel_fourier(lambda, r, q, 1e-13).unwrap();
                    // The quadrature error is relative to the monopole scale 2π/r_>.
                    let scale = slow.abs().max(2.0 * PI / r * 1e-2);
                    assert!(
                        (fast - slow).abs() < 1e-11 * scale,
                        "λ={lambda} t={t}: {fast} vs {slow}"
                    );
                    assert_eq!(fast, kernel_coefficient(-lambda, q, r).unwrap());
                    if lambda <= 2 && t < 0.95 {
                        let want = closed_form(lambda, r, q);
                        assert!(((fast - want) / want).abs() < 1e-11);
                    }
                }
            }
        }
        assert!(matches!(
            kernel_coefficient(0, 1.0, 1.0),
            Err(Error::DiagonalSingularity(_))
        ));
        assert!((kernel_coefficient(0, 2.0, 0.0).unwrap() - PI).abs() < 1e-15);
        assert_eq!(kernel_coefficient(3, 2.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn selection_delta() {
        assert_eq!(azimuthal_selection(-1, 1), 2.0 * PI);
        assert_eq!(azimuthal_selection(0, 1), 0.0);
        assert_eq!(azimuthal_selection(2, -2), 2.0 * PI);
    }

    proptest! {
        #[test]
        fn fourier_symmetry(lambda in -3i32..=3, a in 0.05f64..8.0, ratio in 0.05f64..0.95) {
            let b = a * ratio;
            let k1 = kernel_fourier(lambda, a, b, 1e-11).unwrap();
            let k2 = kernel_fourier(lambda, b, a, 1e-11).unwrap();
            let k3 = kernel_fourier(-lambda, a, b, 1e-11).unwrap();
            prop_assert!((k1 - k2).abs() <= 1e-10 * k1.abs());
            prop_assert!((k1 - k3).abs() <= 1e-10 * k1.abs());
            prop_assert!(k1 >= 0.0);
        }
    }
}
