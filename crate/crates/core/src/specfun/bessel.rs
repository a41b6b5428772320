use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Largest order accepted by [`bessel_j`].
const MAX_ORDER: i64 = 1_000_000;

/// Rescaling threshold for the backward recurrence.
const BIG: f64 = 1e200;
const BIG_INV: f64 = 1e-200;

/// Bessel function of the first kind `J_n(x)` for integer `n` and `x >= 0`.
///
/// Moderate arguments use Miller's backward recurrence normalized by the sum
/// rule `J_0 + 2 Σ J_2k = 1`; large arguments (`x ≫ n²`) use the Hankel
/// asymptotic expansion. Negative orders follow `J_{-n} = (-1)^n J_n`.
pub fn bessel_j(n: i32, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j requires finite x >= 0, got {x}")));
    }
    if (n as i64).abs() > MAX_ORDER {
        return Err(Error::Domain(format!("bessel_j order {n} exceeds {MAX_ORDER}")));
    }
    Ok(jn(n, x))
}

/// `J_n(x)` for every `n` in `n_min..=n_max`, from a single recurrence sweep.
pub fn bessel_j_range(n_min: i32, n_max: i32, x: f64) -> Result<Vec<f64>> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j_range requires finite x >= 0, got {x}")));
    }
    if n_min > n_max {
        return Err(Error::InvalidParameter(format!("empty order range {n_min}..={n_max}")));
    }
    if (n_min as i64).abs().max((n_max as i64).abs()) > MAX_ORDER {
        return Err(Error::Domain(format!("bessel_j_range order exceeds {MAX_ORDER}")));
    }
    let top = n_min.unsigned_abs().max(n_max.unsigned_abs()) as usize;
    let nonneg = if use_asymptotic(top, x) {
        (0..=top).map(|k| hankel_asymptotic(k as u32, x)).collect()
    } else {
        miller(top, x)
    };
    Ok((n_min..=n_max)
        .map(|n| {
            let v = nonneg[n.unsigned_abs() as usize];
            if n < 0 && n % 2 != 0 {
                -v
            } else {
                v
            }
        })
        .collect())
}

/// Unchecked evaluation for internal hot loops; `x` must be non-negative.
pub(crate) fn jn(n: i32, x: f64) -> f64 {
    debug_assert!(x >= 0.0, "jn called with negative argument {x}");
    let order = n.unsigned_abs();
    let v = if x == 0.0 {
        if order == 0 {
            1.0
        } else {
            0.0
        }
    } else if use_asymptotic(order as usize, x) {
        hankel_asymptotic(order, x)
    } else {
        miller_single(order as usize, x)
    };
    if n < 0 && order % 2 == 1 {
        -v
    } else {
        v
    }
}

fn use_asymptotic(order: usize, x: f64) -> bool {
    let n = order as f64;
    x >= 40.0 && x >= 1.5 * n * n
}

/// Starting index for the backward recurrence: far enough past the turning
/// point that the minimal solution dominates by more than machine precision.
fn miller_start(order: usize, x: f64) -> usize {
    let base = (order as f64).max(x.ceil()) + 20.0 + (8.0 * x.cbrt()).ceil();
    let m = base as usize;
    m + (m & 1)
}

fn miller_single(order: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let start = miller_start(order, x);
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k, unnormalized
    let mut sum = 0.0;
    let mut result = if start == order { cur } else { 0.0 };
    for k in (1..=start).rev() {
        let prev = (k as f64) * two_over_x * cur - next;
        next = cur;
        cur = prev;
        if (k - 1) % 2 == 0 && k - 1 != 0 {
            sum += cur;
        }
        if k - 1 == order {
            result = cur;
        }
        if cur.abs() > BIG {
            cur *= BIG_INV;
            next *= BIG_INV;
            sum *= BIG_INV;
            result *= BIG_INV;
        }
    }
    let norm = cur + 2.0 * sum;
    result / norm
}

fn miller(top: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; top + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = miller_start(top, x);
    let two_over_x = 2.0 / x;
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut sum = 0.0;
    if start <= top {
        out[start] = cur;
    }
    for k in (1..=start).rev() {
        let prev = (k as f64) * two_over_x * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx % 2 == 0 && idx != 0 {
            sum += cur;
        }
        if idx <= top {
            out[idx] = cur;
        }
        if cur.abs() > BIG {
            cur *= BIG_INV;
            next *= BIG_INV;
            sum *= BIG_INV;
            let hi = top.min(start);
            for v in &mut out[idx.min(hi)..=hi] {
                *v *= BIG_INV;
            }
        }
    }
    let norm = cur + 2.0 * sum;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Hankel expansion `J_n(x) ≈ sqrt(2/(πx)) (P cos χ − Q sin χ)`,
/// `χ = x − (n/2 + 1/4)π`.
fn hankel_asymptotic(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..200u32 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * eight_x);
        let mag = term.abs();
        if mag > last {
            break;
        }
        // Signs follow (+, +, −, −, +, +, ...) for (P, Q, P, Q, ...) pairs.
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if mag < 1e-17 * (p.abs() + q.abs()) {
            break;
        }
        last = mag;
    }
    let (cos_chi, sin_chi) = shifted_cos_sin(x, order);
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// `cos` and `sin` of `x − (2n+1)π/4` without rounding the phase shift.
fn shifted_cos_sin(x: f64, order: u32) -> (f64, f64) {
    let eighth = ((2 * (order as u64) + 1) % 8) as usize;
    let (c, s) = EIGHTHS[eighth];
    let (sx, cx) = x.sin_cos();
    (cx * c + sx * s, sx * c - cx * s)
}

/// `(cos kπ/4, sin kπ/4)` for `k = 0..8`.
const EIGHTHS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (0.0, 1.0),
    (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (-1.0, 0.0),
    (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    (0.0, -1.0),
    (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Trapezoidal rule on `J_n(x) = (1/π) ∫_0^π cos(nτ − x sin τ) dτ`; the
    /// integrand is a smooth periodic function, so the rule converges
    /// geometrically once the node count exceeds `n + x`.
    fn integral_oracle(n: i32, x: f64) -> f64 {
        let m = 2 * ((n.unsigned_abs() as f64 + x) as usize + 64);
        let h = PI / m as f64;
        let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for i in 1..m {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    fn power_series(n: u32, x: f64) -> f64 {
        let half = x / 2.0;
        let mut term = half.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut s = term;
        for k in 1..200 {
            term *= -half * half / (k as f64 * (k + n) as f64);
            s += term;
            if term.abs() < 1e-20 * s.abs() {
                break;
            }
        }
        s
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(-3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn power_series_value_at_one() {
        let expected = power_series(2, 1.0);
        assert!((expected - 0.114_903_484_931_900_5).abs() < 1e-15);
        assert!((bessel_j(2, 1.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn negative_argument_is_a_domain_error() {
        assert!(matches!(bessel_j(1, -0.5), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(1, f64::NAN), Err(Error::Domain(_))));
        assert!(bessel_j(2_000_000, 1.0).is_err());
    }

    #[test]
    fn agrees_with_integral_representation() {
        let xs = [
            1e-6, 0.01, 0.3, 1.0, 2.5, 7.0, 19.9, 40.0, 41.0, 99.5, 250.0, 600.0, 1000.0,
        ];
        let ns = [0, 1, 2, 3, 5, 8, 13, 21, 34, 60, 120];
        for &x in &xs {
            for &n in &ns {
                let got = jn(n, x);
                let want = integral_oracle(n, x);
                assert!((got - want).abs() <= 1e-13, "J_{n}({x}): got {got:e}, oracle {want:e}");
            }
        }
    }

    #[test]
    fn asymptotic_branch_matches_recurrence_at_the_switch() {
        for n in 0..6u32 {
            for &x in &[40.0, 55.0, 80.0, 300.0, 999.0] {
                if !use_asymptotic(n as usize, x) {
                    continue;
                }
                let a = hankel_asymptotic(n, x);
                let m = miller_single(n as usize, x);
                assert!((a - m).abs() < 2e-15, "n={n} x={x}: {a:e} vs {m:e}");
            }
        }
    }

    #[test]
    fn range_matches_single_evaluations() {
        for &x in &[0.0, 0.7, 5.0, 33.0, 120.0, 3000.0] {
            let v = bessel_j_range(-12, 15, x).unwrap();
            for (i, n) in (-12..=15).enumerate() {
                assert!((v[i] - jn(n, x)).abs() < 1e-14, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn tiny_values_for_high_order_small_argument() {
        let v = jn(50, 1e-3);
        assert!((0.0..1e-200).contains(&v));
        let w = jn(40, 1.0);
        let want = power_series(40, 1.0);
        assert!(((w - want) / want).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn parity(n in -60i32..60, x in 0.0f64..500.0) {
            let a = jn(-n, x);
            let b = if n % 2 == 0 { jn(n, x) } else { -jn(n, x) };
            prop_assert!((a - b).abs() <= 1e-15);
        }

        #[test]
        fn recurrence_residual(n in -50i32..=50, x in 0.1f64..100.0) {
            let r = jn(n - 1, x) + jn(n + 1, x) - 2.0 * n as f64 / x * jn(n, x);
            prop_assert!(r.abs() < 1e-10, "residual {r:e}");
        }

        #[test]
        fn bounded_by_one(n in -200i32..200, x in 0.0f64..5000.0) {
            prop_assert!(jn(n, x).abs() <= 1.0 + 1e-15);
        }
    }
}
