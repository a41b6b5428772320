//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the report is always printed in order.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vortex_oam::specfun::{beam_reconstruct, graf_coefficients};
use vortex_oam::spectra::spectrum_from_engine;
use vortex_oam::{
    azimuthal_selection, kernel_fourier, onaxis_limit_study, spectral_spread, BesselBeam, ChannelWindow, DichroicPair,
    DichroismStudy, DipoleTransition, DirectOracle, Displacement, ExpansionEngine, SelectionSign,
};

const WINDOW: ChannelWindow = ChannelWindow { lo: -6, hi: 8 };
const TOL: f64 = 1e-6;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn engine(l: i32, alpha: i32) -> ExpansionEngine {
    let t = DipoleTransition::s_to_p(alpha, 1.0).unwrap();
    ExpansionEngine::new(BesselBeam::new(l, 1.0).unwrap(), 1.0, t, TOL, SelectionSign::Plus).unwrap()
}

fn at(r0: f64) -> Displacement {
    Displacement::new(r0).unwrap()
}

/// `J_n(x) = (1/2π) ∮ cos(nτ − x sin τ) dτ` by the trapezoid rule, which is
/// spectrally accurate for this periodic integrand.
fn bessel_oracle(n: i32, x: f64) -> f64 {
    let m = 512;
    let h = 2.0 * PI / f64::from(m);
    (0..m)
        .map(|i| {
            let t = f64::from(i) * h;
            (f64::from(n) * t - x * t.sin()).cos()
        })
        .sum::<f64>()
        / f64::from(m)
}

/// `∮ e^{iλφ} / |r − q| dφ = (2/√(rq)) Q_{|λ|−1/2}(χ)`, `χ = (r² + q²)/(2rq)`,
/// with `Q_μ` from its hypergeometric series in `1/χ²`.
fn kernel_oracle(lambda: i32, r: f64, q: f64) -> f64 {
    let l = lambda.unsigned_abs();
    let chi = (r * r + q * q) / (2.0 * r * q);
    let mu = f64::from(l) - 0.5;
    // Γ(l + 1/2) / Γ(l + 1) = √π (2l − 1)!! / (2^l l!)
    let mut gamma_ratio = PI.sqrt();
    for k in 1..=l {
        gamma_ratio *= (2.0 * f64::from(k) - 1.0) / (2.0 * f64::from(k));
    }
    let (a, b, c) = ((mu + 2.0) / 2.0, (mu + 1.0) / 2.0, mu + 1.5);
    let w = 1.0 / (chi * chi);
    let (mut term, mut sum): (f64, f64) = (1.0, 1.0);
    let mut n = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * w;
        sum += term;
        n += 1.0;
    }
    let q_mu = PI.sqrt() * gamma_ratio * sum / (2.0 * chi).powf(mu + 1.0);
    2.0 / (r * q).sqrt() * q_mu
}

fn criterion_1() -> Verdict {
    let mut bad = 0;
    for lambda in -5..=5 {
        for alpha in -5..=5 {
            let want = if lambda == -alpha { 2.0 * PI } else { 0.0 };
            bad += usize::from(azimuthal_selection(lambda, alpha) != want);
        }
    }
    verdict(bad == 0, format!("{} of 121 (λ, α) pairs exact", 121 - bad))
}

fn criterion_2() -> Verdict {
    let mut worst_weight: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for alpha in [1, -1] {
        let allowed = 1 + alpha;
        let s = spectrum_from_engine(&engine(1, alpha), at(0.0), WINDOW, 1e-3).unwrap();
        for (&l, &w) in &s.weights {
            let want = if l == allowed { 1.0 } else { 0.0 };
            worst_weight = worst_weight.max((w - want).abs());
        }
        let t = DipoleTransition::s_to_p(alpha, 1.0).unwrap();
        let oracle = DirectOracle::new(BesselBeam::new(1, 1.0).unwrap(), 1.0, t, 1e-6).unwrap();
        let main = oracle.amplitude(allowed, at(0.0)).unwrap().value.norm();
        for dl in [-2, -1, 1, 2] {
            let off = oracle.amplitude(allowed + dl, at(0.0)).unwrap().value.norm();
            worst_ratio = worst_ratio.max(off / main);
        }
    }
    verdict(
        worst_weight < 1e-12 && worst_ratio < 1e-6,
        format!("max weight deviation {worst_weight:.2e} (< 1e-12), direct off/allowed {worst_ratio:.2e} (< 1e-6)"),
    )
}

fn criterion_3() -> Verdict {
    let t = DipoleTransition::s_to_p(1, 1.0).unwrap();
    let e = engine(1, 1);
    let oracle = DirectOracle::new(BesselBeam::new(1, 1.0).unwrap(), 1.0, t, 1e-4).unwrap();
    let reference = e.reference_scale().unwrap();
    let cases: Vec<(f64, i32)> = [0.0, 0.5, 2.0].iter().flat_map(|&r| [(r, 2), (r, 1)]).collect();
    let diffs: Vec<f64> = cases
        .par_iter()
        .map(|&(r0, l)| (oracle.amplitude(l, at(r0)).unwrap().value - e.amplitude(l, at(r0)).unwrap().value).norm())
        .collect();
    let worst = diffs.iter().copied().fold(0.0, f64::max) / reference;
    let budget = 2.0 * (1e-6 + 1e-4);
    verdict(
        worst <= budget,
        format!("max |ΔM|/reference {worst:.3e} over 6 cases (budget {budget:.3e})"),
    )
}

fn criterion_4() -> Verdict {
    let s = spectrum_from_engine(&engine(1, 1), at(2.0), WINDOW, 1e-3).unwrap();
    let populated = s.weights.values().filter(|&&w| w > 0.01).count();
    verdict(
        populated >= 3,
        format!("{populated} channels above 0.01 at R0 = 2 (need >= 3)"),
    )
}

fn criterion_5() -> Verdict {
    let t = DipoleTransition::s_to_p(1, 1.0).unwrap();
    let rows = onaxis_limit_study(
        BesselBeam::new(1, 1.0).unwrap(),
        1.0,
        t,
        &[2.0, 1.0, 0.5, 0.25, 0.0],
        WINDOW,
        TOL,
    )
    .unwrap();
    let w: Vec<f64> = rows.iter().map(|r| r.off_channel_weight).collect();
    let decreasing = w.windows(2).all(|p| p[1] < p[0]);
    let slope = (w[2] / w[3]).ln() / 2f64.ln();
    verdict(
        decreasing && (slope - 2.0).abs() <= 0.3 && w[4] < 1e-12,
        format!(
            "off-channel weights {:.3e} {:.3e} {:.3e} {:.3e}, slope {slope:.3} (2.0 ± 0.3)",
            w[0], w[1], w[2], w[3]
        ),
    )
}

fn criterion_6() -> Verdict {
    let l = 1;
    let mut worst: f64 = 0.0;
    for &x in &[0.5, 2.0, 5.0] {
        let p = graf_coefficients(l, x, 1e-14).unwrap().truncation;
        for i in 0..10 {
            for j in 0..10 {
                let rp = 0.05 + f64::from(i);
                let ph = 2.0 * PI * f64::from(j) / 10.0 + 0.1;
                let v = beam_reconstruct(l, 1.0, x, rp, ph, p).unwrap();
                let (bx, by) = (rp * ph.cos() + x, rp * ph.sin());
                let direct = Complex64::from_polar(bessel_oracle(l, bx.hypot(by)), f64::from(l) * by.atan2(bx));
                worst = worst.max((v - direct).norm());
            }
        }
    }
    verdict(
        worst < 1e-10,
        format!("max-norm deviation {worst:.2e} on 3 × 10×10 grids (< 1e-10)"),
    )
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let lambda = i % 3;
        let r: f64 = rng.gen_range(0.1..10.0);
        let ratio: f64 = rng.gen_range(1.5f64.ln()..5f64.ln()).exp();
        let q = if rng.gen_bool(0.5) { r * ratio } else { r / ratio };
        let got = kernel_fourier(lambda, r, q, 1e-12).unwrap();
        let want = kernel_oracle(lambda, r, q);
        worst = worst.max(((got - want) / want).abs());
    }
    verdict(
        worst < 1e-8,
        format!("max relative deviation {worst:.2e} on 20 points (< 1e-8)"),
    )
}

fn criterion_8() -> Verdict {
    let study = DichroismStudy::new(
        BesselBeam::new(1, 1.0).unwrap(),
        1.0,
        DichroicPair::s_to_p(1.0).unwrap(),
        WINDOW,
        TOL,
    )
    .unwrap();
    let d: Vec<f64> = [0.0, 1.0, 2.0, 4.0]
        .iter()
        .map(|&rc| study.cluster_point(rc, 16).unwrap().d.abs())
        .collect();
    let monotone = d.windows(2).all(|p| p[1] <= p[0]);
    let ratio = d[3] / d[0];
    verdict(
        monotone && ratio < 0.5,
        format!(
            "|D| at R_c = 0, 1, 2, 4: {:.4} {:.4} {:.4} {:.4}; |D(4)|/|D(0)| = {ratio:.4} (< 0.5)",
            d[0], d[1], d[2], d[3]
        ),
    )
}

fn criterion_9() -> Verdict {
    let e = engine(1, 1);
    let s: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&r0| spectral_spread(&spectrum_from_engine(&e, at(r0), WINDOW, 1e-3).unwrap()))
        .collect();
    verdict(
        s.windows(2).all(|p| p[1] > p[0]),
        format!(
            "spread at R0 = 0.5, 1, 2, 4: {:.4} {:.4} {:.4} {:.4}",
            s[0], s[1], s[2], s[3]
        ),
    )
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "[geometry]\nr0 = 0, 0.5, 2, 4\ncluster_radii = 0, 1, 2, 4\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let bin = env!("CARGO_BIN_EXE_vortex-oam");
    let mut differing = Vec::new();
    for cmd in ["spectrum", "dichroism", "limit-study", "verify"] {
        let mut outputs = Vec::new();
        for threads in ["1", "1", "4", "4"] {
            let mut c = Command::new(bin);
            c.args(["--threads", threads, cmd]);
            if cmd != "verify" {
                c.args(["--config", cfg]);
            }
            let out = c.output().unwrap();
            outputs.push((out.status.code(), out.stdout));
        }
        if !outputs.windows(2).all(|w| w[0] == w[1]) || outputs[0].0 != Some(0) {
            differing.push(cmd);
        }
    }
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            "spectrum, dichroism, limit-study, verify byte-identical at threads 1 and 4".to_string()
        } else {
            format!("outputs differ or failed for: {}", differing.join(", "))
        },
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("azimuthal selection identity", criterion_1),
        ("on-axis quantization", criterion_2),
        ("oracle equivalence", criterion_3),
        ("non-quantized transfer", criterion_4),
        ("collapse rate", criterion_5),
        ("graf reconstruction", criterion_6),
        ("kernel closed form", criterion_7),
        ("dichroism fading", criterion_8),
        ("spread growth", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        failed += usize::from(!v.passed);
        println!(
            "criterion {:>2} {} {:<30} {} [{:.1} s]",
            i + 1,
            if v.passed { "PASS" } else { "FAIL" },
            name,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
