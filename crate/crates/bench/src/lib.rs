//! Fixtures shared by the criterion benchmarks under `benches/`.

use vortex_oam::{BesselBeam, DipoleTransition, ExpansionEngine, SelectionSign};

/// Expansion engine for the default study: `l = 1`, `k_ρ = k_ρ′ = 1`,
/// s → p with `α = +1`, tolerance 1e-6.
pub fn default_engine() -> ExpansionEngine {
    let t = DipoleTransition::s_to_p(1, 1.0).expect("valid default transition");
    ExpansionEngine::new(
        BesselBeam::new(1, 1.0).expect("valid beam"),
        1.0,
        t,
        1e-6,
        SelectionSign::Plus,
    )
    .expect("valid engine")
}

/// Engine whose radial integrals are already cached for `|p| ≤ 12`.
pub fn warm_engine() -> ExpansionEngine {
    let e = default_engine();
    for n in -11..=13 {
        e.radial(n).expect("radial integral converges");
    }
    e
}
