//! The transition matrix element
//!
//! ```text
//! M(l′) = ∫ d²r J_l(k_ρ r) J_{l′}(k_ρ′ r) e^{i(l−l′)Φ} ∫ d²q u(q) u′(q) e^{iαφ_q} / |r − R₀ − q|
//! ```
//!
//! computed two ways. The expansion path shifts both beams to the atom with
//! the addition theorem, uses the azimuthal selection delta to drop one of the
//! two shift sums, and reduces every surviving term to a radial double
//! integral. The direct path integrates the lab-frame expression without any
//! beam expansion and serves as the oracle.

mod direct;
mod expansion;
mod radial;

use num_complex::Complex64;

pub use direct::{matrix_element_direct, DirectOracle, DIRECT_MIN_TOL};
pub use expansion::{matrix_element_expansion, ExpansionEngine};
pub use radial::{radial_double_integral, PairDensity, RadialIntegral, TransitionPotential};

/// Which on-axis rule the channel bookkeeping follows.
///
/// `Plus` (the default) is `l′ = l + α + p − p′`, which is what the selection
/// delta `λ = −α` together with `λ = l + p − l′ − p′` gives. `Minus` flips the
/// sign of `α` in that bookkeeping and exists only for sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionSign {
    #[default]
    Plus,
    Minus,
}

impl SelectionSign {
    /// `α` as it enters the channel bookkeeping.
    pub fn effective_alpha(self, alpha: i32) -> i32 {
        match self {
            SelectionSign::Plus => alpha,
            SelectionSign::Minus => -alpha,
        }
    }

    /// The single channel allowed on axis.
    pub fn allowed_channel(self, l: i32, alpha: i32) -> i32 {
        l + self.effective_alpha(alpha)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SelectionSign::Plus => "plus",
            SelectionSign::Minus => "minus",
        }
    }
}

impl std::str::FromStr for SelectionSign {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "plus" | "+" => Ok(SelectionSign::Plus),
            "minus" | "-" => Ok(SelectionSign::Minus),
            other => Err(crate::Error::InvalidParameter(format!(
                "selection sign must be `plus` or `minus`, got `{other}`"
            ))),
        }
    }
}

/// How an amplitude was truncated and how far it can be trusted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    /// Shift-sum truncation `P` (zero for the direct path).
    pub p_truncation: usize,
    /// Number of nonzero `(p, p′)` terms (or integrand evaluations for the
    /// direct path).
    pub terms_used: usize,
    pub quad_tol: f64,
    /// Bound on the discarded shift terms plus radial tails, plus the
    /// quadrature error estimate.
    pub tail_estimate: f64,
    /// Largest radial cutoff used.
    pub r_max: f64,
}

/// `M(l′)` for one outgoing channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelAmplitude {
    pub l_out: i32,
    pub value: Complex64,
    pub convergence: ConvergenceReport,
    pub converged: bool,
}
