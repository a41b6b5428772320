//! Numerical substrate: integer-order Bessel functions, Gauss and adaptive
//! Gauss-Kronrod quadrature, and the shift (Graf) coefficients used to move
//! a Bessel beam from the vortex axis to an atom-centred frame.

mod bessel;
mod graf;
mod quadrature;

pub(crate) use bessel::jn;
pub use bessel::{bessel_j, bessel_j_range};
pub use graf::{beam_reconstruct, graf_coefficients, truncation_heuristic, GrafCoefficients};
pub use quadrature::{adaptive_integrate, gauss_rule, Integral, Integrator, QuadValue, QuadratureRule};
