//! Orbital-angular-momentum transfer from electron vortex (Bessel) beams to
//! atomic dipole transitions when the atom sits off the vortex axis.
//!
//! The crate evaluates the transition matrix element between Bessel-beam
//! probe states and 2D atomic bound states under the exact Coulomb
//! interaction, two ways: through the shift (addition-theorem) expansion with
//! its azimuthal selection delta, and through a brute-force lab-frame
//! quadrature used as an oracle. On top of these engines sit outgoing-OAM
//! spectra, spectral-spread and dichroism diagnostics, cluster averages and an
//! on-axis limit study.
//!
//! All quantities are dimensionless: lengths in units of the atomic radial
//! scale `a`, wavenumbers in `1/a`, and the Coulomb prefactor set to one.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernel;
pub mod matrix;
pub mod model;
pub mod specfun;
pub mod spectra;

pub use error::{Error, Result};

pub use kernel::{azimuthal_selection, kernel_coefficient, kernel_f, kernel_fourier, KernelCoefficientTable};
pub use matrix::{
    matrix_element_direct, matrix_element_expansion, radial_double_integral, ChannelAmplitude, ConvergenceReport,
    DirectOracle, ExpansionEngine, PairDensity, SelectionSign,
};
pub use model::{AtomicState, BesselBeam, DipoleTransition, Displacement, RadialProfile};
pub use spectra::{
    cluster_average, cluster_curve, dichroic_signal, enumerate_channels, oam_spectrum, onaxis_limit_study,
    spectral_spread, ChannelWindow, DichroicPair, DichroismCurve, DichroismPoint, DichroismStudy, LimitRow,
    OamSpectrum,
};
