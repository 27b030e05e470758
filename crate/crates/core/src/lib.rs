//! Balanced-homodyne quadrature simulation and nonclassicality analysis for
//! Fock-diagonal states of a single optical mode.
//!
//! Quadratures use the convention where the vacuum has variance 1/4 and
//! characteristic function `exp(-nu^2 / 8)`. The library is split into
//!
//! * [`states`]: exact marginal, Wigner and characteristic-function models,
//!   the binomial loss channel, and the closed-form optimum of the
//!   characteristic-function gap for photon/vacuum mixtures;
//! * [`homodyne_sim`]: seeded Monte Carlo generation of quadrature records
//!   through a semiclassical detector model, and vacuum calibration;
//! * [`analysis`]: empirical characteristic functions with error bars, the
//!   vacuum-bound test, sample-size planning, histograms and variance checks;
//! * [`oracle`]: brute-force trapezoidal integrals used to validate the
//!   closed forms.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the command-line tool uses.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dataset;
mod error;
pub mod homodyne_sim;
pub mod oracle;
mod scalar;
pub mod special;
pub mod states;
pub mod summation;

pub use error::{Error, Result};
pub use scalar::Real;

pub use analysis::{Histogram, Outcome, SampleSizePlan, VarianceCheck, VogelVerdict};
pub use dataset::Units;
pub use homodyne_sim::DetectorConfig;
pub use states::Profile;

pub type FockDiagonalState = states::FockDiagonalState<f64>;
pub type QuadratureDataset = dataset::QuadratureDataset<f64>;
pub type CharacteristicCurve = analysis::CharacteristicCurve<f64>;
pub type TabulatedDensity = oracle::TabulatedDensity<f64>;
pub type Complex = num_complex::Complex<f64>;

pub type FockDiagonalStateF32 = states::FockDiagonalState<f32>;
pub type QuadratureDatasetF32 = dataset::QuadratureDataset<f32>;
pub type CharacteristicCurveF32 = analysis::CharacteristicCurve<f32>;

/// Crate version, embedded in reports and dataset headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
