//! Wavelet thresholding estimation of Poisson intensities on the real line.
//!
//! The crate is organised bottom-up:
//!
//! - [`signals`]: benchmark intensities with closed-form densities and CDFs,
//!   and seeded Poisson process sampling.
//! - [`wavelet`]: the Haar and the CDF(1,5) spline biorthogonal bases. The
//!   analysis functions are piecewise constant on a half-integer grid, so the
//!   true coefficients of a signal are exact combinations of CDF values.
//! - [`estimator`]: empirical coefficients, the data-driven random threshold
//!   and the penalized model-selection view of the estimator.
//! - [`metrics`]: oracle risks, risk ratios and change points in `gamma`.
//! - [`harness`]: seeded, parallel Monte-Carlo experiments and their reports.
//!
//! Most of the wavelet and threshold arithmetic is generic over the scalar
//! type. The aliases below pin the usual choices.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod metrics;
pub mod scalar;
pub mod signals;
pub mod wavelet;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

use num_bigint::BigInt;
use num_rational::Ratio;

/// Exact rational scalar used for filter derivation and moment checks.
pub type Exact = Ratio<BigInt>;

/// Double precision basis, the one used by the estimator and the harness.
pub type Basis = wavelet::BiorthBasis<f64>;
/// Single precision basis.
pub type Basis32 = wavelet::BiorthBasis<f32>;
/// Basis with exact rational analysis functions and filters.
pub type ExactBasis = wavelet::BiorthBasis<Exact>;

pub type PiecewiseConstant = wavelet::PiecewiseConstantFn<f64>;
pub type CoeffTable = estimator::CoeffTable<f64>;
pub type CoeffRecord = estimator::CoeffRecord<f64>;
