//! Unbiased estimation of `f(m)` from i.i.d. unbiased draws of `m`.
//!
//! The estimators expand `f` around a point `x0`,
//!
//! ```text
//! f(m) = sum_k gamma_k (m/x0 - 1)^k,    gamma_k = f^(k)(x0) x0^k / k!
//! ```
//!
//! truncate the series at a geometric random index `R`, and reweight each
//! retained term by `1 / P(R >= k)`. Each power `(m/x0 - 1)^k` is replaced by an
//! unbiased product of centred draws: the simple product of the first `k`,
//! its average over circular shifts (cycling), or the U-statistic over all
//! `k`-subsets (MVUE).
//!
//! The crate is organised as
//!
//! * [`series`]: expansions, the truncation law, coefficient estimators and
//!   the sum / gradient estimators,
//! * [`tuning`]: pilot-run selection of `x0` and `p`, work-normalised
//!   variance bounds,
//! * [`oracle`]: closed-form moments and variance bounds used as ground truth.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common case.

// `!(x > 0)` is the NaN-rejecting form of every domain check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod tuning;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use series::{
    CoefficientKind, Expansion, ExpansionKind, GradientEstimate, GradientEstimator, GradientKind, PairSource,
    SampleSource, SumEstimate, SumEstimator, TruncationLaw, DEFAULT_R_MAX,
};

pub type Expansion64 = Expansion<f64>;
pub type TruncationLaw64 = TruncationLaw<f64>;
pub type SumEstimator64 = SumEstimator<f64>;
pub type SumEstimate64 = SumEstimate<f64>;
pub type GradientEstimator64 = GradientEstimator<f64>;
pub type GradientEstimate64 = GradientEstimate<f64>;
pub type PilotSummary64 = tuning::PilotSummary<f64>;
pub type WnvParams64 = tuning::WnvParams<f64>;
pub type MomentParams64 = oracle::MomentParams<f64>;

pub type Expansion32 = Expansion<f32>;
pub type TruncationLaw32 = TruncationLaw<f32>;
pub type SumEstimator32 = SumEstimator<f32>;
pub type SumEstimate32 = SumEstimate<f32>;
