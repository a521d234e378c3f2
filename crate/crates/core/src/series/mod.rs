//! Taylor expansions, the geometric truncation law, coefficient estimators
//! and the assembled sum / gradient estimators.

mod coeffs;
mod estimate;
mod expansion;
mod source;
mod truncation;

pub use coeffs::{
    centred, cycling_coeffs, cycling_gradient_coeffs, mvue_coeffs, simple_coeffs, simple_gradient_coeffs,
    CoefficientKind,
};
pub use estimate::{
    gradient_sum_estimate, sum_estimate, GradientEstimate, GradientEstimator, GradientKind, SumEstimate, SumEstimator,
};
pub use expansion::{Expansion, ExpansionKind, CUSTOM_SPOT_CHECK};
pub use source::{ConstantSource, FnSource, GaussianSource, PairSource, ReplayPairSource, ReplaySource, SampleSource};
pub(crate) use truncation::pow_usize;
pub use truncation::{InverseSurvivals, TruncationLaw, DEFAULT_R_MAX};
