//! Experiment harness for the truncated-Taylor estimators: a Gaussian toy
//! latent-variable model with closed-form moments, an importance-weighted
//! multilevel baseline, and drivers that emit replicate-level record tables.
//!
//! Every driver derives one random stream per replicate from the master seed,
//! so output tables are identical whatever the thread count
//! (`DEBIAS_THREADS`).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod mlmc;
pub mod parallel;
pub mod pipeline;
pub mod plot;
pub mod records;
pub mod study;
pub mod toy_bench;
pub mod toy_lvm;

pub use mlmc::{iwae_estimate, mlmc_log_likelihood, MlmcEstimate, MlmcSpec};
pub use pipeline::{run_estimate, run_tune, EstimateConfig, EstimateRun, FunctionSpec, RunSource};
pub use records::{Record, SCHEMA_VERSION};
pub use study::{run_variance_study, StudyRow, StudySource, VarianceStudyConfig};
pub use toy_bench::{run_toy_lvm_bench, BenchMethod, ToyLvmBench, ToyLvmBenchConfig};
pub use toy_lvm::{toy_lvm_moments, ToyLvmMoments, ToyLvmSpec};
