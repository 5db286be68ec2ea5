//! Variance components estimation for random effects models whose group
//! structure is itself random.
//!
//! Classical mixed-model tooling conditions on the observed design:
//! group sizes, regressor values and grid sparsity patterns are treated
//! as fixed constants. When the data are a sample from a population —
//! households of random size, raters who choose what to rate — those
//! quantities are random too, and this crate estimates variance
//! components under that view using closed-form method-of-moments
//! systems. No likelihoods, no distributional shape assumptions, no
//! iterative fitting beyond one small alternating scheme.
//!
//! Supported models (for responses `Y`, group effects `alpha`, noise
//! `eps`):
//!
//! * **One-way**: `Y_ij = mu + alpha_i + eps_ij` with random group sizes
//!   ([`estimate_one_way_fr`]), plus the classical fixed-sizes variant
//!   for comparison ([`estimate_one_way_fixed`]).
//! * **Size-dependent mean**: `Y_ij = c1 + c2 N_i + alpha_i + eps_ij`
//!   ([`estimate_famsize`]).
//! * **Random regressors**: `Y_ij = X_i' gamma + alpha_i + eps_ij`
//!   ([`estimate_with_regressors`]).
//! * **Crossed factors on a sparse grid**: `Y_ij = mu + a_i + b_j +
//!   eps_ij` ([`estimate_crossed`]), with overlap diagnostics.
//!
//! For large datasets, [`alchemy_grouped`] / [`alchemy_crossed`] run any
//! estimator on disjoint chunks in parallel and average the results,
//! which also yields empirical standard errors. [`simgen`] generates
//! synthetic datasets from the same processes for testing and
//! benchmarking.

mod alchemy;
mod data;
mod error;
mod estimators;
mod linalg;
mod moments;
mod simgen;
mod sums;

pub use alchemy::{
    alchemy_crossed, alchemy_estimate, alchemy_grouped, make_chunks, make_stream_chunks,
    AlchemyResult, ChunkFit, ChunkPlan, Chunkable, GroupedEstimator,
};
pub use data::{Group, GroupedSample, RatingEntry, SparseRatings};
pub use error::{Error, Result};
pub use estimators::{
    estimate_crossed, estimate_famsize, estimate_one_way_fixed, estimate_one_way_fr,
    estimate_with_regressors, overlap_distribution, row_cov_diagnostic, CountMoments,
    CrossedEstimate, FamSizeEstimate, OneWayEstimate, OverlapDistribution, OverlapOptions,
    RegressionEstimate, ResidualSummary, RowCovDiagnostic, SolverOptions,
};
pub use moments::{count_summary, grand_mean, group_sums, pooled_variance, summarize, MomentOrder, MomentSummary};
pub use simgen::{
    gen_crossed, gen_crossed_detailed, gen_famsize, gen_one_way, gen_regression, CellMechanism,
    CountDist, CrossedGenDetail, CrossedMeanRegressors, CrossedSpec, EffectDist, FamsizeSpec,
    OneWaySpec, RegressionSpec, RegressorDist, SimData, SimSpec,
};
pub use sums::{mean, pairwise_map_sum, pairwise_sum};
