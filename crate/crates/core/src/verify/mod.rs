//! The test engine: deterministic inequality checkers that must hold on
//! every trajectory, Monte-Carlo coverage experiments for the
//! high-probability guarantees, rate-exponent fitting, concentration
//! validation, and the stability-offset lower-bound reproduction.
//!
//! Statistical assertions use the three-sigma binomial margin from
//! [`binomial_margin`], which keeps the false-alarm probability of a passing
//! configuration below ~0.3%.

pub mod concentration;
pub mod coverage;
pub mod lemmas;
pub mod lowerbound;
pub mod ratefit;

pub use concentration::{concentration_trial, ConcentrationKind, GeneratorSpec};
pub use coverage::{coverage_experiment, CoverageOutcome, CoverageResult, CoverageSpec, CoverageTarget};
pub use lemmas::{
    check_accumulator_sum_bounds, check_decorrelated_stepsize_bounds, check_distance_regret,
    check_gradient_regret, check_ratio_sum_bound, check_self_bounding_gradient,
    check_self_bounding_records, lemma_matrix, LemmaCheck, LemmaMatrixOutcome, LemmaMatrixRow,
};
pub use lowerbound::{lower_bound_experiment, ForcedLowTwoPoint, LowerBoundOutcome, LowerBoundRow};
pub use ratefit::{rate_fit_experiment, RateAlgorithm, RateFit, RateMetric};

use crate::bounds::BoundError;
use crate::objectives::ProblemError;
use crate::optimizer::OptimizerError;
use crate::oracles::OracleError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("invalid experiment specification: {0}")]
    InvalidSpec(String),
}

/// Three-sigma binomial margin `3·sqrt(δ(1−δ)/n)` for asserting an empirical
/// frequency against a target probability `δ` over `n` trials.
pub fn binomial_margin(delta: f64, trials: u64) -> f64 {
    3.0 * (delta * (1.0 - delta) / trials as f64).sqrt()
}
