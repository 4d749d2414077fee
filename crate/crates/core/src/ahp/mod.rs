//! Judgment-matrix algebra: validation, weight extraction and the
//! consistency test.

mod consistency;
mod eigen;
mod matrix;
mod rates;
mod weights;

use thiserror::Error;

pub use consistency::{
    check_consistency, consistency_index, consistency_ratio, monte_carlo_ri, random_index,
    ConsistencyReport, MonteCarloRi, RandomIndexTable, DEFAULT_CR_THRESHOLD,
    DEFAULT_RANDOM_INDEX, SAATY_VALUES,
};
pub use eigen::{principal_eigen, Eigenpair, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
pub use matrix::{
    is_scale_value, parse_judgment, validate_matrix, ComparisonMatrix, Importance, Violation,
    MAX_ORDER, MIN_ORDER, RECIPROCITY_TOLERANCE,
};
pub use rates::{build_matrix_from_rates, NonconformityRates, DEFAULT_SMOOTHING_FLOOR};
pub use weights::{
    derive_weights, weights_geometric_mean, weights_sum_product, WeightMethod, WeightVector,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AhpError {
    #[error("matrix order {0} outside supported range 2..=15")]
    OrderOutOfRange(usize),
    #[error("row {} has {len} entries, expected {order}", .row + 1)]
    NotSquare { row: usize, len: usize, order: usize },
    #[error("invalid judgment matrix: {}", join(.0))]
    InvalidMatrix(Vec<Violation>),
    #[error("order {order} needs {expected} upper-triangle judgments, found {found}")]
    UpperTriangleLength { order: usize, expected: usize, found: usize },
    #[error("cannot parse judgment {0:?}")]
    BadJudgment(String),
    #[error("invalid order {0}")]
    InvalidOrder(usize),
    #[error("every nonconformity rate is below the smoothing floor {floor}; history is insufficient to derive weights")]
    AllRatesZero { floor: f64 },
    #[error("smoothing floor must be positive and finite, got {0}")]
    InvalidSmoothingFloor(f64),
    #[error("rate {rate} at index {index} outside [0, 1]")]
    RateOutOfRange { index: usize, rate: f64 },
    #[error("sample count at index {index} is zero")]
    EmptySampleCount { index: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("power iteration did not converge within {max_iter} iterations (last change {last_change:e})")]
    NoConvergence { max_iter: usize, last_change: f64 },
    #[error("tolerance must be positive and max_iter at least 1 (got tol={tol}, max_iter={max_iter})")]
    InvalidIterationControl { tol: f64, max_iter: usize },
    #[error("lambda_max {lambda_max} is below the matrix order {order}")]
    EigenvalueBelowOrder { lambda_max: f64, order: usize },
    #[error("consistency threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("random index values must be non-negative, got {0}")]
    InvalidRandomIndex(f64),
    #[error("Monte Carlo trials must be at least 1")]
    InvalidTrials,
    #[error("{skipped} of {trials} Monte Carlo trials failed to converge (limit is 1%)")]
    TooManySkipped { skipped: u64, trials: u64 },
    #[error("weight vector is empty or sums to zero")]
    EmptyWeights,
    #[error("weight {value} at index {index} is negative or not finite")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    WeightsNotNormalized(f64),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
