//! Consistency index, random index and consistency ratio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eigen::power_iterate;
use super::{principal_eigen, AhpError, ComparisonMatrix, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE, MAX_ORDER};

pub const DEFAULT_CR_THRESHOLD: f64 = 0.1;
const LAMBDA_SLACK: f64 = 1e-6;

/// Random index by matrix order, `RI[n - 1]` for `n = 1..=15`.
///
/// Orders 1 through 9 are Saaty's published constants. Orders 10 through
/// 15 were produced by [`monte_carlo_ri`] with 100 000 trials and seed 2024;
/// `tests/random_index.rs` regenerates and checks them.
pub const DEFAULT_RANDOM_INDEX: [f64; MAX_ORDER] = [
    0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.4869, 1.5147, 1.5375, 1.5563, 1.5713,
    1.5845,
];

/// Configurable random-index lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomIndexTable {
    values: Vec<f64>,
}

impl Default for RandomIndexTable {
    fn default() -> Self {
        Self { values: DEFAULT_RANDOM_INDEX.to_vec() }
    }
}

impl RandomIndexTable {
    /// `values[k]` is the random index for order `k + 1`.
    pub fn new(values: Vec<f64>) -> Result<Self, AhpError> {
        if values.is_empty() || values.len() > MAX_ORDER {
            return Err(AhpError::OrderOutOfRange(values.len()));
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(AhpError::InvalidRandomIndex(bad));
        }
        Ok(Self { values })
    }

    pub fn get(&self, n: usize) -> Result<f64, AhpError> {
        if n == 0 {
            return Err(AhpError::InvalidOrder(n));
        }
        self.values.get(n - 1).copied().ok_or(AhpError::InvalidOrder(n))
    }
}

/// Default-table random index for order `n` (1..=15).
pub fn random_index(n: usize) -> Result<f64, AhpError> {
    RandomIndexTable::default().get(n)
}

/// `(λ_max - n) / (n - 1)`, pinned to zero for `n = 2`.
///
/// Eigenvalues a hair below `n` (floating-point noise on consistent
/// matrices) give zero rather than a negative index.
pub fn consistency_index(lambda_max: f64, n: usize) -> Result<f64, AhpError> {
    if n < 2 {
        return Err(AhpError::InvalidOrder(n));
    }
    let nf = n as f64;
    if !(lambda_max >= nf - LAMBDA_SLACK) {
        return Err(AhpError::EigenvalueBelowOrder { lambda_max, order: n });
    }
    if n == 2 {
        return Ok(0.0);
    }
    Ok(((lambda_max - nf) / (nf - 1.0)).max(0.0))
}

/// `CI / RI`, with `CR = 0` whenever `RI = 0` (orders 1 and 2).
pub fn consistency_ratio(ci: f64, ri: f64, threshold: f64) -> (f64, bool) {
    let cr = if ri > 0.0 { ci / ri } else { 0.0 };
    (cr, cr < threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub lambda_max: f64,
    pub order: usize,
    pub ci: f64,
    pub ri: f64,
    pub cr: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ConsistencyReport {
    pub fn from_lambda(
        lambda_max: f64,
        order: usize,
        table: &RandomIndexTable,
        threshold: f64,
    ) -> Result<Self, AhpError> {
        if !(threshold > 0.0) {
            return Err(AhpError::InvalidThreshold(threshold));
        }
        let ci = consistency_index(lambda_max, order)?;
        let ri = table.get(order)?;
        let (cr, pass) = consistency_ratio(ci, ri, threshold);
        Ok(Self { lambda_max, order, ci, ri, cr, threshold, pass })
    }
}

/// Eigen-decomposes `m` and runs the full consistency test.
pub fn check_consistency(
    m: &ComparisonMatrix,
    table: &RandomIndexTable,
    threshold: f64,
) -> Result<ConsistencyReport, AhpError> {
    let e = principal_eigen(m, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
    ConsistencyReport::from_lambda(e.lambda_max, m.order(), table, threshold)
}

/// The 17 values of the fundamental scale and their reciprocals, ascending.
pub const SAATY_VALUES: [f64; 17] = [
    1.0 / 9.0,
    1.0 / 8.0,
    1.0 / 7.0,
    1.0 / 6.0,
    1.0 / 5.0,
    1.0 / 4.0,
    1.0 / 3.0,
    1.0 / 2.0,
    1.0,
    2.0,
    3.0,
    4.0,
    5.0,
    6.0,
    7.0,
    8.0,
    9.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRi {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub ri: f64,
    /// Trials dropped because power iteration did not converge.
    pub skipped: u64,
}

/// Mean consistency index over `trials` random reciprocal matrices.
///
/// Upper-triangle entries are drawn uniformly from [`SAATY_VALUES`] with a
/// ChaCha8 stream seeded from `seed`, so the estimate is reproducible on
/// every platform. Non-converging trials are skipped and counted; one
/// percent or more skipped is an error.
pub fn monte_carlo_ri(n: usize, trials: u64, seed: u64) -> Result<MonteCarloRi, AhpError> {
    if n == 0 || n > MAX_ORDER {
        return Err(AhpError::InvalidOrder(n));
    }
    if trials == 0 {
        return Err(AhpError::InvalidTrials);
    }
    if n <= 2 {
        return Ok(MonteCarloRi { n, trials, seed, ri: 0.0, skipped: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = vec![1.0; n * n];
    let mut total = 0.0;
    let mut skipped = 0u64;
    for _ in 0..trials {
        for i in 0..n {
            for j in (i + 1)..n {
                let k = rng.random_range(0..SAATY_VALUES.len());
                a[i * n + j] = SAATY_VALUES[k];
                a[j * n + i] = SAATY_VALUES[SAATY_VALUES.len() - 1 - k];
            }
        }
        match power_iterate(&a, n, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER) {
            Ok((lambda, _, _)) => total += consistency_index(lambda, n)?,
            Err(AhpError::NoConvergence { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if skipped * 100 >= trials {
        return Err(AhpError::TooManySkipped { skipped, trials });
    }
    Ok(MonteCarloRi { n, trials, seed, ri: total / (trials - skipped) as f64, skipped })
}
