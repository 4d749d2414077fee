#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::Rng;

use ahp_sampler::ahp::SAATY_VALUES;
use ahp_sampler::grading::{Level, DC_RESISTANCE, INSULATION_AVG, INSULATION_MIN, SHEATH_MIN};
use ahp_sampler::scoring::{preset_reading, weighted_score, IndicatorWeights, QualityScore};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub const REFERENCE_WEIGHTS: [f64; 4] = [0.321, 0.214, 0.222, 0.243];

pub fn indicator_ids() -> Vec<String> {
    [DC_RESISTANCE, INSULATION_MIN, INSULATION_AVG, SHEATH_MIN].iter().map(|s| s.to_string()).collect()
}

pub fn reference_weights() -> IndicatorWeights {
    IndicatorWeights::from_pairs(indicator_ids().into_iter().zip(REFERENCE_WEIGHTS)).unwrap()
}

/// Reference M values of the ten-item cable example.
pub const REFERENCE_M: [f64; 10] = [77.43, 74.1, 90.28, 91.975, 85.9, 88.33, 79.915, 93.925, 86.95, 89.11];

/// The ten reference rows as recorded: (deviation, level, score) per indicator.
pub fn reference_rows() -> Vec<[(f64, Level, f64); 4]> {
    use Level::*;
    vec![
        [(-2.4, Qualified, 75.0), (9.8, Qualified, 75.0), (6.9, Qualified, 75.0), (38.3, Good, 85.0)],
        [(-1.0, Qualified, 75.0), (12.3, Qualified, 75.0), (4.2, BasicQualified, 60.0), (44.4, Good, 85.0)],
        [(-20.9, Excellent, 100.0), (36.9, Excellent, 100.0), (33.7, Excellent, 100.0), (11.5, BasicQualified, 60.0)],
        [(-1.2, Qualified, 75.0), (37.5, Excellent, 100.0), (33.3, Excellent, 100.0), (61.1, Excellent, 100.0)],
        [(1.5, Qualified, 75.0), (27.3, Excellent, 100.0), (30.6, Excellent, 100.0), (19.0, Qualified, 75.0)],
        [(-1.6, Qualified, 75.0), (107.9, Excellent, 100.0), (107.1, Excellent, 100.0), (46.9, Good, 85.0)],
        [(-3.5, Good, 85.0), (25.0, Excellent, 100.0), (75.0, Qualified, 75.0), (60.0, BasicQualified, 60.0)],
        [(-10.2, Excellent, 100.0), (63.5, Excellent, 100.0), (50.0, Excellent, 100.0), (16.7, Qualified, 75.0)],
        [(-8.2, Excellent, 100.0), (26.7, Excellent, 100.0), (20.0, Good, 85.0), (9.9, BasicQualified, 60.0)],
        [(-3.6, Good, 85.0), (37.0, Excellent, 100.0), (27.8, Excellent, 100.0), (29.4, Qualified, 75.0)],
    ]
}

/// Scores the reference rows with their recorded per-indicator scores.
pub fn reference_item_scores() -> Vec<QualityScore> {
    let ids = indicator_ids();
    let weights = reference_weights();
    reference_rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let graded: Vec<_> =
                row.iter().zip(&ids).map(|(&(d, level, g), id)| preset_reading(id, d, level, g)).collect();
            weighted_score(&(i + 1).to_string(), graded, &weights).unwrap()
        })
        .collect()
}

/// Random reciprocal matrix with upper entries from the fundamental scale.
pub fn random_reciprocal<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut a = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = SAATY_VALUES[rng.random_range(0..SAATY_VALUES.len())];
            a[i][j] = v;
            a[j][i] = 1.0 / v;
        }
    }
    a
}

/// Dense reference eigensolver: the eigenvalue with largest real part
/// from the real Schur form, and the eigenvector from the null space of
/// `A - λI` via SVD, normalized to sum 1.
pub fn oracle_eigen(rows: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = rows.len();
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let lambda = a
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted = &a - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .unwrap();
    let v: Vec<f64> = v_t.row(idx).iter().copied().collect();
    let sum: f64 = v.iter().sum();
    (lambda, v.iter().map(|x| x / sum).collect())
}

/// Row i of the circulant fixture is a left rotation of (1, 3, 1/3).
pub fn circulant() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 3.0, 1.0 / 3.0],
        vec![1.0 / 3.0, 1.0, 3.0],
        vec![3.0, 1.0 / 3.0, 1.0],
    ]
}
