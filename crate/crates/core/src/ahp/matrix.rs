//! Positive reciprocal judgment matrices.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::AhpError;

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 15;
pub const RECIPROCITY_TOLERANCE: f64 = 1e-9;

/// A single invariant violation found by [`validate_matrix`].
///
/// Indices are zero-based; `Display` renders them one-based, the way
/// judgment matrices are written on paper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPositiveEntry { row: usize, col: usize, value: f64 },
    DiagonalNotOne { row: usize, value: f64 },
    ReciprocityViolation { row: usize, col: usize, value: f64, expected: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NonPositiveEntry { row, col, value } => {
                write!(f, "non-positive entry {value} at ({}, {})", row + 1, col + 1)
            }
            Violation::DiagonalNotOne { row, value } => {
                write!(f, "diagonal entry {value} at ({0}, {0}) is not 1", row + 1)
            }
            Violation::ReciprocityViolation { row, col, value, expected } => write!(
                f,
                "reciprocity violated at ({}, {}): found {value}, expected {expected}",
                row + 1,
                col + 1
            ),
        }
    }
}

/// Checks every judgment-matrix invariant and reports all violated cells.
///
/// Reciprocity is checked once per pair and reported at the lower-triangle
/// cell `(i, j)` with `i > j`, against the expected value `1 / a_ji`.
pub fn validate_matrix(rows: &[Vec<f64>]) -> Result<(), AhpError> {
    let n = rows.len();
    if !(MIN_ORDER..=MAX_ORDER).contains(&n) {
        return Err(AhpError::OrderOutOfRange(n));
    }
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(AhpError::NotSquare { row, len: r.len(), order: n });
    }

    let mut violations = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, &value) in row.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                violations.push(Violation::NonPositiveEntry { row: i, col: j, value });
            }
        }
    }
    for (i, row) in rows.iter().enumerate() {
        if row[i] != 1.0 {
            violations.push(Violation::DiagonalNotOne { row: i, value: row[i] });
        }
    }
    for i in 0..n {
        for j in 0..i {
            let (lower, upper) = (rows[i][j], rows[j][i]);
            if !(lower > 0.0 && upper > 0.0) {
                continue;
            }
            if (lower * upper - 1.0).abs() > RECIPROCITY_TOLERANCE {
                violations.push(Violation::ReciprocityViolation {
                    row: i,
                    col: j,
                    value: lower,
                    expected: 1.0 / upper,
                });
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(AhpError::InvalidMatrix(violations))
    }
}

/// Positive reciprocal matrix of order `2..=15`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl ComparisonMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, AhpError> {
        validate_matrix(&rows)?;
        let order = rows.len();
        Ok(Self { order, entries: rows.into_iter().flatten().collect() })
    }

    /// Builds a matrix from the strict upper triangle, read row by row
    /// (`a_12, a_13, ..., a_1n, a_23, ...`). Lower entries are reciprocals.
    pub fn from_upper_triangle(order: usize, upper: &[f64]) -> Result<Self, AhpError> {
        if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
            return Err(AhpError::OrderOutOfRange(order));
        }
        let expected = order * (order - 1) / 2;
        if upper.len() != expected {
            return Err(AhpError::UpperTriangleLength { order, expected, found: upper.len() });
        }
        let mut rows = vec![vec![1.0; order]; order];
        let mut values = upper.iter();
        for i in 0..order {
            for j in (i + 1)..order {
                let v = *values.next().expect("length checked above");
                rows[i][j] = v;
                rows[j][i] = 1.0 / v;
            }
        }
        Self::new(rows)
    }

    /// Caller guarantees the invariants; used for matrices that are
    /// reciprocal by construction.
    pub(crate) fn from_flat_unchecked(order: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), order * order);
        Self { order, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.order + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.order..(row + 1) * self.order]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.order).map(<[f64]>::to_vec).collect()
    }

    /// Re-indexes the matrix so that new index `k` is old index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.order, "permutation length must equal order");
        let n = self.order;
        let mut entries = Vec::with_capacity(n * n);
        for &i in perm {
            for &j in perm {
                entries.push(self.get(i, j));
            }
        }
        Self { order: n, entries }
    }
}

/// Fundamental 1-9 scale for manually authored judgments. The even values
/// are the intermediate judgments between neighbouring odd levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Importance {
    Equal,
    Slight,
    More,
    Strong,
    Extreme,
}

impl Importance {
    pub fn value(self) -> f64 {
        match self {
            Importance::Equal => 1.0,
            Importance::Slight => 3.0,
            Importance::More => 5.0,
            Importance::Strong => 7.0,
            Importance::Extreme => 9.0,
        }
    }
}

/// True when `value` is one of `1..=9` or a reciprocal `1/2..=1/9`.
pub fn is_scale_value(value: f64) -> bool {
    (1..=9).any(|k| {
        let k = f64::from(k);
        (value - k).abs() <= 1e-9 || (value * k - 1.0).abs() <= 1e-9
    })
}

/// Parses a judgment written as a number (`3`, `0.25`) or a fraction (`1/3`).
pub fn parse_judgment(text: &str) -> Result<f64, AhpError> {
    let text = text.trim();
    let parsed = match text.split_once('/') {
        Some((num, den)) => num
            .trim()
            .parse::<f64>()
            .ok()
            .zip(den.trim().parse::<f64>().ok())
            .filter(|&(_, d)| d != 0.0)
            .map(|(n, d)| n / d),
        None => text.parse::<f64>().ok(),
    };
    parsed.ok_or_else(|| AhpError::BadJudgment(text.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_is_valid() {
        assert!(validate_matrix(&vec![vec![1.0; 3]; 3]).is_ok());
    }

    #[test]
    fn exact_reciprocal_pair_is_valid() {
        assert!(validate_matrix(&[vec![1.0, 2.0], vec![0.5, 1.0]]).is_ok());
    }

    #[test]
    fn reciprocity_violation_reported_at_lower_cell() {
        let err = validate_matrix(&[vec![1.0, 2.0], vec![0.4, 1.0]]).unwrap_err();
        match err {
            AhpError::InvalidMatrix(v) => {
                assert_eq!(v.len(), 1);
                assert!(matches!(
                    v[0],
                    Violation::ReciprocityViolation { row: 1, col: 0, value, expected }
                        if value == 0.4 && expected == 0.5
                ));
                assert_eq!(
                    v[0].to_string(),
                    "reciprocity violated at (2, 1): found 0.4, expected 0.5"
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let rows = vec![
            vec![2.0, -1.0, 1.0],
            vec![1.0, 1.0, 3.0],
            vec![1.0, 0.5, 1.0],
        ];
        let AhpError::InvalidMatrix(v) = validate_matrix(&rows).unwrap_err() else {
            panic!("expected InvalidMatrix");
        };
        assert!(v.contains(&Violation::NonPositiveEntry { row: 0, col: 1, value: -1.0 }));
        assert!(v.contains(&Violation::DiagonalNotOne { row: 0, value: 2.0 }));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::ReciprocityViolation { row: 2, col: 1, .. })));
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn order_bounds() {
        assert!(matches!(validate_matrix(&[vec![1.0]]), Err(AhpError::OrderOutOfRange(1))));
        let big = vec![vec![1.0; 16]; 16];
        assert!(matches!(validate_matrix(&big), Err(AhpError::OrderOutOfRange(16))));
        assert!(validate_matrix(&vec![vec![1.0; 15]; 15]).is_ok());
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows = vec![vec![1.0, 1.0], vec![1.0]];
        assert!(matches!(validate_matrix(&rows), Err(AhpError::NotSquare { row: 1, .. })));
    }

    #[test]
    fn nan_is_non_positive() {
        let rows = vec![vec![1.0, f64::NAN], vec![1.0, 1.0]];
        let AhpError::InvalidMatrix(v) = validate_matrix(&rows).unwrap_err() else {
            panic!();
        };
        assert!(matches!(v[0], Violation::NonPositiveEntry { row: 0, col: 1, .. }));
    }

    #[test]
    fn upper_triangle_fills_reciprocals() {
        let m = ComparisonMatrix::from_upper_triangle(3, &[3.0, 1.0 / 3.0, 3.0]).unwrap();
        assert_eq!(m.get(1, 0), 1.0 / 3.0);
        assert_eq!(m.get(2, 0), 3.0);
        assert_eq!(m.get(2, 1), 1.0 / 3.0);
        assert!(ComparisonMatrix::from_upper_triangle(3, &[1.0]).is_err());
    }

    #[test]
    fn judgments_parse() {
        assert_eq!(parse_judgment("1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_judgment(" 5 ").unwrap(), 5.0);
        assert!(parse_judgment("1/0").is_err());
        assert!(parse_judgment("three").is_err());
        assert!(is_scale_value(1.0 / 7.0));
        assert!(is_scale_value(Importance::Strong.value()));
        assert!(!is_scale_value(10.0));
        assert!(!is_scale_value(2.5));
    }

    #[test]
    fn permutation_reindexes() {
        let m = ComparisonMatrix::from_upper_triangle(3, &[2.0, 4.0, 2.0]).unwrap();
        let p = m.permuted(&[2, 0, 1]);
        assert_eq!(p.get(0, 1), m.get(2, 0));
        assert_eq!(p.get(1, 2), m.get(0, 1));
    }
}
