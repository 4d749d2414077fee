use serde::{Deserialize, Serialize};

use super::{principal_eigen, AhpError, ComparisonMatrix, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Sum-normalizes `raw`. Fails on empty input, negative or non-finite
    /// entries, or a zero total.
    pub fn normalize(raw: Vec<f64>) -> Result<Self, AhpError> {
        if raw.is_empty() {
            return Err(AhpError::EmptyWeights);
        }
        if let Some((index, &value)) =
            raw.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(AhpError::InvalidWeight { index, value });
        }
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0) {
            return Err(AhpError::EmptyWeights);
        }
        Ok(Self(raw.into_iter().map(|w| w / sum).collect()))
    }

    pub(crate) fn from_normalized(v: Vec<f64>) -> Self {
        Self(v)
    }

    /// Accepts an already-normalized vector, checking the sum invariant.
    pub fn new(weights: Vec<f64>) -> Result<Self, AhpError> {
        if let Some((index, &value)) =
            weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(AhpError::InvalidWeight { index, value });
        }
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(AhpError::WeightsNotNormalized(sum));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = AhpError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMethod {
    #[default]
    Eigenvector,
    GeometricMean,
    SumProduct,
}

impl WeightMethod {
    pub const ALL: [WeightMethod; 3] =
        [WeightMethod::Eigenvector, WeightMethod::GeometricMean, WeightMethod::SumProduct];

    pub fn name(self) -> &'static str {
        match self {
            WeightMethod::Eigenvector => "eigenvector",
            WeightMethod::GeometricMean => "geometric_mean",
            WeightMethod::SumProduct => "sum_product",
        }
    }
}

/// Square-root method: `w_i ∝ (Π_j a_ij)^(1/n)`.
///
/// The product is taken in log space so large orders with extreme
/// judgments do not overflow.
pub fn weights_geometric_mean(m: &ComparisonMatrix) -> WeightVector {
    let n = m.order();
    let raw: Vec<f64> = (0..n)
        .map(|i| (m.row(i).iter().map(|a| a.ln()).sum::<f64>() / n as f64).exp())
        .collect();
    WeightVector::normalize(raw).expect("positive matrix gives positive row means")
}

/// Sum-product method: normalize columns, then average across each row.
pub fn weights_sum_product(m: &ComparisonMatrix) -> WeightVector {
    let n = m.order();
    let col_sums: Vec<f64> = (0..n).map(|j| (0..n).map(|i| m.get(i, j)).sum()).collect();
    let raw: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| m.get(i, j) / col_sums[j]).sum::<f64>() / n as f64)
        .collect();
    WeightVector::normalize(raw).expect("positive matrix gives positive row averages")
}

pub fn derive_weights(m: &ComparisonMatrix, method: WeightMethod) -> Result<WeightVector, AhpError> {
    Ok(match method {
        WeightMethod::Eigenvector => principal_eigen(m, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?.eigvec,
        WeightMethod::GeometricMean => weights_geometric_mean(m),
        WeightMethod::SumProduct => weights_sum_product(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ahp::{build_matrix_from_rates, NonconformityRates};

    const TABLE_WEIGHTS: [f64; 4] = [0.321, 0.214, 0.222, 0.243];

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn uniform_for_all_ones() {
        let m = ComparisonMatrix::new(vec![vec![1.0; 3]; 3]).unwrap();
        let third = [1.0 / 3.0; 3];
        assert_close(weights_geometric_mean(&m).as_slice(), &third, 1e-15);
        assert_close(weights_sum_product(&m).as_slice(), &third, 1e-15);
    }

    #[test]
    fn rate_matrix_recovers_rates() {
        let rates = NonconformityRates::from_rates(TABLE_WEIGHTS.to_vec()).unwrap();
        let m = build_matrix_from_rates(&rates, 1e-6).unwrap();
        for method in WeightMethod::ALL {
            assert_close(derive_weights(&m, method).unwrap().as_slice(), &TABLE_WEIGHTS, 1e-9);
        }
    }

    #[test]
    fn circulant_geometric_mean_is_uniform() {
        let m = ComparisonMatrix::from_upper_triangle(3, &[3.0, 1.0 / 3.0, 3.0]).unwrap();
        assert_close(weights_geometric_mean(&m).as_slice(), &[1.0 / 3.0; 3], 1e-15);
    }

    #[test]
    fn two_by_two_sum_product() {
        let m = ComparisonMatrix::new(vec![vec![1.0, 2.0], vec![0.5, 1.0]]).unwrap();
        assert_close(weights_sum_product(&m).as_slice(), &[2.0 / 3.0, 1.0 / 3.0], 1e-15);
    }

    #[test]
    fn weight_vector_checks() {
        assert!(WeightVector::new(vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        assert!(WeightVector::normalize(vec![0.0, 0.0]).is_err());
        assert_close(WeightVector::normalize(vec![2.0, 6.0]).unwrap().as_slice(), &[0.25, 0.75], 0.0);
        let parsed: Result<WeightVector, _> = serde_json::from_str("[0.7, 0.7]");
        assert!(parsed.is_err());
    }
}
