//! Judgment matrices derived from historical nonconformity rates.

use serde::{Deserialize, Serialize};

use super::{AhpError, ComparisonMatrix, MAX_ORDER, MIN_ORDER};

pub const DEFAULT_SMOOTHING_FLOOR: f64 = 1e-6;

/// Per-indicator historical failure fractions and the number of reports
/// behind each one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonconformityRates {
    rates: Vec<f64>,
    sample_counts: Vec<u64>,
}

impl NonconformityRates {
    pub fn new(rates: Vec<f64>, sample_counts: Vec<u64>) -> Result<Self, AhpError> {
        if rates.len() != sample_counts.len() {
            return Err(AhpError::LengthMismatch { expected: rates.len(), found: sample_counts.len() });
        }
        if let Some((index, &rate)) =
            rates.iter().enumerate().find(|(_, r)| !(0.0..=1.0).contains(*r))
        {
            return Err(AhpError::RateOutOfRange { index, rate });
        }
        if let Some(index) = sample_counts.iter().position(|&c| c == 0) {
            return Err(AhpError::EmptySampleCount { index });
        }
        Ok(Self { rates, sample_counts })
    }

    /// Rates with a nominal single report behind each value. Useful when
    /// only published fractions are available.
    pub fn from_rates(rates: Vec<f64>) -> Result<Self, AhpError> {
        let counts = vec![1; rates.len()];
        Self::new(rates, counts)
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn sample_counts(&self) -> &[u64] {
        &self.sample_counts
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Rates after applying `max(r, floor)`.
    pub fn floored(&self, floor: f64) -> Vec<f64> {
        self.rates.iter().map(|&r| r.max(floor)).collect()
    }
}

/// Builds `a_ij = r'_i / r'_j` with `r' = max(r, floor)`.
///
/// The result is rank one, so every weight method returns the normalized
/// floored rates and the consistency ratio is zero.
pub fn build_matrix_from_rates(
    rates: &NonconformityRates,
    smoothing_floor: f64,
) -> Result<ComparisonMatrix, AhpError> {
    if !(smoothing_floor.is_finite() && smoothing_floor > 0.0) {
        return Err(AhpError::InvalidSmoothingFloor(smoothing_floor));
    }
    let n = rates.len();
    if !(MIN_ORDER..=MAX_ORDER).contains(&n) {
        return Err(AhpError::OrderOutOfRange(n));
    }
    if rates.rates().iter().all(|&r| r < smoothing_floor) {
        return Err(AhpError::AllRatesZero { floor: smoothing_floor });
    }
    let r = rates.floored(smoothing_floor);
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push(if i == j { 1.0 } else { r[i] / r[j] });
        }
    }
    Ok(ComparisonMatrix::from_flat_unchecked(n, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ahp::validate_matrix;

    #[test]
    fn equal_rates_give_all_ones() {
        let rates = NonconformityRates::from_rates(vec![0.2, 0.2]).unwrap();
        let m = build_matrix_from_rates(&rates, DEFAULT_SMOOTHING_FLOOR).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn zero_rate_is_floored() {
        let rates = NonconformityRates::from_rates(vec![0.0, 0.1]).unwrap();
        let m = build_matrix_from_rates(&rates, 1e-6).unwrap();
        assert!((m.get(0, 1) - 1e-5).abs() <= 1e-18);
        assert!((m.get(1, 0) - 1e5).abs() <= 1e-6);
        assert!(validate_matrix(&m.to_rows()).is_ok());
    }

    #[test]
    fn all_zero_rates_rejected() {
        let rates = NonconformityRates::from_rates(vec![0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            build_matrix_from_rates(&rates, 1e-6),
            Err(AhpError::AllRatesZero { .. })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(NonconformityRates::from_rates(vec![1.2, 0.1]).is_err());
        assert!(NonconformityRates::new(vec![0.1, 0.1], vec![3, 0]).is_err());
        assert!(NonconformityRates::new(vec![0.1], vec![3, 1]).is_err());
        let ok = NonconformityRates::from_rates(vec![0.1, 0.2]).unwrap();
        assert!(build_matrix_from_rates(&ok, 0.0).is_err());
        let single = NonconformityRates::from_rates(vec![0.1]).unwrap();
        assert!(matches!(
            build_matrix_from_rates(&single, 1e-6),
            Err(AhpError::OrderOutOfRange(1))
        ));
    }
}
