//! Power iteration for the Perron eigenpair of a positive matrix.

use super::{AhpError, ComparisonMatrix, WeightVector};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda_max: f64,
    pub eigvec: WeightVector,
    pub iterations: usize,
}

/// Power iteration started from the uniform vector.
///
/// Each iterate is sum-normalized; the loop stops once the max-norm change
/// between successive iterates is at most `tol`. The eigenvalue is the
/// Rayleigh quotient of the final iterate.
pub fn principal_eigen(
    m: &ComparisonMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<Eigenpair, AhpError> {
    let (lambda_max, v, iterations) = power_iterate(m.as_flat(), m.order(), tol, max_iter)?;
    Ok(Eigenpair { lambda_max, eigvec: WeightVector::from_normalized(v), iterations })
}

pub(crate) fn power_iterate(
    a: &[f64],
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>, usize), AhpError> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(AhpError::InvalidIterationControl { tol, max_iter });
    }
    let mut v = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut last_change = f64::INFINITY;
    for iter in 1..=max_iter {
        mat_vec(a, n, &v, &mut next);
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= sum);
        last_change = v
            .iter()
            .zip(&next)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        if last_change <= tol {
            mat_vec(a, n, &v, &mut next);
            let num: f64 = v.iter().zip(&next).map(|(x, y)| x * y).sum();
            let den: f64 = v.iter().map(|x| x * x).sum();
            return Ok((num / den, v, iter));
        }
    }
    Err(AhpError::NoConvergence { max_iter, last_change })
}

fn mat_vec(a: &[f64], n: usize, v: &[f64], out: &mut [f64]) {
    for (row, o) in a.chunks_exact(n).zip(out.iter_mut()) {
        *o = row.iter().zip(v).map(|(x, y)| x * y).sum();
    }
}
