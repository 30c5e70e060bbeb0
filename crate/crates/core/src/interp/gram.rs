use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::state::closest_pair;
use crate::error::{Error, Result};

/// Gram matrices with a condition estimate above this are reported as
/// near-coincident particles instead of being solved.
pub const MAX_CONDITION: f64 = 1e12;

/// Cholesky factor of a symmetric positive-definite Gram matrix.
#[derive(Debug, Clone)]
pub struct GramFactor {
    chol: Cholesky<f64, Dyn>,
    /// 1-norm condition estimate `|K|_1 |K^-1|_1`.
    pub condition: f64,
}

impl GramFactor {
    /// Factors `gram + jitter * I`. On failure the closest particle pair
    /// of `(dim, positions)` is named in the error.
    pub fn new(mut gram: DMatrix<f64>, jitter: f64, dim: usize, positions: &[f64]) -> Result<Self> {
        if jitter < 0.0 || !jitter.is_finite() {
            return Err(Error::Domain(format!("jitter must be non-negative, got {jitter}")));
        }
        let n = gram.nrows();
        for i in 0..n {
            gram[(i, i)] += jitter;
        }
        let norm1 = one_norm(&gram);
        let fail = |condition: f64| {
            let (i, j, distance) = closest_pair(dim, positions).unwrap_or((0, 0, 0.0));
            Error::NearCoincident {
                i,
                j,
                distance,
                condition,
            }
        };
        let chol = gram.cholesky().ok_or_else(|| fail(f64::INFINITY))?;
        let inv = chol.inverse();
        let condition = norm1 * one_norm(&inv);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(fail(condition));
        }
        Ok(Self { chol, condition })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    pub fn solve_matrix(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(rhs)
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
