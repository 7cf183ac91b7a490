//! Rank-collapse measures: the residual distance to the nearest matrix with
//! identical rows, its scale-free variant, and the minimum row inner product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, frobenius_norm, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub mu: f64,
    /// `mu / y_frob`, or 0 when `y_frob` is 0.
    pub normalized_mu: f64,
    pub phi: f64,
    pub y_frob: f64,
}

impl MetricSample {
    pub fn of(y: &Matrix) -> Self {
        let mu = mu(y);
        let y_frob = frobenius_norm(y);
        Self {
            mu,
            normalized_mu: if y_frob > 0.0 { mu / y_frob } else { 0.0 },
            phi: phi(y),
            y_frob,
        }
    }
}

/// `Y - 1 gamma` where `gamma` is the row of column means.
pub fn residual(y: &Matrix) -> Matrix {
    let means = y.column_means();
    Matrix::from_fn(y.rows(), y.cols(), |i, j| y.get(i, j) - means[j]).expect("residual of finite entries is finite")
}

pub fn mu(y: &Matrix) -> f64 {
    frobenius_norm(&residual(y))
}

pub fn normalized_mu(y: &Matrix) -> Result<f64> {
    let norm = frobenius_norm(y);
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(mu(y) / norm)
}

/// Smallest inner product over all ordered row pairs, diagonal included.
pub fn phi(y: &Matrix) -> f64 {
    let n = y.rows();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i..n {
            best = best.min(dot(y.row(i), y.row(j)));
        }
    }
    best
}
