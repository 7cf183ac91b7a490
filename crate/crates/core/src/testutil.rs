//! Proptest strategies shared by the unit tests.

use std::ops::Range;

use proptest::prelude::*;

use crate::linalg::{row_normalize, Matrix};

pub fn matrix_strategy(rows: Range<usize>, cols: Range<usize>, bound: f64) -> impl Strategy<Value = Matrix> {
    (rows, cols)
        .prop_flat_map(move |(r, c)| proptest::collection::vec(-bound..bound, r * c).prop_map(move |v| Matrix::new(r, c, v).unwrap()))
}

/// Matrices whose rows all have unit norm.
pub fn unit_rows_strategy(rows: Range<usize>, cols: Range<usize>) -> impl Strategy<Value = Matrix> {
    matrix_strategy(rows, cols, 1.0)
        .prop_filter("rows must be normalizable", |m| m.row_norms().iter().all(|&n| n > 1e-3))
        .prop_map(|m| row_normalize(&m).unwrap())
}
