//! Thin helpers over nalgebra's dense LU with an explicit singularity test.

use nalgebra::{DMatrix, DVector, LU};

use crate::{Error, Result};

/// Relative pivot threshold below which a factorization is declared singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// LU factorization with partial pivoting that refuses near-singular input.
///
/// A matrix is rejected when its smallest `|U_ii|` falls below
/// [`PIVOT_TOLERANCE`] times the largest.
pub fn factor(
    matrix: DMatrix<f64>,
    context: &str,
) -> Result<LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch {
            what: "LU factorization (square matrix)",
            expected: matrix.nrows(),
            got: matrix.ncols(),
        });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix {
            context: format!("{context}: non-finite entry"),
        });
    }
    let lu = matrix.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let p = u[(i, i)].abs();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if u.nrows() > 0 && (hi == 0.0 || lo < PIVOT_TOLERANCE * hi) {
        return Err(Error::SingularMatrix {
            context: format!("{context}: pivot ratio {:e}", lo / hi),
        });
    }
    Ok(lu)
}

pub fn solve(matrix: DMatrix<f64>, rhs: &DVector<f64>, context: &str) -> Result<DVector<f64>> {
    let lu = factor(matrix, context)?;
    lu.solve(rhs).ok_or_else(|| Error::SingularMatrix {
        context: context.to_string(),
    })
}

pub fn inverse(matrix: DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let lu = factor(matrix, context)?;
    lu.try_inverse().ok_or_else(|| Error::SingularMatrix {
        context: context.to_string(),
    })
}

/// Largest absolute row sum (the operator norm induced by the max norm).
pub fn norm_inf(matrix: &DMatrix<f64>) -> f64 {
    matrix
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max norm of a vector.
pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_matrix_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(factor(m, "t"), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn inverse_and_norm() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let inv = inverse(m, "t").unwrap();
        assert_eq!(norm_inf(&inv), 0.5);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, 2.0, 0.5]);
        assert_eq!(norm_inf(&m), 4.0);
    }
}
