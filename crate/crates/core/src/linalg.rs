//! Small dense linear-algebra helpers over `nalgebra::DMatrix`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Lower-triangular `L` with `L * L^T = matrix`.
///
/// Fails with the order of the first leading minor whose pivot is not
/// positive. Only the lower triangle of `matrix` is read.
pub fn cholesky_factor(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: matrix.ncols(),
        });
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = matrix[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > 0.0) {
            return Err(Error::NotPositiveDefinite {
                order: j + 1,
                pivot,
            });
        }
        let diag = pivot.sqrt();
        l[(j, j)] = diag;
        for i in j + 1..n {
            let mut s = matrix[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / diag;
        }
    }
    Ok(l)
}

/// `ln det` of a symmetric positive definite matrix via its Cholesky factor.
pub fn ln_det_spd(matrix: &DMatrix<f64>) -> Result<f64> {
    let l = cholesky_factor(matrix)?;
    Ok((0..l.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
///
/// Each eigenvector is sign-normalized so its largest-magnitude component is
/// positive.
pub fn sorted_eigen(matrix: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = matrix.nrows();
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[(r, col)] = sign * v[r];
        }
    }
    (values, vectors)
}

/// Nearest positive definite correlation matrix by eigenvalue clipping.
///
/// Eigenvalues below `floor` are raised to `floor`, the matrix is rebuilt
/// and rescaled back to a unit diagonal.
pub fn nearest_correlation(matrix: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let (values, vectors) = sorted_eigen(matrix);
    let clipped = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| v.max(floor)),
    ));
    let rebuilt = &vectors * clipped * vectors.transpose();
    let n = rebuilt.nrows();
    let scale: Vec<f64> = (0..n).map(|i| rebuilt[(i, i)].sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            rebuilt[(i, j)] / (scale[i] * scale[j])
        }
    })
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identity_factor() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(cholesky_factor(&id).unwrap(), id);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let l = cholesky_factor(&m).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.75f64.sqrt()]);
        assert!(max_abs_diff(&l, &expected) < 1e-15);
    }

    #[test]
    fn reconstructs_random_spd() {
        let mut rng = crate::seed::rng(42);
        let m = DMatrix::from_fn(10, 10, |_, _| rng.random_range(-1.0..1.0));
        let a = m.transpose() * &m + DMatrix::<f64>::identity(10, 10);
        let l = cholesky_factor(&a).unwrap();
        for i in 0..10 {
            for j in i + 1..10 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
        assert!(max_abs_diff(&(&l * l.transpose()), &a) < 1e-10);
    }

    #[test]
    fn names_failing_minor() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        match cholesky_factor(&m) {
            Err(Error::NotPositiveDefinite { order, .. }) => assert_eq!(order, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn repair_yields_positive_definite_correlation() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, 0.9, 0.9, 1.0, -0.9, 0.9, -0.9, 1.0]);
        assert!(cholesky_factor(&m).is_err());
        let fixed = nearest_correlation(&m, 1e-6);
        assert!(cholesky_factor(&fixed).is_ok());
        for i in 0..3 {
            assert!((fixed[(i, i)] - 1.0).abs() < 1e-12);
        }
        let already = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        assert!(max_abs_diff(&nearest_correlation(&already, 1e-6), &already) < 1e-12);
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]);
        let (values, _) = sorted_eigen(&m);
        assert!((values[0] - 1.6).abs() < 1e-12 && (values[1] - 0.4).abs() < 1e-12);
    }
}
