//! Small dense linear algebra helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{GeometryError, Result};

/// Eigen-pairs of the symmetric pencil `h v = lambda g v`, with `g` SPD.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `g`-orthonormal eigenvectors, as columns.
    pub vectors: DMatrix<f64>,
}

/// Solve `h v = lambda g v` through the Cholesky reduction `g = L L^T`,
/// `L^{-1} h L^{-T} w = lambda w`, `v = L^{-T} w`.
pub fn generalized_symmetric_eigen(g: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<GeneralizedEigen> {
    let n = g.nrows();
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| GeometryError::Eigen("metric is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| GeometryError::Eigen("singular Cholesky factor".into()))?;
    let mut c = &l_inv * h * l_inv.transpose();
    symmetrize(&mut c);
    if c.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::Eigen("non-finite reduced matrix".into()));
    }
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let back = l_inv.transpose();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &(&back * eig.eigenvectors.column(i)));
    }
    Ok(GeneralizedEigen { values, vectors })
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Generalized cross product of the `m - 1` columns of `a` (an `m x (m-1)`
/// matrix): the vector `w` orthogonal to every column with
/// `det[a | w] = sum of squared maximal minors >= 0`.
pub fn cofactor_normal(a: &DMatrix<f64>) -> DVector<f64> {
    let m = a.nrows();
    assert_eq!(a.ncols() + 1, m, "cofactor_normal needs m x (m-1)");
    DVector::from_fn(m, |k, _| {
        let minor = a.clone().remove_row(k);
        let sign = if (k + m - 1) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

/// Determinant of the square matrix formed by the columns of `a` followed by `v`.
pub fn det_with_column(a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let m = a.nrows();
    let mut full = DMatrix::zeros(m, a.ncols() + 1);
    full.view_mut((0, 0), (m, a.ncols())).copy_from(a);
    full.set_column(a.ncols(), v);
    full.determinant()
}

pub fn smallest_singular_value(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}
