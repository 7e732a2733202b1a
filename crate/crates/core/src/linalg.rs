//! Dense linear-algebra helpers shared by the estimators and the rank checks.
//!
//! Least squares goes through a thin SVD, which doubles as the rank-revealing
//! factorization: a design whose smallest singular value falls below
//! `rel_tol * sigma_max` is rejected instead of being regularized.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative threshold for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Singular values sorted in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Count of singular values strictly above `rel_tol * sigma_max`.
/// An all-zero spectrum has rank 0.
pub fn numerical_rank(sv_desc: &[f64], rel_tol: f64) -> usize {
    let max = sv_desc.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    sv_desc.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Spectral norm.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Solution of `min ||design * coef - targets||_F` together with the
/// singular-value extremes of the design.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// k x m coefficient matrix.
    pub coef: DMatrix<f64>,
    pub min_sv: f64,
    pub max_sv: f64,
}

/// Ordinary least squares for an `n x k` design and `n x m` targets.
///
/// Fails with [`Error::DegenerateDesign`] when the design is rank deficient at
/// `rel_tol`, or when there are fewer rows than columns.
pub fn lstsq(design: &DMatrix<f64>, targets: &DMatrix<f64>, rel_tol: f64) -> Result<LeastSquares> {
    if design.nrows() != targets.nrows() {
        return Err(Error::Spec(format!(
            "design has {} rows but targets have {}",
            design.nrows(),
            targets.nrows()
        )));
    }
    let (n, k) = design.shape();
    if k == 0 {
        return Err(Error::DegenerateDesign("design has no columns".into()));
    }
    if n < k {
        return Err(Error::DegenerateDesign(format!(
            "{n} observations for {k} regressors"
        )));
    }
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    if !(max_sv > 0.0) || min_sv <= rel_tol * max_sv {
        return Err(Error::DegenerateDesign(format!(
            "design is rank deficient (singular values {min_sv:e} .. {max_sv:e})"
        )));
    }
    let coef = svd
        .solve(targets, 0.0)
        .map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(LeastSquares {
        coef,
        min_sv,
        max_sv,
    })
}

/// Stack column vectors side by side into a `dim x n` matrix.
pub fn columns(vectors: &[&DVector<f64>], dim: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

pub fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Row-major nested-array form of a matrix, used for every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(m: &DMatrix<f64>) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows || self.data.iter().any(|r| r.len() != self.cols) {
            return Err(Error::Schema(format!(
                "matrix data does not match declared shape {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |i, j| self.data[i][j]))
    }
}

/// `#[serde(with = "crate::linalg::matrix_serde")]` adapter for `DMatrix<f64>` fields.
pub mod matrix_serde {
    use super::MatrixJson;
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        json.to_matrix().map_err(serde::de::Error::custom)
    }
}
