//! Line-graph transforms derived from generalized graph Laplacians.
//!
//! A path graph on `n` vertices with uniform edge weight `w_e` and
//! self-loops `v1`, `v2` at its two ends has the Laplacian
//! `L = D - W + V`. Its eigenvectors, ordered by eigenvalue, form an
//! orthonormal transform whose low-frequency basis adapts to the boundary
//! conditions encoded by the self-loops: a self-loop of `2 w_e` at the first
//! vertex yields DST-IV, one of `w_e` yields DST-VII.

use super::TransformError;
use crate::linalg::{normalize_row_signs, symmetric_eigen, Matrix};

/// Path-graph Laplacian parameters. Self-loop weights are absolute, not
/// relative to `w_e`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GglSpec {
    pub n: usize,
    pub w_e: f64,
    pub v_e1: f64,
    pub v_e2: f64,
}

impl GglSpec {
    pub fn new(n: usize, w_e: f64, v_e1: f64, v_e2: f64) -> Result<Self, TransformError> {
        let spec = GglSpec { n, w_e, v_e1, v_e2 };
        spec.validate()?;
        Ok(spec)
    }

    /// Self-loops given as multiples of the edge weight.
    pub fn relative(n: usize, w_e: f64, loop1: f64, loop2: f64) -> Result<Self, TransformError> {
        Self::new(n, w_e, loop1 * w_e, loop2 * w_e)
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        if self.n < 2 || !(self.w_e > 0.0) || !(self.v_e1 >= 0.0) || !(self.v_e2 >= 0.0) {
            return Err(TransformError::InvalidGgl(*self));
        }
        Ok(())
    }
}

/// `L = D - W + V` for the path graph described by `spec`.
pub fn ggl_matrix(spec: &GglSpec) -> Matrix {
    let n = spec.n;
    let mut l = Matrix::zeros(n);
    for i in 0..n - 1 {
        l[(i, i + 1)] = -spec.w_e;
        l[(i + 1, i)] = -spec.w_e;
        l[(i, i)] += spec.w_e;
        l[(i + 1, i + 1)] += spec.w_e;
    }
    l[(0, 0)] += spec.v_e1;
    l[(n - 1, n - 1)] += spec.v_e2;
    l
}

/// Eigenvalues (ascending) of the Laplacian together with the LGT basis.
pub fn lgt_decomposition(spec: &GglSpec) -> Result<(Vec<f64>, Matrix), TransformError> {
    spec.validate()?;
    let eig = symmetric_eigen(&ggl_matrix(spec))?;
    let mut basis = eig.vectors;
    normalize_row_signs(&mut basis, 1e-9);
    Ok((eig.values, basis))
}

/// Orthonormal LGT: rows are Laplacian eigenvectors by ascending
/// eigenvalue, each with a positive first significant entry.
pub fn lgt_kernel(spec: &GglSpec) -> Result<Matrix, TransformError> {
    lgt_decomposition(spec).map(|(_, basis)| basis)
}
