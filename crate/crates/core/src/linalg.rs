//! Small dense linear algebra helpers: square matrices, symmetric
//! eigendecomposition (cyclic Jacobi) and least squares.

use std::ops::{Index, IndexMut};

/// Row-major square matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.n, |r, c| self[(c, r)])
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        Matrix::from_fn(n, |r, c| (0..n).map(|k| self[(r, k)] * other[(k, c)]).sum())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Largest absolute entry of `self * self^T - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.mul(&self.transpose());
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for c in 0..self.n {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((g[(r, c)] - target).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|r| (0..r).all(|c| (self[(r, c)] - self[(c, r)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.n + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.n + c]
    }
}

/// Eigenvalues (ascending) and matching unit eigenvectors (as rows).
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
pub struct EigenError {
    pub sweeps: usize,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen, EigenError> {
    const MAX_SWEEPS: usize = 100;
    let n = m.n();
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let scale = a.data.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[(r, c)] * a[(r, c)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(EigenError { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    // Columns of `v` are eigenvectors; emit them as rows.
    let vectors = Matrix::from_fn(n, |r, c| v[(c, order[r])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Flips each row so that its first entry with magnitude above `tol` is
/// positive.
pub fn normalize_row_signs(m: &mut Matrix, tol: f64) {
    let n = m.n();
    for r in 0..n {
        if let Some(&first) = m.row(r).iter().find(|x| x.abs() > tol) {
            if first < 0.0 {
                for c in 0..n {
                    m[(r, c)] = -m[(r, c)];
                }
            }
        }
    }
}

/// Least-squares polynomial fit `y ~ sum_k coef[k] x^k`, solved through
/// the normal equations on centered and scaled abscissae. Returns the
/// coefficients in the original variable.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Option<Vec<f64>> {
    let m = degree + 1;
    if xs.len() < m || xs.len() != ys.len() {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let spread = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if spread == 0.0 {
        return None;
    }
    let us: Vec<f64> = xs.iter().map(|x| (x - mean) / spread).collect();
    // Augmented normal equations.
    let mut a = vec![vec![0.0; m + 1]; m];
    for (u, y) in us.iter().zip(ys) {
        let mut pows = vec![1.0; 2 * m];
        for k in 1..2 * m {
            pows[k] = pows[k - 1] * u;
        }
        for r in 0..m {
            for c in 0..m {
                a[r][c] += pows[r + c];
            }
            a[r][m] += pows[r] * y;
        }
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let scaled: Vec<f64> = (0..m).map(|r| a[r][m] / a[r][r]).collect();
    // Expand sum_k s_k ((x - mean)/spread)^k into powers of x.
    let mut coef = vec![0.0; m];
    let mut binom = vec![vec![0.0; m]; m];
    for n in 0..m {
        binom[n][0] = 1.0;
        for k in 1..=n {
            binom[n][k] = binom[n - 1][k - 1] + if k < n { binom[n - 1][k] } else { 0.0 };
        }
    }
    for (k, s) in scaled.iter().enumerate() {
        let f = s / spread.powi(k as i32);
        for j in 0..=k {
            coef[j] += f * binom[k][j] * (-mean).powi((k - j) as i32);
        }
    }
    Some(coef)
}

/// Evaluates `sum coef[k] x^k`.
pub fn polyval(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Definite integral of a polynomial over `[a, b]`.
pub fn polyint(coef: &[f64], a: f64, b: f64) -> f64 {
    let prim = |x: f64| {
        coef.iter().enumerate().rev().fold(0.0, |acc, (k, c)| acc * x + c / (k as f64 + 1.0)) * x
    };
    prim(b) - prim(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes() {
        let m = Matrix::from_fn(5, |r, c| 1.0 / (1.0 + r as f64 + c as f64));
        let e = symmetric_eigen(&m).unwrap();
        assert!(e.vectors.orthonormality_error() < 1e-12);
        for (i, &lambda) in e.values.iter().enumerate() {
            let v = e.vectors.row(i);
            let mv = m.mul_vec(v);
            for k in 0..5 {
                assert!((mv[k] - lambda * v[k]).abs() < 1e-12);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn polyfit_recovers_cubic() {
        let xs: Vec<f64> = (0..6).map(|i| 30.0 + i as f64 * 2.5).collect();
        let truth = [0.5, -0.25, 0.01, 0.0003];
        let ys: Vec<f64> = xs.iter().map(|&x| polyval(&truth, x)).collect();
        let c = polyfit(&xs, &ys, 3).unwrap();
        for &x in &xs {
            assert!((polyval(&c, x) - polyval(&truth, x)).abs() < 1e-9);
        }
        let exact = polyint(&truth, 31.0, 40.0);
        assert!((polyint(&c, 31.0, 40.0) - exact).abs() < 1e-7);
    }
}
