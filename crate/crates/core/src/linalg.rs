//! Dense SVD-based solvers shared by the fitting and subspace code.
//!
//! Matrices are `nalgebra` types throughout; the decompositions run in
//! `faer`, whose SVD stays accurate on rank-deficient input.

use faer::{Mat, MatRef};
use nalgebra::DMatrix;

/// Singular values at or below `rank_tol * σ_max` count as zero in
/// pseudo-inversion.
pub const PINV_RANK_TOL: f64 = 1e-10;

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Thin SVD `a = U diag(s) Vᵀ`, singular values non-increasing.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn thin_svd(a: &DMatrix<f64>) -> Svd {
    let (n, p) = a.shape();
    if n == 0 || p == 0 {
        return Svd { u: DMatrix::zeros(n, 0), s: Vec::new(), v: DMatrix::zeros(p, 0) };
    }
    let svd = to_faer(a).thin_svd().expect("SVD did not converge");
    let s = (0..n.min(p)).map(|i| svd.S()[i]).collect();
    Svd { u: from_faer(svd.U()), s, v: from_faer(svd.V()) }
}

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    to_faer(a).singular_values().expect("SVD did not converge")
}

/// Solves `min ‖A c − y‖² + λ‖c‖²` for every column of `rhs`.
///
/// With `ridge = 0` this is the minimum-norm least-squares solution, with
/// singular values below `rank_tol · σ_max` discarded. With `ridge > 0` the
/// filter factors `σ / (σ² + λ)` are applied to every singular direction.
pub fn ridge_solve(a: &DMatrix<f64>, rhs: &DMatrix<f64>, ridge: f64, rank_tol: f64) -> DMatrix<f64> {
    let cols = a.ncols();
    if a.nrows() == 0 || cols == 0 {
        return DMatrix::zeros(cols, rhs.ncols());
    }
    let Svd { u, s, v } = thin_svd(a);
    let cutoff = rank_tol * s[0];
    let mut projected = u.transpose() * rhs;
    for (mut row, &sigma) in projected.row_iter_mut().zip(&s) {
        let f = if ridge > 0.0 {
            sigma / (sigma * sigma + ridge)
        } else if sigma > cutoff && sigma > 0.0 {
            1.0 / sigma
        } else {
            0.0
        };
        row *= f;
    }
    v * projected
}

/// Orthonormal basis (as columns) of the numerical column space of `a`.
/// The threshold is `rank_tol` times the largest singular value, or times 1
/// when `a` is zero.
pub fn column_basis(a: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let Svd { u, s, .. } = thin_svd(a);
    let cutoff = rank_tol * if s[0] > 0.0 { s[0] } else { 1.0 };
    let rank = s.iter().take_while(|&&x| x > cutoff).count();
    u.columns(0, rank).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the columns of `q`,
/// which must be orthonormal.
pub fn complement_basis(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, k) = q.shape();
    if k == 0 {
        return DMatrix::identity(d, d);
    }
    let svd = to_faer(q).svd().expect("SVD did not converge");
    from_faer(svd.U().subcols(k, d - k))
}

/// Largest singular value (spectral norm).
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_gives_minimum_norm_solution() {
        // two identical columns: the minimum-norm split is even
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.0, 0.0]);
        let y = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 0.0]);
        let c = ridge_solve(&a, &y, 0.0, PINV_RANK_TOL);
        assert!((c[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((c[(1, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ridge_matches_normal_equations() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.5, -1.0, 2.0, 0.3, 0.0, 2.0, 1.0]);
        let y = DMatrix::from_column_slice(4, 1, &[1.0, -1.0, 0.5, 2.0]);
        let lambda = 0.7;
        let c = ridge_solve(&a, &y, lambda, PINV_RANK_TOL);
        let lhs = a.transpose() * &a + DMatrix::identity(2, 2) * lambda;
        let direct = lhs.lu().solve(&(a.transpose() * y)).unwrap();
        assert!((c - direct).amax() < 1e-12);
    }

    #[test]
    fn rank_deficient_svd_reconstructs() {
        // rank-one tall matrix: the case that motivated the faer backend
        let b = DMatrix::from_fn(38, 1, |i, _| (i as f64 * 0.3).sin());
        let c = DMatrix::from_fn(1, 7, |_, j| 1.0 + j as f64);
        let a = &b * &c;
        let Svd { u, s, v } = thin_svd(&a);
        let rec = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s)) * v.transpose();
        assert!((rec - &a).amax() < 1e-12 * a.amax());
        assert_eq!(column_basis(&a, 1e-10).ncols(), 1);
    }

    #[test]
    fn complement_completes_the_basis() {
        let q = column_basis(&DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]), 1e-10);
        let c = complement_basis(&q);
        assert_eq!(c.ncols(), 2);
        assert!((q.transpose() * &c).amax() < 1e-14);
        assert!((c.transpose() * &c - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn column_basis_of_zero_is_empty() {
        assert_eq!(column_basis(&DMatrix::zeros(3, 4), 1e-9).ncols(), 0);
    }
}
