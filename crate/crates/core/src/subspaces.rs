//! Linear subspaces of `R^d` held as orthonormal bases, with
//! tolerance-aware membership and equality.

use std::io::Write;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::grids::fmt_real;
use crate::linalg::{self, dot, norm};

/// Default relative rank tolerance for [`Subspace::span_of`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SubspaceError {
    #[error("ambient dimension must be positive")]
    ZeroAmbient,
    #[error("vector {index} has length {got}, ambient dimension is {expected}")]
    Length { index: usize, got: usize, expected: usize },
    #[error("ambient dimensions differ: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<Vec<f64>>,
    rank_tol: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Result<Subspace, SubspaceError> {
        if ambient_dim == 0 {
            return Err(SubspaceError::ZeroAmbient);
        }
        Ok(Subspace { ambient_dim, basis: Vec::new(), rank_tol: DEFAULT_RANK_TOL })
    }

    /// Numerical column span of `vectors`. Singular directions with singular
    /// value at most `rank_tol` times the largest one are discarded.
    pub fn span_of<I, V>(ambient_dim: usize, vectors: I, rank_tol: f64) -> Result<Subspace, SubspaceError>
    where
        I: IntoIterator<Item = V>,
        V: AsRef<[f64]>,
    {
        if ambient_dim == 0 {
            return Err(SubspaceError::ZeroAmbient);
        }
        let mut flat = Vec::new();
        let mut count = 0;
        for (index, v) in vectors.into_iter().enumerate() {
            let v = v.as_ref();
            if v.len() != ambient_dim {
                return Err(SubspaceError::Length { index, got: v.len(), expected: ambient_dim });
            }
            flat.extend_from_slice(v);
            count += 1;
        }
        let m = DMatrix::from_column_slice(ambient_dim, count, &flat);
        Ok(Self::from_orthonormal_columns(&linalg::column_basis(&m, rank_tol), rank_tol))
    }

    /// Wraps the columns of `q`, which must already be orthonormal.
    pub(crate) fn from_orthonormal_columns(q: &DMatrix<f64>, rank_tol: f64) -> Subspace {
        let basis = q.column_iter().map(|c| c.iter().copied().collect()).collect();
        Subspace { ambient_dim: q.nrows(), basis, rank_tol }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Basis as a `d × k` matrix.
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        let flat: Vec<f64> = self.basis.iter().flatten().copied().collect();
        DMatrix::from_column_slice(self.ambient_dim, self.dim(), &flat)
    }

    fn check_len(&self, v: &[f64]) -> Result<(), SubspaceError> {
        if v.len() != self.ambient_dim {
            return Err(SubspaceError::Length { index: 0, got: v.len(), expected: self.ambient_dim });
        }
        Ok(())
    }

    /// Component of `v` orthogonal to the subspace (two Gram–Schmidt passes).
    pub fn residual(&self, v: &[f64]) -> Result<Vec<f64>, SubspaceError> {
        self.check_len(v)?;
        Ok(self.residual_unchecked(v))
    }

    fn residual_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
            }
        }
        r
    }

    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>, SubspaceError> {
        let r = self.residual(v)?;
        Ok(v.iter().zip(&r).map(|(a, b)| a - b).collect())
    }

    /// True when the residual of `v` is at most `tol · max(‖v‖, 1)`.
    pub fn contains(&self, v: &[f64], tol: f64) -> Result<bool, SubspaceError> {
        let r = self.residual(v)?;
        Ok(norm(&r) <= tol * norm(v).max(1.0))
    }

    /// Every basis vector of `other` lies in `self` within `tol`.
    pub fn contains_subspace(&self, other: &Subspace, tol: f64) -> Result<bool, SubspaceError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(SubspaceError::AmbientMismatch(self.ambient_dim, other.ambient_dim));
        }
        for q in &other.basis {
            if !self.contains(q, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Adds the normalised residual of `v` when it exceeds `rank_tol · ‖v‖`.
    /// Returns whether the dimension grew.
    pub fn extend(&mut self, v: &[f64]) -> Result<bool, SubspaceError> {
        self.check_len(v)?;
        Ok(self.extend_unchecked(v))
    }

    pub(crate) fn extend_unchecked(&mut self, v: &[f64]) -> bool {
        if self.dim() == self.ambient_dim {
            return false;
        }
        let scale = norm(v);
        if scale == 0.0 || !scale.is_finite() {
            return false;
        }
        let r = self.residual_unchecked(v);
        let rn = norm(&r);
        if rn <= self.rank_tol * scale {
            return false;
        }
        self.basis.push(r.into_iter().map(|x| x / rn).collect());
        true
    }

    /// Sine of the largest principal angle, from the spectral norm of the
    /// part of `other`'s basis lying outside `self`. Requires equal
    /// dimensions.
    fn max_angle_sin(&self, other: &Subspace) -> f64 {
        let k = other.dim();
        let mut flat = Vec::with_capacity(self.ambient_dim * k);
        for q in &other.basis {
            flat.extend(self.residual_unchecked(q));
        }
        let r = DMatrix::from_column_slice(self.ambient_dim, k, &flat);
        linalg::spectral_norm(&r).min(1.0)
    }

    /// Largest principal angle between two subspaces of equal dimension, in
    /// radians. `None` when the dimensions differ.
    pub fn largest_principal_angle(&self, other: &Subspace) -> Result<Option<f64>, SubspaceError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(SubspaceError::AmbientMismatch(self.ambient_dim, other.ambient_dim));
        }
        if self.dim() != other.dim() {
            return Ok(None);
        }
        if self.dim() == 0 {
            return Ok(Some(0.0));
        }
        let sin = self.max_angle_sin(other);
        if sin < std::f64::consts::FRAC_1_SQRT_2 {
            return Ok(Some(sin.asin()));
        }
        // large angles: the cosine route is better conditioned there
        let cross = self.basis_matrix().transpose() * other.basis_matrix();
        let s_min = linalg::singular_values(&cross).last().copied().unwrap_or(0.0).clamp(-1.0, 1.0);
        Ok(Some(s_min.acos()))
    }

    /// Same dimension and largest principal angle at most `tol`.
    pub fn equal(&self, other: &Subspace, tol: f64) -> Result<bool, SubspaceError> {
        Ok(matches!(self.largest_principal_angle(other)?, Some(a) if a <= tol))
    }

    /// Orthonormal basis of the orthogonal complement in `R^d`.
    pub fn orthogonal_complement(&self) -> Subspace {
        Self::from_orthonormal_columns(&linalg::complement_basis(&self.basis_matrix()), self.rank_tol)
    }

    /// One basis vector per row, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), SubspaceError> {
        for q in &self.basis {
            let row: Vec<String> = q.iter().map(|&x| fmt_real(x)).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
