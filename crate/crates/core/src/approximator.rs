//! Shallow dictionaries `span{φ∘g : g affine}` sampled on a grid, with
//! least-squares fitting and the diagnostics that separate polynomial from
//! non-polynomial activations.
//!
//! All fits go through one SVD-based solver: `ridge > 0` minimises
//! `‖Dc − f‖² + λ‖c‖²`, `ridge = 0` takes the minimum-norm least-squares
//! solution with singular values below `1e-10 · σ_max` discarded. Errors are
//! measured on the fitting grid: `sup_error` is the largest absolute
//! residual entry and `l2_error` the Euclidean norm of the residual vector.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::activations::{Activation, LeakyPhi};
use crate::grids::{sup_abs_diff, Grid, GridError, GridKind, SampledFunction};
use crate::linalg::{self, dot, PINV_RANK_TOL};
use crate::rng;
use crate::subspaces::{Subspace, DEFAULT_RANK_TOL};

/// Relative widening of the projected grid range used for bias sampling.
const BIAS_WIDENING: f64 = 0.10;

#[derive(Debug, Error)]
pub enum FitError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("axis_grid sampling needs a 1-D grid, got dimension {0}")]
    AxisGridDim(usize),
    #[error("map {index} has input dimension {got}, grid dimension is {expected}")]
    MapDim { index: usize, got: usize, expected: usize },
    #[error("affine map has non-finite parameters")]
    NonFiniteMap,
    #[error("dictionary column {column} is non-finite at grid point {row}")]
    NonFiniteEntry { column: usize, row: usize },
    #[error("target is non-finite at grid point {index}")]
    NonFiniteTarget { index: usize },
    #[error("target must be scalar, has codomain dimension {0}")]
    NotScalar(usize),
    #[error("target lives on a different grid than the dictionary")]
    GridMismatch,
    #[error("ridge must be finite and non-negative, got {0}")]
    BadRidge(f64),
    #[error("operation needs a 1-D grid, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("positively homogeneous fits need a sphere grid")]
    NotSphere,
    #[error("term {index}: {reason}")]
    BadTerm { index: usize, reason: String },
}

/// `x ↦ w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub w: Vec<f64>,
    pub b: f64,
}

impl AffineMap {
    pub fn new(w: Vec<f64>, b: f64) -> Result<AffineMap, FitError> {
        if !b.is_finite() || w.iter().any(|x| !x.is_finite()) {
            return Err(FitError::NonFiniteMap);
        }
        Ok(AffineMap { w, b })
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingScheme {
    /// `w` standard normal; `b` chosen so the zero of `w·x + b` falls
    /// uniformly inside the projected grid range widened by 10%.
    Gaussian,
    /// Regular lattice of `(w, b)` over `[−w_max, w_max] × [−b_max, b_max]`
    /// (1-D grids only), row-major, truncated to `count`.
    AxisGrid { w_max: f64, b_max: f64 },
}

impl SamplingScheme {
    pub const DEFAULT_AXIS_GRID: SamplingScheme = SamplingScheme::AxisGrid { w_max: 4.0, b_max: 4.0 };
}

/// Range of `w·x` over the grid, widened by 10% of its length.
fn widened_projection(grid: &Grid, w: &[f64]) -> (f64, f64) {
    let (lo, hi) = grid
        .points()
        .map(|x| dot(w, x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
    let pad = 0.5 * BIAS_WIDENING * (hi - lo);
    (lo - pad, hi + pad)
}

fn centred_bias(rng: &mut impl Rng, grid: &Grid, w: &[f64]) -> f64 {
    let (lo, hi) = widened_projection(grid, w);
    let zero_at = if hi > lo { rng.random_range(lo..hi) } else { lo };
    -zero_at
}

/// Deterministic per seed; the first `n` maps of a larger draw equal the
/// maps of a draw of size `n`.
pub fn sample_affine_maps(
    grid: &Grid,
    count: usize,
    seed: u64,
    scheme: SamplingScheme,
) -> Result<Vec<AffineMap>, FitError> {
    if count == 0 {
        return Err(FitError::ZeroCount);
    }
    let m = grid.dim();
    match scheme {
        SamplingScheme::Gaussian => {
            let mut rng = rng::seeded(seed);
            Ok((0..count)
                .map(|_| {
                    let w = rng::normal_vec(&mut rng, m);
                    let b = centred_bias(&mut rng, grid, &w);
                    AffineMap { w, b }
                })
                .collect())
        }
        SamplingScheme::AxisGrid { w_max, b_max } => {
            if m != 1 {
                return Err(FitError::AxisGridDim(m));
            }
            let side = (count as f64).sqrt().ceil() as usize;
            let level = |k: usize, max: f64| {
                if side < 2 {
                    0.0
                } else {
                    -max + 2.0 * max * k as f64 / (side - 1) as f64
                }
            };
            Ok((0..count)
                .map(|j| AffineMap { w: vec![level(j / side, w_max)], b: level(j % side, b_max) })
                .collect())
        }
    }
}

/// Matrix with entry `φ(w_j·x_i + b_j)`: one row per grid point, one column
/// per affine map.
#[derive(Debug, Clone)]
pub struct Dictionary {
    grid: Arc<Grid>,
    maps: Vec<AffineMap>,
    activation: Activation,
    matrix: DMatrix<f64>,
}

fn evaluate_columns(activation: &Activation, maps: &[AffineMap], grid: &Grid) -> Result<DMatrix<f64>, FitError> {
    for (index, map) in maps.iter().enumerate() {
        if map.w.len() != grid.dim() {
            return Err(FitError::MapDim { index, got: map.w.len(), expected: grid.dim() });
        }
    }
    let mut matrix = DMatrix::zeros(grid.len(), maps.len());
    for (j, map) in maps.iter().enumerate() {
        for (i, x) in grid.points().enumerate() {
            let v = activation.eval(map.eval(x));
            if !v.is_finite() {
                return Err(FitError::NonFiniteEntry { column: j, row: i });
            }
            matrix[(i, j)] = v;
        }
    }
    Ok(matrix)
}

impl Dictionary {
    pub fn build(activation: Activation, maps: Vec<AffineMap>, grid: Arc<Grid>) -> Result<Dictionary, FitError> {
        let matrix = evaluate_columns(&activation, &maps, &grid)?;
        Ok(Dictionary { grid, maps, activation, matrix })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn width(&self) -> usize {
        self.maps.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.matrix.column(j).iter().copied().collect()
    }

    /// Same maps and activation evaluated on another grid, e.g. a held-out
    /// grid.
    pub fn on_grid(&self, grid: Arc<Grid>) -> Result<Dictionary, FitError> {
        Dictionary::build(self.activation.clone(), self.maps.clone(), grid)
    }

    /// `Σ_j c_j φ(w_j·x + b_j)` at every grid point.
    pub fn predict(&self, coefficients: &[f64]) -> Vec<f64> {
        let c = DMatrix::from_column_slice(coefficients.len(), 1, coefficients);
        (&self.matrix * c).iter().copied().collect()
    }

    pub fn column_span(&self, rank_tol: f64) -> Subspace {
        Subspace::from_orthonormal_columns(&linalg::column_basis(&self.matrix, rank_tol), rank_tol)
    }
}

/// Convenience wrapper over [`Dictionary::build`].
pub fn build_dictionary(phi: &Activation, maps: &[AffineMap], grid: &Arc<Grid>) -> Result<Dictionary, FitError> {
    Dictionary::build(phi.clone(), maps.to_vec(), grid.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// One coefficient per dictionary column (per term for vector fits).
    pub coefficients: Vec<f64>,
    /// Fitted values, row-major over grid points and output coordinates.
    pub fitted: Vec<f64>,
    pub sup_error: f64,
    pub l2_error: f64,
    pub ridge: f64,
    pub seed: Option<u64>,
}

fn check_ridge(ridge: f64) -> Result<(), FitError> {
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(FitError::BadRidge(ridge));
    }
    Ok(())
}

fn check_target_finite(values: &[f64]) -> Result<(), FitError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(FitError::NonFiniteTarget { index }),
        None => Ok(()),
    }
}

/// Least squares of `matrix · c ≈ target`, with errors recomputed from the
/// returned coefficients.
pub(crate) fn solve_design(matrix: &DMatrix<f64>, target: &[f64], ridge: f64, seed: Option<u64>) -> FitResult {
    let rhs = DMatrix::from_column_slice(target.len(), 1, target);
    let c = linalg::ridge_solve(matrix, &rhs, ridge, PINV_RANK_TOL);
    let fitted: Vec<f64> = (matrix * &c).iter().copied().collect();
    let sup_error = sup_abs_diff(&fitted, target);
    let l2_error = fitted.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    FitResult { coefficients: c.iter().copied().collect(), fitted, sup_error, l2_error, ridge, seed }
}

/// Fits a scalar target with the dictionary columns.
pub fn fit(dictionary: &Dictionary, target: &SampledFunction, ridge: f64) -> Result<FitResult, FitError> {
    check_ridge(ridge)?;
    if target.codomain_dim() != 1 {
        return Err(FitError::NotScalar(target.codomain_dim()));
    }
    if !(Arc::ptr_eq(&dictionary.grid, target.grid()) || *dictionary.grid == **target.grid()) {
        return Err(FitError::GridMismatch);
    }
    check_target_finite(target.values())?;
    Ok(solve_design(&dictionary.matrix, target.values(), ridge, None))
}

/// Largest deviation of a fitted dictionary from `holdout` on the held-out
/// grid.
pub fn holdout_sup_error(
    dictionary: &Dictionary,
    coefficients: &[f64],
    holdout: &SampledFunction,
) -> Result<f64, FitError> {
    let moved = dictionary.on_grid(holdout.grid().clone())?;
    Ok(sup_abs_diff(&moved.predict(coefficients), holdout.values()))
}

/// Exponent vectors of all monomials of total degree `≤ degree` in `dim`
/// variables, graded then lexicographic.
pub fn monomial_exponents(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left as u32);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e as u32);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree {
        rec(dim, total, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

/// Columns `x^α` for every exponent vector.
pub fn monomial_matrix(grid: &Grid, exponents: &[Vec<u32>]) -> DMatrix<f64> {
    DMatrix::from_fn(grid.len(), exponents.len(), |i, j| {
        grid.point(i).iter().zip(&exponents[j]).map(|(x, &e)| x.powi(e as i32)).product()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub fit: FitResult,
    pub monomial_count: usize,
    /// More monomials than grid points: the projection interpolates.
    pub interpolating: bool,
}

/// Least-squares projection onto all monomials of total degree `≤ degree`.
pub fn polynomial_baseline(target: &SampledFunction, degree: usize) -> Result<BaselineFit, FitError> {
    if target.codomain_dim() != 1 {
        return Err(FitError::NotScalar(target.codomain_dim()));
    }
    check_target_finite(target.values())?;
    let exponents = monomial_exponents(target.grid().dim(), degree);
    let matrix = monomial_matrix(target.grid(), &exponents);
    let fit = solve_design(&matrix, target.values(), 0.0, None);
    Ok(BaselineFit { fit, monomial_count: exponents.len(), interpolating: exponents.len() > target.len() })
}

#[derive(Debug, Clone)]
pub struct AnnihilatorReport {
    /// Orthonormal basis of the left null space of the dictionary matrix.
    pub annihilator_basis: Subspace,
    /// `moments[j][p] = Σ_i ν_i t_i^p` for basis vector `j`, `p = 0..=M`.
    pub moments: Vec<Vec<f64>>,
    /// Smallest `p` with `|moment_p| > tol`, per basis vector.
    pub min_nonzero_moment: Vec<Option<usize>>,
}

/// Signed weight vectors on a 1-D grid that annihilate every dictionary
/// column, together with their power moments.
pub fn annihilator_probe(dictionary: &Dictionary, max_moment: usize, tol: f64) -> Result<AnnihilatorReport, FitError> {
    let grid = dictionary.grid();
    if grid.dim() != 1 {
        return Err(FitError::NotOneDimensional(grid.dim()));
    }
    let annihilator_basis = dictionary.column_span(DEFAULT_RANK_TOL).orthogonal_complement();
    let ts: Vec<f64> = grid.points().map(|p| p[0]).collect();
    let moments: Vec<Vec<f64>> = annihilator_basis
        .basis()
        .iter()
        .map(|nu| (0..=max_moment).map(|p| nu.iter().zip(&ts).map(|(n, t)| n * t.powi(p as i32)).sum()).collect())
        .collect();
    let min_nonzero_moment = moments.iter().map(|m| m.iter().position(|x: &f64| x.abs() > tol)).collect();
    Ok(AnnihilatorReport { annihilator_basis, moments, min_nonzero_moment })
}

/// `x ↦ W x + c` with `W` stored as `k` rows of length `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorAffineMap {
    pub rows: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl VectorAffineMap {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().zip(&self.bias).map(|(r, c)| dot(r, x) + c).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VectorMode {
    /// Terms `φ(w·x + b)·v` with `v` a unit vector of `R^k`.
    Tensor(Activation),
    /// Terms `Φ(W x + c)` with `Φ` applied coordinatewise.
    Map(LeakyPhi),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VectorTerms {
    Tensor { activation: Activation, maps: Vec<AffineMap>, directions: Vec<Vec<f64>> },
    Map { phi: LeakyPhi, maps: Vec<VectorAffineMap> },
}

impl VectorTerms {
    pub fn width(&self) -> usize {
        match self {
            VectorTerms::Tensor { maps, .. } => maps.len(),
            VectorTerms::Map { maps, .. } => maps.len(),
        }
    }

    /// Stacked design matrix: row `i·k + o` holds output coordinate `o` at
    /// grid point `i`, one column per term.
    pub fn design(&self, grid: &Grid, k: usize) -> Result<DMatrix<f64>, FitError> {
        let n = grid.len();
        let mut matrix = DMatrix::zeros(n * k, self.width());
        match self {
            VectorTerms::Tensor { activation, maps, directions } => {
                let scalar = evaluate_columns(activation, maps, grid)?;
                for (j, v) in directions.iter().enumerate() {
                    if v.len() != k {
                        return Err(FitError::BadTerm { index: j, reason: format!("direction has length {}, expected {k}", v.len()) });
                    }
                    for i in 0..n {
                        for (o, vo) in v.iter().enumerate() {
                            matrix[(i * k + o, j)] = scalar[(i, j)] * vo;
                        }
                    }
                }
            }
            VectorTerms::Map { phi, maps } => {
                for (j, map) in maps.iter().enumerate() {
                    if map.rows.len() != k || map.bias.len() != k || map.rows.iter().any(|r| r.len() != grid.dim()) {
                        return Err(FitError::BadTerm { index: j, reason: "map shape does not match grid and codomain".into() });
                    }
                    for (i, x) in grid.points().enumerate() {
                        for (o, y) in phi.apply(&map.eval(x)).into_iter().enumerate() {
                            if !y.is_finite() {
                                return Err(FitError::NonFiniteEntry { column: j, row: i });
                            }
                            matrix[(i * k + o, j)] = y;
                        }
                    }
                }
            }
        }
        Ok(matrix)
    }
}

/// Seeded terms for [`vector_fit`]. Tensor mode reuses
/// [`sample_affine_maps`] with the same seed, with directions drawn from a
/// separate stream.
pub fn sample_vector_terms(mode: &VectorMode, grid: &Grid, k: usize, width: usize, seed: u64) -> Result<VectorTerms, FitError> {
    if width == 0 {
        return Err(FitError::ZeroCount);
    }
    match mode {
        VectorMode::Tensor(activation) => {
            let maps = sample_affine_maps(grid, width, seed, SamplingScheme::Gaussian)?;
            let mut rng = rng::substream(seed, 1);
            let directions = (0..width)
                .map(|_| loop {
                    let v = rng::normal_vec(&mut rng, k);
                    let n = linalg::norm(&v);
                    if n > 1e-12 {
                        break v.into_iter().map(|x| x / n).collect();
                    }
                })
                .collect();
            Ok(VectorTerms::Tensor { activation: activation.clone(), maps, directions })
        }
        VectorMode::Map(phi) => {
            let mut rng = rng::seeded(seed);
            let maps = (0..width)
                .map(|_| {
                    let rows: Vec<Vec<f64>> = (0..k).map(|_| rng::normal_vec(&mut rng, grid.dim())).collect();
                    let bias = rows.iter().map(|r| centred_bias(&mut rng, grid, r)).collect();
                    VectorAffineMap { rows, bias }
                })
                .collect();
            Ok(VectorTerms::Map { phi: *phi, maps })
        }
    }
}

/// Stacked least squares over all grid points and output coordinates, one
/// scalar coefficient per term.
pub fn vector_fit_with_terms(terms: &VectorTerms, target: &SampledFunction, ridge: f64) -> Result<FitResult, FitError> {
    check_ridge(ridge)?;
    check_target_finite(target.values())?;
    let matrix = terms.design(target.grid(), target.codomain_dim())?;
    Ok(solve_design(&matrix, target.values(), ridge, None))
}

pub fn vector_fit(mode: &VectorMode, target: &SampledFunction, width: usize, seed: u64, ridge: f64) -> Result<FitResult, FitError> {
    let terms = sample_vector_terms(mode, target.grid(), target.codomain_dim(), width, seed)?;
    let mut result = vector_fit_with_terms(&terms, target, ridge)?;
    result.seed = Some(seed);
    Ok(result)
}

/// Term `x ↦ φ(Σ_i α_i x_i⁺ + β_i x_i⁻)` of a positively homogeneous fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PhTerm {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl PhTerm {
    pub fn inner(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.alpha.iter().zip(&self.beta))
            .map(|(&xi, (a, b))| a * xi.max(0.0) + b * (-xi).max(0.0))
            .sum()
    }
}

pub fn sample_ph_terms(dim: usize, width: usize, seed: u64) -> Vec<PhTerm> {
    let mut rng = rng::seeded(seed);
    (0..width)
        .map(|_| PhTerm { alpha: rng::normal_vec(&mut rng, dim), beta: rng::normal_vec(&mut rng, dim) })
        .collect()
}

pub fn ph_fit_with_terms(phi: LeakyPhi, terms: &[PhTerm], target: &SampledFunction, ridge: f64) -> Result<FitResult, FitError> {
    check_ridge(ridge)?;
    let grid = target.grid();
    if *grid.kind() != GridKind::Sphere {
        return Err(FitError::NotSphere);
    }
    if target.codomain_dim() != 1 {
        return Err(FitError::NotScalar(target.codomain_dim()));
    }
    check_target_finite(target.values())?;
    for (index, t) in terms.iter().enumerate() {
        if t.alpha.len() != grid.dim() || t.beta.len() != grid.dim() {
            return Err(FitError::BadTerm { index, reason: format!("coefficients must have length {}", grid.dim()) });
        }
    }
    let matrix = DMatrix::from_fn(grid.len(), terms.len(), |i, j| phi.scalar(terms[j].inner(grid.point(i))));
    Ok(solve_design(&matrix, target.values(), ridge, None))
}

/// Fits a function sampled on the sphere with `span Φ(span{e_i⁺, e_i⁻})`.
pub fn ph_fit(phi: LeakyPhi, target: &SampledFunction, width: usize, seed: u64, ridge: f64) -> Result<FitResult, FitError> {
    if width == 0 {
        return Err(FitError::ZeroCount);
    }
    let terms = sample_ph_terms(target.grid().dim(), width, seed);
    let mut result = ph_fit_with_terms(phi, &terms, target, ridge)?;
    result.seed = Some(seed);
    Ok(result)
}
