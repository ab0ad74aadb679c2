//! Finite grids standing in for compact domains, and functions sampled on
//! them.
//!
//! Points are stored explicitly in a flat row-major buffer so that sample
//! indices are stable across every downstream matrix.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::rng;

/// Default cap on the number of points a box grid may contain.
pub const DEFAULT_POINT_CAP: usize = 1_000_000;

const SPHERE_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs at least one axis")]
    NoAxes,
    #[error("axis {axis}: lower bound {lo} must be below upper bound {hi}")]
    EmptyAxis { axis: usize, lo: f64, hi: f64 },
    #[error("points_per_axis must be at least 2, got {0}")]
    TooFewPointsPerAxis(usize),
    #[error("grid would hold {requested} points, above the cap of {cap}")]
    TooManyPoints { requested: u128, cap: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("count must be positive")]
    ZeroCount,
    #[error("grid has no points")]
    Empty,
    #[error("point {index} has {got} coordinates, expected {expected}")]
    PointArity { index: usize, got: usize, expected: usize },
    #[error("point {index} duplicates point {first}")]
    DuplicatePoint { index: usize, first: usize },
    #[error("point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },
    #[error("function has {got} values, grid has {expected} points")]
    ValueCount { got: usize, expected: usize },
    #[error("codomain dimension must be positive")]
    ZeroCodomain,
    #[error("functions live on different grids")]
    GridMismatch,
    #[error("codomain dimensions differ: {0} vs {1}")]
    CodomainMismatch(usize, usize),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridKind {
    Box { bounds: Vec<(f64, f64)> },
    Sphere,
    Explicit,
}

/// Ordered, duplicate-free sample of points in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    coords: Vec<f64>,
    kind: GridKind,
}

impl Grid {
    /// Cartesian product of equally spaced axes (both endpoints included),
    /// in lexicographic order with the last axis varying fastest.
    pub fn make_box(bounds: &[(f64, f64)], points_per_axis: usize) -> Result<Grid, GridError> {
        Self::make_box_with_cap(bounds, points_per_axis, DEFAULT_POINT_CAP)
    }

    pub fn make_box_with_cap(
        bounds: &[(f64, f64)],
        points_per_axis: usize,
        cap: usize,
    ) -> Result<Grid, GridError> {
        if bounds.is_empty() {
            return Err(GridError::NoAxes);
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(GridError::EmptyAxis { axis, lo, hi });
            }
        }
        if points_per_axis < 2 {
            return Err(GridError::TooFewPointsPerAxis(points_per_axis));
        }
        let requested = (points_per_axis as u128).checked_pow(bounds.len() as u32);
        let total = match requested {
            Some(n) if n <= cap as u128 => n as usize,
            Some(n) => return Err(GridError::TooManyPoints { requested: n, cap }),
            None => return Err(GridError::TooManyPoints { requested: u128::MAX, cap }),
        };

        let dim = bounds.len();
        let axes: Vec<Vec<f64>> = bounds
            .iter()
            .map(|&(lo, hi)| {
                let step = (hi - lo) / (points_per_axis - 1) as f64;
                (0..points_per_axis)
                    .map(|k| if k + 1 == points_per_axis { hi } else { lo + step * k as f64 })
                    .collect()
            })
            .collect();

        let mut coords = Vec::with_capacity(total * dim);
        let mut index = vec![0usize; dim];
        for _ in 0..total {
            coords.extend(index.iter().enumerate().map(|(axis, &k)| axes[axis][k]));
            for axis in (0..dim).rev() {
                index[axis] += 1;
                if index[axis] < points_per_axis {
                    break;
                }
                index[axis] = 0;
            }
        }
        Ok(Grid { dim, coords, kind: GridKind::Box { bounds: bounds.to_vec() } })
    }

    /// `count` points on the unit sphere of `R^dim`, obtained by normalising
    /// standard-normal draws.
    pub fn make_sphere(dim: usize, count: usize, seed: u64) -> Result<Grid, GridError> {
        if dim == 0 {
            return Err(GridError::ZeroDimension);
        }
        if count == 0 {
            return Err(GridError::ZeroCount);
        }
        let mut rng = rng::seeded(seed);
        let mut coords = Vec::with_capacity(dim * count);
        for _ in 0..count {
            let p = loop {
                let v = rng::normal_vec(&mut rng, dim);
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-300 {
                    break v.into_iter().map(|x| x / norm).collect::<Vec<_>>();
                }
            };
            debug_assert!(
                (p.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() <= SPHERE_NORM_TOL
            );
            coords.extend(p);
        }
        check_distinct(dim, &coords)?;
        Ok(Grid { dim, coords, kind: GridKind::Sphere })
    }

    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Grid, GridError> {
        let dim = points.first().ok_or(GridError::Empty)?.len();
        if dim == 0 {
            return Err(GridError::ZeroDimension);
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(GridError::PointArity { index, got: p.len(), expected: dim });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(GridError::NonFinitePoint { index });
            }
            coords.extend_from_slice(p);
        }
        check_distinct(dim, &coords)?;
        Ok(Grid { dim, coords, kind: GridKind::Explicit })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn kind(&self) -> &GridKind {
        &self.kind
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }
}

fn check_distinct(dim: usize, coords: &[f64]) -> Result<(), GridError> {
    let mut seen = std::collections::HashMap::with_capacity(coords.len() / dim);
    for (index, p) in coords.chunks_exact(dim).enumerate() {
        // +0.0 and -0.0 are the same point
        let key: Vec<u64> = p.iter().map(|x| (x + 0.0).to_bits()).collect();
        if let Some(&first) = seen.get(&key) {
            return Err(GridError::DuplicatePoint { index, first });
        }
        seen.insert(key, index);
    }
    Ok(())
}

/// Real- or vector-valued function known only through its values on a grid.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    codomain_dim: usize,
}

impl SampledFunction {
    /// `values` is row-major: `codomain_dim` entries per grid point.
    pub fn new(
        grid: Arc<Grid>,
        values: Vec<f64>,
        codomain_dim: usize,
    ) -> Result<SampledFunction, GridError> {
        if codomain_dim == 0 {
            return Err(GridError::ZeroCodomain);
        }
        if values.len() != grid.len() * codomain_dim {
            return Err(GridError::ValueCount {
                got: values.len() / codomain_dim,
                expected: grid.len(),
            });
        }
        Ok(SampledFunction { grid, values, codomain_dim })
    }

    pub fn scalar(grid: Arc<Grid>, values: Vec<f64>) -> Result<SampledFunction, GridError> {
        Self::new(grid, values, 1)
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> SampledFunction {
        let values = grid.points().map(f).collect();
        SampledFunction { grid, values, codomain_dim: 1 }
    }

    pub fn from_vector_fn(
        grid: Arc<Grid>,
        codomain_dim: usize,
        f: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<SampledFunction, GridError> {
        let mut values = Vec::with_capacity(grid.len() * codomain_dim);
        for p in grid.points() {
            let v = f(p);
            if v.len() != codomain_dim {
                return Err(GridError::CodomainMismatch(v.len(), codomain_dim));
            }
            values.extend(v);
        }
        Self::new(grid, values, codomain_dim)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.codomain_dim..(i + 1) * self.codomain_dim]
    }

    /// Flat row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &SampledFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    /// Writes `x1,...,xm,v1,...,vk` with one row per grid point and every
    /// real printed with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), GridError> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (1..=self.grid.dim())
            .map(|i| format!("x{i}"))
            .chain((1..=self.codomain_dim).map(|i| format!("v{i}")))
            .collect();
        w.write_record(&header).map_err(csv_err)?;
        for (i, p) in self.grid.points().enumerate() {
            let row: Vec<String> = p.iter().chain(self.value(i)).map(|&x| fmt_real(x)).collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`SampledFunction::write_csv`]; the grid
    /// becomes an explicit grid over the listed points.
    pub fn read_csv<R: Read>(input: R) -> Result<SampledFunction, GridError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        let m = header.iter().filter(|h| h.trim().starts_with('x')).count();
        let k = header.iter().filter(|h| h.trim().starts_with('v')).count();
        if m == 0 || k == 0 || m + k != header.len() {
            return Err(GridError::Csv(format!(
                "header must be x1..xm,v1..vk, got {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut points = Vec::new();
        let mut values = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let nums = rec
                .iter()
                .enumerate()
                .map(|(col, s)| {
                    s.trim().parse::<f64>().map_err(|_| {
                        GridError::Csv(format!("row {row}, column {}: bad number {s:?}", &header[col]))
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            points.push(nums[..m].to_vec());
            values.extend_from_slice(&nums[m..]);
        }
        let grid = Arc::new(Grid::from_points(points)?);
        Self::new(grid, values, k)
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<(), GridError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<SampledFunction, GridError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Largest max-norm difference between two sampled functions on one grid.
pub fn sup_distance(f: &SampledFunction, g: &SampledFunction) -> Result<f64, GridError> {
    if !f.same_grid(g) {
        return Err(GridError::GridMismatch);
    }
    if f.codomain_dim != g.codomain_dim {
        return Err(GridError::CodomainMismatch(f.codomain_dim, g.codomain_dim));
    }
    Ok(sup_abs_diff(&f.values, &g.values))
}

pub(crate) fn sup_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// 17 significant digits, the shortest width that round-trips every f64.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> GridError {
    GridError::Csv(e.to_string())
}
