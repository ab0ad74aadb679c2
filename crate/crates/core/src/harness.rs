//! Experiment configs, result files and plots.
//!
//! One JSON document describes one run. Keys are flat and mirror the CLI
//! flags; which ones are required depends on `kind`. A manifest lists config
//! files so a whole suite runs with `uat check`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure (non-finite
//! values), 4 failed expectation in check mode.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activations::{self, Activation, ActivationError, FnMap, LeakyPhi, LineProbe, PolyDetector};
use crate::approximator::{self, FitError, SamplingScheme, VectorMode};
use crate::grids::{fmt_real, sup_distance, Grid, GridError, GridKind, SampledFunction};
use crate::lattice::{self, ClosureBudget, ClosureOptions, DominatedOptions, GeneratorSet, LatticeError, LatticeExpr};
use crate::rng;

/// Header shared by every fit-like result file.
pub const RESULT_COLUMNS: [&str; 8] =
    ["experiment", "activation", "width", "ridge", "seed", "sup_error", "l2_error", "holdout_sup_error"];
/// Extra columns appended for lattice experiments.
pub const LATTICE_COLUMNS: [&str; 3] = ["vlt_dim", "phi_dim", "equal"];
pub const POLY_TEST_COLUMNS: [&str; 8] =
    ["experiment", "subject", "trials", "max_degree", "tol", "seed", "polynomial", "degree"];
pub const PROBE_COLUMNS: [&str; 8] =
    ["experiment", "activation", "width", "seed", "annihilator_dim", "vector", "min_nonzero_moment", "moments"];

/// Ridge used when a config leaves it out.
pub const DEFAULT_RIDGE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("check failed: {}", .0.join("; "))]
    CheckFailed(Vec<String>),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invalid { .. } | HarnessError::Io { .. } => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::CheckFailed(_) => 4,
        }
    }

    fn invalid(field: &str, message: impl ToString) -> HarnessError {
        HarnessError::Invalid { field: field.to_string(), message: message.to_string() }
    }

    fn io(path: &Path, e: impl ToString) -> HarnessError {
        HarnessError::Io { path: path.to_path_buf(), message: e.to_string() }
    }
}

fn fit_error(field: &str, e: FitError) -> HarnessError {
    match e {
        FitError::NonFiniteEntry { .. } | FitError::NonFiniteTarget { .. } | FitError::NonFiniteMap => {
            HarnessError::Numerical(e.to_string())
        }
        other => HarnessError::invalid(field, other),
    }
}

fn activation_error(field: &str, e: ActivationError) -> HarnessError {
    match e {
        ActivationError::NonFinite { .. } => HarnessError::Numerical(e.to_string()),
        other => HarnessError::invalid(field, other),
    }
}

fn lattice_error(field: &str, e: LatticeError) -> HarnessError {
    match e {
        LatticeError::Fit(inner) => fit_error(field, inner),
        other => HarnessError::invalid(field, other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fit,
    PolyTest,
    Probe,
    Lattice,
    Construct,
    Dominated,
    VectorFit,
    PhFit,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Fit => "fit",
            ExperimentKind::PolyTest => "poly-test",
            ExperimentKind::Probe => "probe",
            ExperimentKind::Lattice => "lattice",
            ExperimentKind::Construct => "construct",
            ExperimentKind::Dominated => "dominated",
            ExperimentKind::VectorFit => "vector-fit",
            ExperimentKind::PhFit => "ph-fit",
        }
    }
}

/// One experiment. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Label for the `experiment` column; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub activation: Vec<String>,
    /// Builtin target name or a CSV path relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// `lo:hi:n[,lo:hi:n...]` or `sphere:dim:count`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub widths: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// `gaussian` or `axis`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    /// Adds maps `t + b` with this many evenly spaced biases in `[−0.9, 0.9]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_biases: Option<usize>,
    /// Baseline degree (fit), maximum degree (poly-test) or maximum moment
    /// (probe).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    /// `tensor`, `map` or `both`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// Builtin vector map for line probing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    /// `closure`, `formula-check` or `huijsmans`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_op: Option<String>,
    /// Generator CSV (one vector per row) relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stable_batches: Option<usize>,
    /// Also report the error on a grid of twice the resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout: Option<bool>,
    /// Result CSV path relative to the output directory.
    pub out: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<String>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_sup_below: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_non_increasing: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_baseline_within: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_equal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_polynomial: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_max_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_annihilator_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_chain: Option<bool>,
}

impl ExperimentConfig {
    /// Config of the given kind with every optional key unset.
    pub fn new(kind: ExperimentKind, out: impl Into<String>) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            name: None,
            activation: Vec::new(),
            target: None,
            grid: None,
            widths: Vec::new(),
            ridge: None,
            seed: 0,
            scheme: None,
            axis_biases: None,
            degree: None,
            mode: None,
            map: None,
            trials: None,
            interval: None,
            lattice_op: None,
            generators: None,
            generator_count: None,
            generator_dim: None,
            expr: None,
            epsilon: None,
            points_per_axis: None,
            steps: None,
            tol: None,
            rank_tol: None,
            batch_size: None,
            stable_batches: None,
            holdout: None,
            out: out.into(),
            plot: None,
            expect_sup_below: None,
            expect_non_increasing: None,
            expect_baseline_within: None,
            expect_equal: None,
            expect_polynomial: None,
            expect_max_degree: None,
            expect_annihilator_dim: None,
            expect_chain: None,
        }
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::invalid("config", e))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Invalid {
            field: "config".into(),
            message: format!("{}: {e}", path.display()),
        })
    }

    fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.as_str().to_string())
    }

    fn ridge(&self) -> f64 {
        self.ridge.unwrap_or(DEFAULT_RIDGE)
    }

    fn require<'a, T>(&self, value: &'a Option<T>, field: &str) -> Result<&'a T, HarnessError> {
        value.as_ref().ok_or_else(|| HarnessError::invalid(field, format!("required for kind {}", self.kind.as_str())))
    }

    fn widths(&self) -> Result<&[usize], HarnessError> {
        if self.widths.is_empty() {
            return Err(HarnessError::invalid("widths", format!("required for kind {}", self.kind.as_str())));
        }
        if self.widths.contains(&0) {
            return Err(HarnessError::invalid("widths", "widths must be positive"));
        }
        Ok(&self.widths)
    }

    fn activations(&self) -> Result<Vec<Activation>, HarnessError> {
        if self.activation.is_empty() {
            return Err(HarnessError::invalid("activation", format!("required for kind {}", self.kind.as_str())));
        }
        self.activation.iter().map(|s| s.parse().map_err(|e| activation_error("activation", e))).collect()
    }

    fn leaky(&self) -> Result<LeakyPhi, HarnessError> {
        match self.activation.as_slice() {
            [] => Ok(LeakyPhi::RELU),
            [one] => leaky_of(&one.parse().map_err(|e| activation_error("activation", e))?),
            _ => Err(HarnessError::invalid("activation", "expected a single leaky activation")),
        }
    }

    fn closure_options(&self) -> ClosureOptions {
        let d = ClosureOptions::default();
        ClosureOptions {
            rank_tol: self.rank_tol.unwrap_or(d.rank_tol),
            budget: ClosureBudget {
                batch_size: self.batch_size.unwrap_or(d.budget.batch_size),
                stable_batches: self.stable_batches.unwrap_or(d.budget.stable_batches),
            },
            seed: self.seed,
        }
    }
}

fn leaky_of(a: &Activation) -> Result<LeakyPhi, HarnessError> {
    match a {
        Activation::Relu => Ok(LeakyPhi::RELU),
        Activation::Leaky(p) => Ok(*p),
        other => Err(HarnessError::invalid("activation", format!("{other} is not of the form leaky:R:S"))),
    }
}

/// Where inputs are read from and outputs written to.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Evaluate `expect_*` keys; on failure nothing is written.
    pub check: bool,
    /// Replaces the config seed (the `UAT_SEED` variable).
    pub seed_override: Option<u64>,
}

impl RunContext {
    pub fn in_dir(dir: impl Into<PathBuf>) -> RunContext {
        let dir = dir.into();
        RunContext { input_dir: dir.clone(), output_dir: dir, check: false, seed_override: None }
    }
}

/// Reads `UAT_SEED`; unset gives `None`.
pub fn seed_from_env() -> Result<Option<u64>, HarnessError> {
    match std::env::var("UAT_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| HarnessError::invalid("UAT_SEED", format!("{s:?} is not a u64"))),
        Err(_) => Ok(None),
    }
}

/// Rows of one result file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Table {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Labelled `(x, y)` sequence for [`emit_plot`].
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Numbers gathered while running, used by the checks.
#[derive(Debug, Default)]
struct Summary {
    /// Sup error against width, one series per activation or mode.
    series: Vec<Series>,
    baseline: Option<f64>,
    equal: Vec<bool>,
    polynomial: Vec<bool>,
    degrees: Vec<Option<usize>>,
    annihilator_dim: Option<usize>,
    chain: Option<bool>,
}

/// Files written by a run, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub outputs: Vec<PathBuf>,
    pub table: Table,
}

/// Runs one experiment. In check mode the `expect_*` keys are evaluated
/// before anything is written.
pub fn run_config(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunOutcome, HarnessError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = ctx.seed_override {
        cfg.seed = seed;
    }
    let (table, summary) = match cfg.kind {
        ExperimentKind::Fit => run_fit(&cfg, ctx)?,
        ExperimentKind::PolyTest => run_poly_test(&cfg)?,
        ExperimentKind::Probe => run_probe(&cfg)?,
        ExperimentKind::Lattice => run_lattice(&cfg, ctx)?,
        ExperimentKind::Construct => run_construct(&cfg, ctx)?,
        ExperimentKind::Dominated => run_dominated(&cfg, ctx)?,
        ExperimentKind::VectorFit => run_vector_fit(&cfg, ctx)?,
        ExperimentKind::PhFit => run_ph_fit(&cfg, ctx)?,
    };
    if ctx.check {
        let failures = evaluate_checks(&cfg, &summary);
        if !failures.is_empty() {
            return Err(HarnessError::CheckFailed(failures));
        }
    }
    let svg = match &cfg.plot {
        Some(_) => Some(render_svg(&summary.series).map_err(|e| HarnessError::invalid("plot", e))?),
        None => None,
    };
    let mut outputs = vec![PathBuf::from(&cfg.out)];
    write_output(&ctx.output_dir, Path::new(&cfg.out), table.to_csv().as_bytes())?;
    if let (Some(path), Some(svg)) = (&cfg.plot, svg) {
        write_output(&ctx.output_dir, Path::new(path), svg.as_bytes())?;
        outputs.push(PathBuf::from(path));
    }
    Ok(RunOutcome { outputs, table })
}

fn write_output(dir: &Path, rel: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))
}

fn evaluate_checks(cfg: &ExperimentConfig, s: &Summary) -> Vec<String> {
    let mut failures = Vec::new();
    let mut fail = |msg: String| failures.push(msg);
    if let Some(limit) = cfg.expect_sup_below {
        if s.series.is_empty() {
            fail("expect_sup_below: no error series".into());
        }
        for series in &s.series {
            match series.points.last() {
                Some(&(_, e)) if e < limit => {}
                Some(&(w, e)) => fail(format!("expect_sup_below: {} at width {w} has {e:e} >= {limit:e}", series.label)),
                None => fail(format!("expect_sup_below: {} is empty", series.label)),
            }
        }
    }
    if cfg.expect_non_increasing == Some(true) {
        for series in &s.series {
            if let Some(k) = series.points.windows(2).position(|p| p[1].1 > p[0].1) {
                fail(format!(
                    "expect_non_increasing: {} rises from {:e} to {:e} at width {}",
                    series.label, series.points[k].1, series.points[k + 1].1, series.points[k + 1].0
                ));
            }
        }
    }
    if let Some(tol) = cfg.expect_baseline_within {
        match s.baseline {
            None => fail("expect_baseline_within: no baseline row (set `degree`)".into()),
            Some(b) => {
                for series in &s.series {
                    for &(w, e) in &series.points {
                        if (e - b).abs() > tol {
                            fail(format!("expect_baseline_within: {} width {w}: {e:e} vs baseline {b:e}", series.label));
                        }
                    }
                }
            }
        }
    }
    if let Some(want) = cfg.expect_equal {
        if s.equal.is_empty() {
            fail("expect_equal: no comparison rows".into());
        }
        if let Some(i) = s.equal.iter().position(|&e| e != want) {
            fail(format!("expect_equal: row {i} is {}", !want));
        }
    }
    if let Some(want) = cfg.expect_polynomial {
        if s.polynomial.is_empty() {
            fail("expect_polynomial: no detector rows".into());
        }
        if let Some(i) = s.polynomial.iter().position(|&p| p != want) {
            fail(format!("expect_polynomial: row {i} is {}", !want));
        }
    }
    if let Some(max) = cfg.expect_max_degree {
        if s.degrees.is_empty() {
            fail("expect_max_degree: no detector rows".into());
        }
        for (i, d) in s.degrees.iter().enumerate() {
            match d {
                Some(d) if *d <= max => {}
                _ => fail(format!("expect_max_degree: row {i} has degree {d:?}, expected <= {max}")),
            }
        }
    }
    if let Some(want) = cfg.expect_annihilator_dim {
        if s.annihilator_dim != Some(want) {
            fail(format!("expect_annihilator_dim: got {:?}, expected {want}", s.annihilator_dim));
        }
    }
    if let Some(want) = cfg.expect_chain {
        if s.chain != Some(want) {
            fail(format!("expect_chain: got {:?}, expected {want}", s.chain));
        }
    }
    failures
}

fn opt(x: Option<impl ToString>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[allow(clippy::too_many_arguments)]
fn fit_row(label: &str, activation: &str, width: usize, ridge: f64, seed: u64, sup: f64, l2: f64, holdout: Option<f64>) -> Vec<String> {
    vec![
        label.to_string(),
        activation.to_string(),
        width.to_string(),
        fmt_real(ridge),
        seed.to_string(),
        fmt_real(sup),
        fmt_real(l2),
        holdout.map(fmt_real).unwrap_or_default(),
    ]
}

/// Builtin targets by name.
/// Pointwise builtin target: input point to output vector.
pub type TargetFn = fn(&[f64]) -> Vec<f64>;

pub fn builtin_target(name: &str) -> Option<(usize, TargetFn)> {
    let f: (usize, TargetFn) = match name {
        "cos3" => (1, |x| vec![(3.0 * x[0]).cos()]),
        "cube" => (1, |x| vec![x[0].powi(3)]),
        "abs" => (1, |x| vec![x[0].abs()]),
        "one" => (1, |_| vec![1.0]),
        "gaussian" => (1, |x| vec![(-x.iter().map(|t| t * t).sum::<f64>()).exp()]),
        "norm" => (1, |x| vec![x.iter().map(|t| t * t).sum::<f64>().sqrt()]),
        "x1pos" => (1, |x| vec![x[0].max(0.0)]),
        "cos-sin" => (2, |x| vec![x[0].cos(), x[0].sin()]),
        _ => return None,
    };
    Some(f)
}

pub const BUILTIN_TARGETS: [&str; 8] = ["cos3", "cube", "abs", "one", "gaussian", "norm", "x1pos", "cos-sin"];

/// Parses `lo:hi:n[,lo:hi:n...]` (one `n` for all axes) or
/// `sphere:dim:count`; sphere samples use `seed`.
pub fn parse_grid(spec: &str, seed: u64) -> Result<Grid, HarnessError> {
    let bad = |m: &str| HarnessError::invalid("grid", format!("{spec:?}: {m}"));
    let grid_err = |e: GridError| HarnessError::invalid("grid", e);
    if let Some(rest) = spec.strip_prefix("sphere:") {
        let (dim, count) = rest.split_once(':').ok_or_else(|| bad("expected sphere:dim:count"))?;
        let dim = dim.trim().parse().map_err(|_| bad("dim is not an integer"))?;
        let count = count.trim().parse().map_err(|_| bad("count is not an integer"))?;
        return Grid::make_sphere(dim, count, seed).map_err(grid_err);
    }
    let mut bounds = Vec::new();
    let mut per_axis = None;
    for axis in spec.split(',') {
        let parts: Vec<&str> = axis.split(':').map(str::trim).collect();
        let [lo, hi, n] = parts[..] else { return Err(bad("each axis must be lo:hi:n")) };
        let lo: f64 = lo.parse().map_err(|_| bad("lo is not a number"))?;
        let hi: f64 = hi.parse().map_err(|_| bad("hi is not a number"))?;
        let n: usize = n.parse().map_err(|_| bad("n is not an integer"))?;
        if per_axis.is_some_and(|p| p != n) {
            return Err(bad("all axes must use the same point count"));
        }
        per_axis = Some(n);
        bounds.push((lo, hi));
    }
    Grid::make_box(&bounds, per_axis.unwrap_or(0)).map_err(grid_err)
}

fn holdout_grid(grid: &Grid, seed: u64) -> Option<Grid> {
    match grid.kind() {
        GridKind::Box { bounds } => {
            let n = (grid.len() as f64).powf(1.0 / grid.dim() as f64).round() as usize;
            Grid::make_box(bounds, 2 * n - 1).ok()
        }
        GridKind::Sphere => Grid::make_sphere(grid.dim(), 2 * grid.len(), seed ^ 0x4_01d0_u64).ok(),
        GridKind::Explicit => None,
    }
}

/// Target on its grid, plus the builtin function when there is one.
struct Target {
    values: SampledFunction,
    builtin: Option<TargetFn>,
}

fn load_target(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Target, HarnessError> {
    let name = cfg.require(&cfg.target, "target")?;
    if let Some((k, f)) = builtin_target(name) {
        let spec = cfg.require(&cfg.grid, "grid")?;
        let grid = Arc::new(parse_grid(spec, cfg.seed)?);
        let values = SampledFunction::from_vector_fn(grid, k, f).map_err(|e| HarnessError::invalid("target", e))?;
        return Ok(Target { values, builtin: Some(f) });
    }
    if cfg.grid.is_some() {
        return Err(HarnessError::invalid("grid", "a CSV target carries its own grid; drop `grid`"));
    }
    let path = ctx.input_dir.join(name);
    if !path.exists() {
        return Err(HarnessError::invalid(
            "target",
            format!("{name:?} is neither a builtin ({}) nor an existing CSV file", BUILTIN_TARGETS.join(", ")),
        ));
    }
    let values = SampledFunction::read_csv_file(&path).map_err(|e| HarnessError::invalid("target", format!("{}: {e}", path.display())))?;
    Ok(Target { values, builtin: None })
}

impl Target {
    fn holdout(&self, cfg: &ExperimentConfig) -> Result<Option<SampledFunction>, HarnessError> {
        if cfg.holdout == Some(false) {
            return Ok(None);
        }
        let Some(f) = self.builtin else { return Ok(None) };
        let Some(grid) = holdout_grid(self.values.grid(), cfg.seed) else { return Ok(None) };
        let k = self.values.codomain_dim();
        SampledFunction::from_vector_fn(Arc::new(grid), k, f).map(Some).map_err(|e| HarnessError::invalid("target", e))
    }
}

fn scheme(cfg: &ExperimentConfig) -> Result<SamplingScheme, HarnessError> {
    match cfg.scheme.as_deref() {
        None | Some("gaussian") => Ok(SamplingScheme::Gaussian),
        Some("axis") => Ok(SamplingScheme::DEFAULT_AXIS_GRID),
        Some(other) => Err(HarnessError::invalid("scheme", format!("{other:?} is not gaussian or axis"))),
    }
}

fn run_fit(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<(Table, Summary), HarnessError> {
    let target = load_target(cfg, ctx)?;
    let holdout = target.holdout(cfg)?;
    let grid = target.values.grid().clone();
    let widths = cfg.widths()?;
    let scheme = scheme(cfg)?;
    let ridge = cfg.ridge();
    let label = cfg.label();
    let mut table = Table::new(&RESULT_COLUMNS);
    let mut summary = Summary::default();
    for phi in cfg.activations()? {
        let mut series = Series { label: phi.to_string(), points: Vec::new() };
        for &width in widths {
            let mut maps = approximator::sample_affine_maps(&grid, width, cfg.seed, scheme).map_err(|e| fit_error("widths", e))?;
            if let Some(n) = cfg.axis_biases {
                maps.extend(axis_bias_maps(grid.dim(), n)?);
            }
            let d = approximator::Dictionary::build(phi.clone(), maps, grid.clone()).map_err(|e| fit_error("activation", e))?;
            let r = approximator::fit(&d, &target.values, ridge).map_err(|e| fit_error("target", e))?;
            let held = match &holdout {
                Some(h) => Some(approximator::holdout_sup_error(&d, &r.coefficients, h).map_err(|e| fit_error("holdout", e))?),
                None => None,
            };
            table.rows.push(fit_row(&label, &phi.to_string(), d.width(), ridge, cfg.seed, r.sup_error, r.l2_error, held));
            series.points.push((d.width() as f64, r.sup_error));
        }
        summary.series.push(series);
    }
    if let Some(degree) = cfg.degree {
        let b = approximator::polynomial_baseline(&target.values, degree).map_err(|e| fit_error("degree", e))?;
        table.rows.push(fit_row(
            "baseline",
            &format!("poly-degree:{degree}"),
            b.monomial_count,
            0.0,
            cfg.seed,
            b.fit.sup_error,
            b.fit.l2_error,
            None,
        ));
        summary.baseline = Some(b.fit.sup_error);
    }
    Ok((table, summary))
}

fn axis_bias_maps(dim: usize, n: usize) -> Result<Vec<approximator::AffineMap>, HarnessError> {
    if dim != 1 {
        return Err(HarnessError::invalid("axis_biases", "only defined on 1-D grids"));
    }
    if n < 2 {
        return Err(HarnessError::invalid("axis_biases", "need at least 2 biases"));
    }
    Ok((0..n)
        .map(|j| approximator::AffineMap { w: vec![1.0], b: -0.9 + 1.8 * j as f64 / (n - 1) as f64 })
        .collect())
}

/// Builtin maps for line probing.
pub fn builtin_map(name: &str, seed: u64) -> Option<Box<dyn activations::VectorMap>> {
    match name {
        "positive-part" => Some(Box::new(FnMap::new(2, 2, |x: &[f64]| Ok(x.iter().map(|t| t.max(0.0)).collect())))),
        "abs" => Some(Box::new(FnMap::new(2, 2, |x: &[f64]| Ok(x.iter().map(|t| t.abs()).collect())))),
        "bilinear" | "affine" => {
            let mut r = rng::seeded(seed);
            let c = rng::normal_vec(&mut r, 6);
            if name == "bilinear" {
                Some(Box::new(FnMap::new(2, 2, move |x: &[f64]| {
                    Ok(vec![c[0] * x[0] * x[1] + c[1] * x[0], c[2] * x[0] * x[1] + c[3] * x[1] + c[4]])
                })))
            } else {
                Some(Box::new(FnMap::new(2, 2, move |x: &[f64]| {
                    Ok(vec![c[0] * x[0] + c[1] * x[1] + c[2], c[3] * x[0] + c[4] * x[1] + c[5]])
                })))
            }
        }
        _ => None,
    }
}

fn run_poly_test(cfg: &ExperimentConfig) -> Result<(Table, Summary), HarnessError> {
    let max_degree = cfg.degree.unwrap_or(8);
    let tol = cfg.tol.unwrap_or(1e-7);
    let label = cfg.label();
    let mut table = Table::new(&POLY_TEST_COLUMNS);
    let mut summary = Summary::default();
    let mut push = |subject: &str, trials: usize, degree: Option<usize>, polynomial: bool| {
        table.rows.push(vec![
            label.clone(),
            subject.to_string(),
            trials.to_string(),
            max_degree.to_string(),
            fmt_real(tol),
            cfg.seed.to_string(),
            polynomial.to_string(),
            opt(degree),
        ]);
        summary.polynomial.push(polynomial);
        summary.degrees.push(degree);
    };
    if let Some(name) = &cfg.map {
        let map = builtin_map(name, cfg.seed)
            .ok_or_else(|| HarnessError::invalid("map", format!("{name:?} is not one of positive-part, abs, bilinear, affine")))?;
        let mut probe = LineProbe { seed: cfg.seed, max_degree, tol, ..LineProbe::default() };
        if let Some(t) = cfg.trials {
            probe.trials = t;
        }
        if let Some(iv) = cfg.interval {
            probe.interval = iv;
        }
        let r = activations::polynomial_along_lines(map.as_ref(), &probe).map_err(|e| activation_error("map", e))?;
        push(name, probe.trials, r.max_observed_degree, r.is_polynomial_bounded);
    } else {
        let interval = cfg.interval.unwrap_or((-1.0, 1.0));
        let mut detector = PolyDetector { tol, ..PolyDetector::default() };
        if let Some(t) = cfg.trials {
            detector.placements = t;
        }
        for phi in cfg.activations()? {
            let d = detector.detect(|t| phi.eval(t), interval, max_degree).map_err(|e| activation_error("interval", e))?;
            push(&phi.to_string(), detector.placements, d, d.is_some());
        }
    }
    Ok((table, summary))
}

fn run_probe(cfg: &ExperimentConfig) -> Result<(Table, Summary), HarnessError> {
    let spec = cfg.require(&cfg.grid, "grid")?;
    let grid = Arc::new(parse_grid(spec, cfg.seed)?);
    let max_moment = cfg.degree.unwrap_or(4);
    let tol = cfg.tol.unwrap_or(1e-8);
    let widths = cfg.widths()?;
    let label = cfg.label();
    let mut table = Table::new(&PROBE_COLUMNS);
    let mut summary = Summary::default();
    for phi in cfg.activations()? {
        for &width in widths {
            let maps = approximator::sample_affine_maps(&grid, width, cfg.seed, scheme(cfg)?).map_err(|e| fit_error("widths", e))?;
            let d = approximator::Dictionary::build(phi.clone(), maps, grid.clone()).map_err(|e| fit_error("activation", e))?;
            let r = approximator::annihilator_probe(&d, max_moment, tol).map_err(|e| fit_error("grid", e))?;
            let dim = r.annihilator_basis.dim();
            summary.annihilator_dim = Some(dim);
            let base = |vector: String, min: String, moments: String| {
                vec![label.clone(), phi.to_string(), width.to_string(), cfg.seed.to_string(), dim.to_string(), vector, min, moments]
            };
            if dim == 0 {
                table.rows.push(base(String::new(), String::new(), String::new()));
            }
            for (i, (m, min)) in r.moments.iter().zip(&r.min_nonzero_moment).enumerate() {
                let moments = m.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(";");
                table.rows.push(base(i.to_string(), opt(*min), moments));
            }
        }
    }
    Ok((table, summary))
}

fn load_generators(cfg: &ExperimentConfig, ctx: &RunContext, seed: u64) -> Result<GeneratorSet, HarnessError> {
    if let Some(rel) = &cfg.generators {
        let path = ctx.input_dir.join(rel);
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(&path)
            .map_err(|e| HarnessError::io(&path, e))?;
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| HarnessError::invalid("generators", e))?;
            let row: Result<Vec<f64>, _> = record.iter().map(str::parse).collect();
            rows.push(row.map_err(|_| HarnessError::invalid("generators", format!("row {i} has a non-numeric entry")))?);
        }
        return GeneratorSet::new(rows).map_err(|e| lattice_error("generators", e));
    }
    let count = *cfg.require(&cfg.generator_count, "generator_count")?;
    let dim = *cfg.require(&cfg.generator_dim, "generator_dim")?;
    if count == 0 || dim == 0 {
        return Err(HarnessError::invalid("generator_count", "count and dimension must be positive"));
    }
    let mut r = rng::seeded(seed);
    let rows = (0..count).map(|_| (0..dim).map(|_| rand::Rng::random_range(&mut r, 0.0..1.0)).collect()).collect();
    GeneratorSet::new(rows).map_err(|e| lattice_error("generators", e))
}

fn lattice_row(
    label: &str,
    phi: &LeakyPhi,
    width: usize,
    seed: u64,
    errors: Option<(f64, f64)>,
    dims: (Option<usize>, Option<usize>, Option<bool>),
) -> Vec<String> {
    let (sup, l2) = match errors {
        Some((s, l)) => (fmt_real(s), fmt_real(l)),
        None => (String::new(), String::new()),
    };
    vec![
        label.to_string(),
        Activation::Leaky(*phi).to_string(),
        width.to_string(),
        String::new(),
        seed.to_string(),
        sup,
        l2,
        String::new(),
        opt(dims.0),
        opt(dims.1),
        opt(dims.2),
    ]
}

fn lattice_header() -> Vec<&'static str> {
    RESULT_COLUMNS.iter().chain(&LATTICE_COLUMNS).copied().collect()
}

fn run_lattice(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<(Table, Summary), HarnessError> {
    let phi = cfg.leaky()?;
    let tol = cfg.tol.unwrap_or(1e-7);
    let op = cfg.require(&cfg.lattice_op, "lattice_op")?.as_str();
    let label = cfg.label();
    let mut table = Table { header: lattice_header(), rows: Vec::new() };
    let mut summary = Summary::default();
    if op == "huijsmans" {
        let n = cfg.points_per_axis.unwrap_or(6);
        let r = lattice::huijsmans_grid_check(n, phi, tol, &cfg.closure_options()).map_err(|e| lattice_error("points_per_axis", e))?;
        table.rows.push(lattice_row(&label, &phi, 3, cfg.seed, None, (Some(r.vlt_dim), Some(r.phi_dim), Some(r.g_in_phi_span))));
        summary.equal.push(r.g_in_phi_span);
        return Ok((table, summary));
    }
    let trials = if cfg.generators.is_some() { 1 } else { cfg.trials.unwrap_or(1) };
    for trial in 0..trials as u64 {
        let seed = cfg.seed.wrapping_add(trial);
        let a = load_generators(cfg, ctx, seed)?;
        let opts = ClosureOptions { seed, ..cfg.closure_options() };
        let dims = match op {
            "closure" => {
                let s = lattice::sublattice_closure(&a, &opts).map_err(|e| lattice_error("generators", e))?;
                (Some(s.dim()), None, None)
            }
            "formula-check" => {
                let r = lattice::check_generation_formula(&a, phi, tol, &opts).map_err(|e| lattice_error("generators", e))?;
                summary.equal.push(r.equal);
                (Some(r.vlt_dim), Some(r.phi_dim), Some(r.equal))
            }
            other => {
                return Err(HarnessError::invalid(
                    "lattice_op",
                    format!("{other:?} is not closure, formula-check or huijsmans"),
                ))
            }
        };
        table.rows.push(lattice_row(&label, &phi, a.len(), seed, None, dims));
    }
    Ok((table, summary))
}

fn run_construct(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<(Table, Summary), HarnessError> {
    let phi = cfg.leaky()?;
    let a = load_generators(cfg, ctx, cfg.seed)?;
    let h: LatticeExpr = cfg.require(&cfg.expr, "expr")?.parse().map_err(|e| lattice_error("expr", e))?;
    let epsilon = *cfg.require(&cfg.epsilon, "epsilon")?;
    let width = *cfg.widths()?.last().expect("non-empty");
    let tol = cfg.tol.unwrap_or(1e-7);
    let (r, _) = lattice::spanning_construct(&a, &h, phi, epsilon, width, cfg.seed).map_err(|e| lattice_error("expr", e))?;
    let span = lattice::phi_span(&a, phi, &cfg.closure_options()).map_err(|e| lattice_error("generators", e))?;
    let member = span.contains(r.output.entries(), tol).map_err(|e| HarnessError::invalid("generators", e))?;
    let target = lattice::eval_expr(&h, &a).map_err(|e| lattice_error("expr", e))?;
    let l2 = r.output.entries().iter().zip(target.entries()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let mut table = Table { header: lattice_header(), rows: Vec::new() };
    table.rows.push(lattice_row(
        &cfg.label(),
        &phi,
        width,
        cfg.seed,
        Some((r.achieved_sup_error, l2)),
        (None, Some(span.dim()), Some(member)),
    ));
    let summary = Summary {
        series: vec![Series { label: h.to_string(), points: vec![(width as f64, r.achieved_sup_error)] }],
        equal: vec![member],
        ..Summary::default()
    };
    Ok((table, summary))
}

fn run_dominated(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<(Table, Summary), HarnessError> {
    let target = load_target(cfg, ctx)?;
    let f = &target.values;
    let widths = cfg.widths()?.to_vec();
    let opts = DominatedOptions { steps: cfg.steps.unwrap_or(widths.len()), widths, seed: cfg.seed, ridge: cfg.ridge() };
    let steps = lattice::dominated_approx(f, &opts).map_err(|e| lattice_error("target", e))?;
    let label = cfg.label();
    let mut table = Table::new(&RESULT_COLUMNS);
    let mut series = Series { label: "relu".into(), points: Vec::new() };
    let mut chain = true;
    let mut prev = vec![0.0; f.len()];
    for (n, s) in steps.iter().enumerate() {
        for ((&p, &e), &t) in prev.iter().zip(s.approx.values()).zip(f.values()) {
            chain &= 0.0 <= p && p <= e && e <= t;
        }
        prev = s.approx.values().to_vec();
        let gap = sup_distance(f, &s.approx).map_err(|e| HarnessError::invalid("target", e))?;
        let l2 = f.values().iter().zip(s.approx.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let seed = cfg.seed.wrapping_add(n as u64);
        table.rows.push(fit_row(&label, "relu", s.width, opts.ridge, seed, gap, l2, None));
        series.points.push((s.width as f64, gap));
    }
    Ok((table, Summary { series: vec![series], chain: Some(chain), ..Summary::default() }))
}

fn run_vector_fit(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<(Table, Summary), HarnessError> {
    let target = load_target(cfg, ctx)?;
    let holdout = target.holdout(cfg)?;
    let widths = cfg.widths()?;
    let ridge = cfg.ridge();
    let phi = match cfg.activation.as_slice() {
        [] => Activation::Relu,
        [one] => one.parse().map_err(|e| activation_error("activation", e))?,
        _ => return Err(HarnessError::invalid("activation", "expected a single activation")),
    };
    let modes: Vec<(&str, VectorMode)> = match cfg.mode.as_deref().unwrap_or("both") {
        "tensor" => vec![("tensor", VectorMode::Tensor(phi))],
        "map" => vec![("map", VectorMode::Map(leaky_of(&phi)?))],
        "both" => vec![("tensor", VectorMode::Tensor(phi.clone())), ("map", VectorMode::Map(leaky_of(&phi)?))],
        other => return Err(HarnessError::invalid("mode", format!("{other:?} is not tensor, map or both"))),
    };
    let k = target.values.codomain_dim();
    let grid = target.values.grid().clone();
    let label = cfg.label();
    let mut table = Table::new(&RESULT_COLUMNS);
    let mut summary = Summary::default();
    for (name, mode) in modes {
        let activation = match &mode {
            VectorMode::Tensor(a) => format!("tensor:{a}"),
            VectorMode::Map(p) => format!("map:{}", Activation::Leaky(*p)),
        };
        let mut series = Series { label: name.to_string(), points: Vec::new() };
        for &width in widths {
            let terms = approximator::sample_vector_terms(&mode, &grid, k, width, cfg.seed).map_err(|e| fit_error("widths", e))?;
            let r = approximator::vector_fit_with_terms(&terms, &target.values, ridge).map_err(|e| fit_error("target", e))?;
            let held = match &holdout {
                Some(h) => {
                    let design = terms.design(h.grid(), k).map_err(|e| fit_error("holdout", e))?;
                    let pred = design * nalgebra::DVector::from_column_slice(&r.coefficients);
                    Some(pred.iter().zip(h.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
                }
                None => None,
            };
            table.rows.push(fit_row(&label, &activation, width, ridge, cfg.seed, r.sup_error, r.l2_error, held));
            series.points.push((width as f64, r.sup_error));
        }
        summary.series.push(series);
    }
    Ok((table, summary))
}

fn run_ph_fit(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<(Table, Summary), HarnessError> {
    let target = load_target(cfg, ctx)?;
    if !matches!(target.values.grid().kind(), GridKind::Sphere) {
        return Err(HarnessError::invalid("grid", "ph-fit needs sphere:dim:count"));
    }
    let holdout = target.holdout(cfg)?;
    let phi = cfg.leaky()?;
    let ridge = cfg.ridge();
    let label = cfg.label();
    let dim = target.values.grid().dim();
    let mut table = Table::new(&RESULT_COLUMNS);
    let mut series = Series { label: Activation::Leaky(phi).to_string(), points: Vec::new() };
    for &width in cfg.widths()? {
        let terms = approximator::sample_ph_terms(dim, width, cfg.seed);
        let r = approximator::ph_fit_with_terms(phi, &terms, &target.values, ridge).map_err(|e| fit_error("target", e))?;
        let held = holdout.as_ref().map(|h| {
            h.grid()
                .points()
                .zip(h.values())
                .map(|(x, y)| {
                    let v: f64 = terms.iter().zip(&r.coefficients).map(|(t, c)| c * phi.scalar(t.inner(x))).sum();
                    (v - y).abs()
                })
                .fold(0.0f64, f64::max)
        });
        table.rows.push(fit_row(&label, &series.label, width, ridge, cfg.seed, r.sup_error, r.l2_error, held));
        series.points.push((width as f64, r.sup_error));
    }
    Ok((table, Summary { series: vec![series], ..Summary::default() }))
}

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
    #[error("series {series:?} is empty")]
    EmptySeries { series: String },
    #[error("series {series:?} has a non-finite value at index {index}")]
    NonFinite { series: String, index: usize },
}

const CANVAS: (f64, f64) = (800.0, 600.0);
const MARGIN: (f64, f64, f64, f64) = (80.0, 30.0, 40.0, 60.0); // left, right, top, bottom
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line plot on an 800×600 canvas; the y axis is logarithmic when every y is
/// positive. Output depends only on the input.
pub fn render_svg(series: &[Series]) -> Result<String, PlotError> {
    if series.is_empty() {
        return Err(PlotError::Empty);
    }
    for s in series {
        if s.points.is_empty() {
            return Err(PlotError::EmptySeries { series: s.label.clone() });
        }
        if let Some(index) = s.points.iter().position(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(PlotError::NonFinite { series: s.label.clone(), index });
        }
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    let log_y = all().all(|&(_, y)| y > 0.0);
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let span = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let (x0, x1) = span(all().map(|p| p.0).fold(f64::INFINITY, f64::min), all().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) =
        span(all().map(|p| ty(p.1)).fold(f64::INFINITY, f64::min), all().map(|p| ty(p.1)).fold(f64::NEG_INFINITY, f64::max));
    let (w, h) = CANVAS;
    let (ml, mr, mt, mb) = MARGIN;
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (ty(y) - y0) / (y1 - y0) * (h - mt - mb);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{ml:.2} {:.2}V{:.2}H{:.2}" stroke="black" fill="none"/>"#,
        mt,
        h - mb,
        w - mr
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let label_y = if log_y { 10f64.powf(yv) } else { yv };
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#, px(xv), h - mb + 20.0, fmt_tick(xv));
        let ypix = h - mb - f * (h - mt - mb);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#, ml - 6.0, ypix + 4.0, fmt_tick(label_y));
    }
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" stroke="{colour}" fill="none"/>"#, path.join(" "));
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, px(x), py(y));
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{colour}">{}</text>"#,
            w - mr - 150.0,
            mt + 16.0 * (i as f64 + 1.0),
            xml_escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

/// Writes [`render_svg`] output to `path`.
pub fn emit_plot(series: &[Series], path: &Path) -> Result<(), HarnessError> {
    let svg = render_svg(series).map_err(|e| HarnessError::invalid("plot", e))?;
    fs::write(path, svg).map_err(|e| HarnessError::io(path, e))
}

/// List of config files, relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub configs: Vec<String>,
}

#[derive(Debug)]
pub struct ManifestEntry {
    pub config: String,
    pub result: Result<RunOutcome, HarnessError>,
}

#[derive(Debug)]
pub struct ManifestReport {
    pub entries: Vec<ManifestEntry>,
    /// Every file written, relative to the output directory.
    pub outputs: Vec<PathBuf>,
}

impl ManifestReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.result.is_ok())
    }

    pub fn failed(&self) -> Vec<&str> {
        self.entries.iter().filter(|e| e.result.is_err()).map(|e| e.config.as_str()).collect()
    }

    /// 0 when everything passed, otherwise the largest entry exit code.
    pub fn exit_code(&self) -> i32 {
        self.entries.iter().filter_map(|e| e.result.as_ref().err()).map(HarnessError::exit_code).max().unwrap_or(0)
    }
}

/// Runs every config of a manifest in order, writing into `output_dir`.
pub fn run_manifest(
    manifest: &Path,
    output_dir: &Path,
    check: bool,
    seed_override: Option<u64>,
) -> Result<ManifestReport, HarnessError> {
    let text = fs::read_to_string(manifest).map_err(|e| HarnessError::io(manifest, e))?;
    let parsed: Manifest = serde_json::from_str(&text)
        .map_err(|e| HarnessError::invalid("manifest", format!("{}: {e}", manifest.display())))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    let mut outputs = Vec::new();
    for rel in parsed.configs {
        let path = base.join(&rel);
        let result = ExperimentConfig::load(&path).and_then(|cfg| {
            let ctx = RunContext {
                input_dir: path.parent().unwrap_or(base).to_path_buf(),
                output_dir: output_dir.to_path_buf(),
                check,
                seed_override,
            };
            run_config(&cfg, &ctx)
        });
        if let Ok(outcome) = &result {
            outputs.extend(outcome.outputs.iter().cloned());
        }
        entries.push(ManifestEntry { config: rel, result });
    }
    Ok(ManifestReport { entries, outputs })
}
