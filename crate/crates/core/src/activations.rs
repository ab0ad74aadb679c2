//! Scalar activations, the leaky lattice map `Φ(f) = r·f⁺ + s·f⁻`, and
//! finite-difference detection of polynomial behaviour.
//!
//! Polynomial detection works on equally spaced stencils: a polynomial of
//! degree `d` is annihilated exactly by every `(d+1)`-th forward difference,
//! so a function is reported as degree `d` when all those differences vanish
//! (relative to the stencil magnitude) on every sampled stencil. Smooth
//! non-polynomial functions also have tiny high-order differences on short
//! stencils, so results depend on the interval being wide compared with the
//! function's curvature scale. Tabulated activations interpolate linearly,
//! which makes their detection results advisory only.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum ActivationError {
    #[error("leaky map needs s != -r (got r = {r}, s = {s}); s = -r makes it linear")]
    LinearLeaky { r: f64, s: f64 },
    #[error("leaky map parameters must be finite")]
    NonFiniteLeaky,
    #[error("interval ({lo}, {hi}) is empty")]
    BadInterval { lo: f64, hi: f64 },
    #[error("activation evaluated to a non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("trial {trial}: map evaluation failed: {message}")]
    Evaluator { trial: usize, message: String },
    #[error("trial {trial}: map returned {got} outputs, expected {expected}")]
    OutputArity { trial: usize, got: usize, expected: usize },
    #[error("table needs strictly increasing abscissae and at least one sample")]
    BadTable,
    #[error("cannot parse activation {spec:?}: {reason}")]
    Parse { spec: String, reason: String },
}

/// `Φ(f) = r·f⁺ + s·f⁻`, applied coordinatewise; `s = −r` is rejected
/// because the map is then linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakyPhi {
    r: f64,
    s: f64,
}

impl LeakyPhi {
    pub const RELU: LeakyPhi = LeakyPhi { r: 1.0, s: 0.0 };
    pub const ABS: LeakyPhi = LeakyPhi { r: 1.0, s: 1.0 };

    pub fn new(r: f64, s: f64) -> Result<LeakyPhi, ActivationError> {
        if !r.is_finite() || !s.is_finite() {
            return Err(ActivationError::NonFiniteLeaky);
        }
        if s == -r {
            return Err(ActivationError::LinearLeaky { r, s });
        }
        Ok(LeakyPhi { r, s })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Scalar trace `φ(t) = r·t⁺ + s·t⁻`.
    #[inline]
    pub fn scalar(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.r * t
        } else {
            -self.s * t
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&t| self.scalar(t)).collect()
    }
}

/// Piecewise-linear interpolation through `(x, y)` samples, constant outside
/// the table range.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Table {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Table, ActivationError> {
        if samples.is_empty()
            || samples.windows(2).any(|w| !(w[0].0 < w[1].0))
            || samples.iter().any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(ActivationError::BadTable);
        }
        let (xs, ys) = samples.into_iter().unzip();
        Ok(Table { xs, ys })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.xs.len();
        if t <= self.xs[0] {
            return self.ys[0];
        }
        if t >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let hi = self.xs.partition_point(|&x| x <= t);
        let lo = hi - 1;
        let w = (t - self.xs[lo]) / (self.xs[hi] - self.xs[lo]);
        self.ys[lo] + w * (self.ys[hi] - self.ys[lo])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Exp,
    Tanh,
    Leaky(LeakyPhi),
    Monomial(u32),
    /// Coefficients constant-first.
    Polynomial(Vec<f64>),
    Tabulated(Table),
}

impl Activation {
    pub fn leaky(r: f64, s: f64) -> Result<Activation, ActivationError> {
        LeakyPhi::new(r, s).map(Activation::Leaky)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Activation::Relu => t.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-t).exp()),
            Activation::Exp => t.exp(),
            Activation::Tanh => t.tanh(),
            Activation::Leaky(phi) => phi.scalar(t),
            Activation::Monomial(d) => t.powi(*d as i32),
            Activation::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * t + a),
            Activation::Tabulated(table) => table.eval(t),
        }
    }

    /// Degree of the built-in polynomial kinds; `None` for everything else.
    pub fn claimed_poly_degree(&self) -> Option<usize> {
        match self {
            Activation::Monomial(d) => Some(*d as usize),
            Activation::Polynomial(c) => Some(c.iter().rposition(|&a| a != 0.0).unwrap_or(0)),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Relu => write!(f, "relu"),
            Activation::Sigmoid => write!(f, "sigmoid"),
            Activation::Exp => write!(f, "exp"),
            Activation::Tanh => write!(f, "tanh"),
            Activation::Leaky(p) => write!(f, "leaky:{}:{}", p.r, p.s),
            Activation::Monomial(d) => write!(f, "monomial:{d}"),
            Activation::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(|a| a.to_string()).collect();
                write!(f, "poly:{}", parts.join(","))
            }
            Activation::Tabulated(t) => {
                let parts: Vec<String> =
                    t.xs.iter().zip(&t.ys).map(|(x, y)| format!("{x}={y}")).collect();
                write!(f, "tab:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for Activation {
    type Err = ActivationError;

    /// `relu`, `sigmoid`, `exp`, `tanh`, `leaky:R:S`, `monomial:D`,
    /// `poly:C0,C1,...` (constant first), `tab:X=Y,X=Y,...`.
    fn from_str(spec: &str) -> Result<Activation, ActivationError> {
        // accept U+2212 minus signs in pasted coefficient lists
        let norm = spec.trim().replace('\u{2212}', "-");
        let fail = |reason: &str| ActivationError::Parse { spec: spec.to_string(), reason: reason.into() };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| fail(&format!("bad number {s:?}")));
        let (head, rest) = match norm.split_once(':') {
            Some((h, r)) => (h.to_ascii_lowercase(), Some(r)),
            None => (norm.to_ascii_lowercase(), None),
        };
        match (head.as_str(), rest) {
            ("relu", None) => Ok(Activation::Relu),
            ("sigmoid", None) => Ok(Activation::Sigmoid),
            ("exp", None) => Ok(Activation::Exp),
            ("tanh", None) => Ok(Activation::Tanh),
            ("leaky", Some(args)) => {
                let (r, s) = args.split_once(':').ok_or_else(|| fail("expected leaky:R:S"))?;
                Activation::leaky(num(r)?, num(s)?)
            }
            ("monomial" | "mono", Some(d)) => d
                .trim()
                .parse::<u32>()
                .map(Activation::Monomial)
                .map_err(|_| fail("degree must be a non-negative integer")),
            ("poly", Some(args)) => {
                let c = args.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
                Ok(Activation::Polynomial(c))
            }
            ("tab", Some(args)) => {
                let samples = args
                    .split(',')
                    .map(|pair| {
                        let (x, y) = pair.split_once('=').ok_or_else(|| fail("expected X=Y pairs"))?;
                        Ok((num(x)?, num(y)?))
                    })
                    .collect::<Result<Vec<_>, ActivationError>>()?;
                Table::new(samples).map(Activation::Tabulated)
            }
            _ => Err(fail("unknown activation")),
        }
    }
}

/// Settings for finite-difference polynomial detection.
#[derive(Debug, Clone, Copy)]
pub struct PolyDetector {
    /// Number of random stencil placements.
    pub placements: usize,
    /// Relative tolerance on finite differences.
    pub tol: f64,
    pub seed: u64,
    /// Smallest stencil length as a fraction of the interval.
    pub min_scale: f64,
}

impl Default for PolyDetector {
    fn default() -> Self {
        PolyDetector { placements: 32, tol: 1e-7, seed: 0x5eed_d1ff, min_scale: 0.5 }
    }
}

impl PolyDetector {
    pub fn with_tol(tol: f64) -> Self {
        PolyDetector { tol, ..Self::default() }
    }

    /// Smallest `d ≤ max_degree` such that every `(d+1)`-th difference on
    /// every stencil vanishes within `tol · max(max |stencil value|, 1)`.
    pub fn detect(
        &self,
        f: impl Fn(f64) -> f64,
        interval: (f64, f64),
        max_degree: usize,
    ) -> Result<Option<usize>, ActivationError> {
        let (lo, hi) = interval;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(ActivationError::BadInterval { lo, hi });
        }
        let points = max_degree + 2;
        let mut rng = rng::seeded(self.seed);
        // smallest vanishing order per stencil, or None if order M+1 survives
        let mut worst = 0usize;
        for _ in 0..self.placements {
            let length = (hi - lo) * rng.random_range(self.min_scale..=1.0);
            let start = lo + rng.random_range(0.0..=1.0) * (hi - lo - length);
            let step = length / (points - 1) as f64;
            let mut diffs = Vec::with_capacity(points);
            for k in 0..points {
                let t = if k + 1 == points { start + length } else { start + step * k as f64 };
                let y = f(t);
                if !y.is_finite() {
                    return Err(ActivationError::NonFinite { t });
                }
                diffs.push(y);
            }
            let threshold = self.tol * diffs.iter().fold(1.0f64, |m, y| m.max(y.abs()));
            let mut vanished_at = None;
            for order in 1..points {
                for i in 0..points - order {
                    diffs[i] = diffs[i + 1] - diffs[i];
                }
                if diffs[..points - order].iter().all(|d| d.abs() <= threshold) {
                    vanished_at = Some(order - 1);
                    break;
                }
            }
            match vanished_at {
                Some(d) => worst = worst.max(d),
                None => return Ok(None),
            }
        }
        Ok(Some(worst))
    }
}

/// Detects polynomial behaviour of `phi` on `interval` with 32 stencil
/// placements. `None` means no degree up to `max_degree` fits.
pub fn detect_polynomial_degree(
    phi: &Activation,
    interval: (f64, f64),
    max_degree: usize,
    tol: f64,
) -> Result<Option<usize>, ActivationError> {
    PolyDetector::with_tol(tol).detect(|t| phi.eval(t), interval, max_degree)
}

/// A map `R^m → R^k` known only through point evaluations.
pub trait VectorMap {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, String>;
}

/// Closure-backed [`VectorMap`].
pub struct FnMap<F> {
    input_dim: usize,
    output_dim: usize,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, String>,
{
    pub fn new(input_dim: usize, output_dim: usize, f: F) -> Self {
        FnMap { input_dim, output_dim, f }
    }
}

impl<F> VectorMap for FnMap<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, String>,
{
    fn input_dim(&self) -> usize {
        self.input_dim
    }
    fn output_dim(&self) -> usize {
        self.output_dim
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, String> {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LineProbe {
    pub trials: usize,
    pub max_degree: usize,
    pub seed: u64,
    pub tol: f64,
    /// Parameter range of each random line `t ↦ a·t + b`.
    pub interval: (f64, f64),
}

impl Default for LineProbe {
    fn default() -> Self {
        LineProbe { trials: 64, max_degree: 8, seed: 0, tol: 1e-7, interval: (-1.0, 1.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineReport {
    pub is_polynomial_bounded: bool,
    pub max_observed_degree: Option<usize>,
    /// Detected degree per trial (`None` where no degree ≤ M fits).
    pub per_trial: Vec<Option<usize>>,
}

/// Restricts `map` to random lines and random functionals, `t ↦ ν·map(a·t+b)`,
/// and runs the degree detector on each restriction.
pub fn polynomial_along_lines(map: &dyn VectorMap, probe: &LineProbe) -> Result<LineReport, ActivationError> {
    let (m, k) = (map.input_dim(), map.output_dim());
    let mut rng = rng::seeded(probe.seed);
    let detector = PolyDetector { tol: probe.tol, seed: probe.seed ^ 0x9e37_79b9_7f4a_7c15, ..PolyDetector::default() };
    let mut per_trial = Vec::with_capacity(probe.trials);
    for trial in 0..probe.trials {
        let nu = rng::normal_vec(&mut rng, k);
        let a = rng::normal_vec(&mut rng, m);
        let b = rng::normal_vec(&mut rng, m);
        let failure = std::cell::RefCell::new(None);
        let restricted = |t: f64| {
            let x: Vec<f64> = a.iter().zip(&b).map(|(ai, bi)| ai * t + bi).collect();
            match map.eval(&x) {
                Ok(y) if y.len() == k => y.iter().zip(&nu).map(|(yi, ni)| yi * ni).sum(),
                Ok(y) => {
                    failure.borrow_mut().get_or_insert(ActivationError::OutputArity { trial, got: y.len(), expected: k });
                    f64::NAN
                }
                Err(message) => {
                    failure.borrow_mut().get_or_insert(ActivationError::Evaluator { trial, message });
                    f64::NAN
                }
            }
        };
        let detected = detector.detect(restricted, probe.interval, probe.max_degree);
        if let Some(err) = failure.into_inner() {
            return Err(err);
        }
        per_trial.push(detected?);
    }
    let is_polynomial_bounded = per_trial.iter().all(Option::is_some);
    let max_observed_degree = if is_polynomial_bounded { per_trial.iter().flatten().copied().max() } else { None };
    Ok(LineReport { is_polynomial_bounded, max_observed_degree, per_trial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn relu_and_abs_phi() {
        assert_eq!(LeakyPhi::RELU.apply(&[2.0, -3.0]), vec![2.0, 0.0]);
        assert_eq!(LeakyPhi::ABS.apply(&[2.0, -3.0]), vec![2.0, 3.0]);
        assert_eq!(LeakyPhi::new(1.0, 1.0).unwrap(), LeakyPhi::ABS);
    }

    #[test]
    fn linear_leaky_is_rejected() {
        assert_eq!(
            LeakyPhi::new(1.0, -1.0),
            Err(ActivationError::LinearLeaky { r: 1.0, s: -1.0 })
        );
        assert!(LeakyPhi::new(0.0, 0.0).is_err());
        assert!(LeakyPhi::new(f64::NAN, 0.0).is_err());
        assert!("leaky:2:-2".parse::<Activation>().is_err());
    }

    #[test]
    fn square_is_degree_two() {
        let d = detect_polynomial_degree(&Activation::Monomial(2), (-1.0, 1.0), 5, 1e-7).unwrap();
        assert_eq!(d, Some(2));
    }

    #[test]
    fn relu_is_not_polynomial() {
        let d = detect_polynomial_degree(&Activation::Relu, (-1.0, 1.0), 8, 1e-7).unwrap();
        assert_eq!(d, None);
    }

    #[test]
    fn affine_is_degree_one() {
        let affine = Activation::Polynomial(vec![1.0, 3.0]);
        assert_eq!(detect_polynomial_degree(&affine, (-1.0, 1.0), 5, 1e-7).unwrap(), Some(1));
        let konst = Activation::Polynomial(vec![4.0]);
        assert_eq!(detect_polynomial_degree(&konst, (-1.0, 1.0), 5, 1e-7).unwrap(), Some(0));
    }

    #[test]
    fn wide_intervals_separate_smooth_activations() {
        for phi in [Activation::Exp, Activation::Sigmoid, Activation::Tanh] {
            assert_eq!(detect_polynomial_degree(&phi, (-6.0, 6.0), 6, 1e-7).unwrap(), None, "{phi}");
        }
    }

    #[test]
    fn bad_interval() {
        assert!(matches!(
            detect_polynomial_degree(&Activation::Relu, (1.0, 1.0), 3, 1e-7),
            Err(ActivationError::BadInterval { .. })
        ));
    }

    #[test]
    fn claimed_degrees() {
        assert_eq!(Activation::Monomial(3).claimed_poly_degree(), Some(3));
        assert_eq!(Activation::Polynomial(vec![1.0, 0.0, -2.0, 0.0]).claimed_poly_degree(), Some(2));
        assert_eq!(Activation::Relu.claimed_poly_degree(), None);
        for d in 0..5u32 {
            let phi = Activation::Monomial(d);
            let found = detect_polynomial_degree(&phi, (-2.0, 2.0), 6, 1e-7).unwrap();
            assert_eq!(found, phi.claimed_poly_degree());
        }
    }

    #[test]
    fn parse_specs() {
        assert_eq!("relu".parse::<Activation>().unwrap(), Activation::Relu);
        assert_eq!(
            "leaky:1.0:0.25".parse::<Activation>().unwrap(),
            Activation::Leaky(LeakyPhi::new(1.0, 0.25).unwrap())
        );
        assert_eq!(
            "poly:1,0,\u{2212}2".parse::<Activation>().unwrap(),
            Activation::Polynomial(vec![1.0, 0.0, -2.0])
        );
        assert_eq!("monomial:3".parse::<Activation>().unwrap(), Activation::Monomial(3));
        let tab: Activation = "tab:0=0,1=2,3=2".parse().unwrap();
        assert_eq!(tab.eval(0.5), 1.0);
        assert_eq!(tab.eval(-4.0), 0.0);
        assert_eq!(tab.eval(10.0), 2.0);
        assert!("softmax".parse::<Activation>().is_err());
        assert!("tab:1=0,0=1".parse::<Activation>().is_err());
        for spec in ["sigmoid", "leaky:1:0.25", "poly:1,0,-2", "monomial:2", "tab:0=0,1=2"] {
            let phi: Activation = spec.parse().unwrap();
            assert_eq!(phi.to_string().parse::<Activation>().unwrap(), phi);
        }
    }

    #[test]
    fn affine_map_along_lines() {
        let map = FnMap::new(3, 2, |x: &[f64]| {
            Ok(vec![2.0 * x[0] - x[1] + 0.5, x[2] + 3.0 * x[0] - 1.0])
        });
        let report = polynomial_along_lines(&map, &LineProbe { max_degree: 3, ..LineProbe::default() }).unwrap();
        assert!(report.is_polynomial_bounded);
        assert!(report.max_observed_degree.unwrap() <= 1);
    }

    #[test]
    fn bilinear_map_along_lines() {
        let map = FnMap::new(2, 1, |x: &[f64]| Ok(vec![x[0] * x[1]]));
        let report = polynomial_along_lines(&map, &LineProbe { max_degree: 3, ..LineProbe::default() }).unwrap();
        assert!(report.is_polynomial_bounded);
        assert_eq!(report.max_observed_degree, Some(2));
    }

    #[test]
    fn positive_part_map_is_not_polynomial() {
        let map = FnMap::new(2, 2, |x: &[f64]| Ok(LeakyPhi::RELU.apply(x)));
        let report = polynomial_along_lines(&map, &LineProbe::default()).unwrap();
        assert!(!report.is_polynomial_bounded);
        assert_eq!(report.max_observed_degree, None);
    }

    #[test]
    fn evaluator_failure_names_trial() {
        let map = FnMap::new(1, 1, |x: &[f64]| if x[0] > 0.0 { Err("boom".into()) } else { Ok(vec![x[0]]) });
        match polynomial_along_lines(&map, &LineProbe::default()) {
            Err(ActivationError::Evaluator { message, .. }) => assert_eq!(message, "boom"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cubic_map_reaches_its_degree() {
        let map = FnMap::new(2, 2, |x: &[f64]| Ok(vec![x[0] * x[0] * x[1], x[1] - x[0]]));
        let report = polynomial_along_lines(&map, &LineProbe { trials: 16, max_degree: 6, ..LineProbe::default() }).unwrap();
        assert_eq!(report.max_observed_degree, Some(3));
    }

    proptest! {
        #[test]
        fn phi_sign_symmetry(r in -5.0f64..5.0, s in -5.0f64..5.0, v in prop::collection::vec(-1e3f64..1e3, 1..8)) {
            prop_assume!(s != -r);
            let phi = LeakyPhi::new(r, s).unwrap();
            let swapped = LeakyPhi::new(s, r).unwrap();
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            for (a, b) in phi.apply(&v).iter().zip(swapped.apply(&neg)) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
            let expect: Vec<f64> = v.iter().map(|&x| r * x.max(0.0) + s * (-x).max(0.0)).collect();
            prop_assert_eq!(phi.apply(&v), expect);
        }

        #[test]
        fn phi_is_positively_homogeneous(lambda in 0.0f64..100.0, v in prop::collection::vec(-10.0f64..10.0, 1..8)) {
            let scaled: Vec<f64> = v.iter().map(|x| lambda * x).collect();
            for (a, b) in LeakyPhi::RELU.apply(&scaled).iter().zip(LeakyPhi::RELU.apply(&v)) {
                prop_assert!((a - lambda * b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }

        #[test]
        fn detection_survives_affine_reparametrisation(alpha in 0.3f64..3.0, flip in any::<bool>(), beta in -0.2f64..0.2, deg in 0u32..5) {
            let alpha = if flip { -alpha } else { alpha };
            let phi = Activation::Monomial(deg);
            let base = detect_polynomial_degree(&phi, (-1.0, 1.0), 6, 1e-7).unwrap();
            let moved = PolyDetector::default().detect(|t| phi.eval(alpha * t + beta), (-1.0, 1.0), 6).unwrap();
            prop_assert_eq!(base, moved);
            // the kink at -beta/alpha stays inside (-1, 1)
            let relu = PolyDetector::default().detect(|t| (alpha * t + beta).max(0.0), (-1.0, 1.0), 8).unwrap();
            prop_assert_eq!(relu, None);
        }
    }
}
