//! Vector-lattice computations in `R^d` under the coordinatewise order,
//! which is `C(K)` for a finite set `K`.
//!
//! Generated sublattices are computed by randomized closure: starting from a
//! subspace, random elements are combined with `∨` (or pushed through `Φ`)
//! and the subspace is extended whenever a candidate leaves it. A run stops
//! once `stable_batches` consecutive batches add nothing, or the subspace
//! fills `R^d`. In finite dimension every subspace is closed, so this
//! targets the generated sublattice exactly; there is no proof that the
//! stopping rule never stops early, which is why small cases are
//! cross-checked against brute-force coefficient grids in the tests.

use std::collections::HashMap;
use std::fmt;
use std::ops::Index;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::activations::{Activation, LeakyPhi};
use crate::approximator::{self, AffineMap, Dictionary, FitError, SamplingScheme};
use crate::grids::{Grid, SampledFunction};
use crate::rng;
use crate::subspaces::{Subspace, SubspaceError, DEFAULT_RANK_TOL};

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("vectors have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("generator set is empty")]
    NoGenerators,
    #[error("generator {index} has a non-finite entry")]
    NonFinite { index: usize },
    #[error("generator {index} has a negative entry at coordinate {coord}; the generators must be positive")]
    NotPositive { index: usize, coord: usize },
    #[error("generator index {index} out of range for {arity} generators")]
    IndexOutOfRange { index: usize, arity: usize },
    #[error("sum of generators vanishes at coordinate {0}; it must be strictly positive")]
    DegenerateSum(usize),
    #[error("expression has a non-zero constant leaf, so it is not positively homogeneous")]
    NotHomogeneous,
    #[error("points_per_axis must be at least 3, got {0}")]
    GridTooCoarse(usize),
    #[error("target has a negative value at grid point {0}")]
    NegativeTarget(usize),
    #[error("dominated approximation needs a scalar target")]
    NotScalar,
    #[error("width schedule is empty or contains zero")]
    BadSchedule,
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("cannot parse expression {input:?} at byte {at}: {reason}")]
    Parse { input: String, at: usize, reason: String },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error(transparent)]
    Grid(#[from] crate::grids::GridError),
}

/// Element of `R^d` with the coordinatewise order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector(Vec<f64>);

impl LatticeVector {
    pub fn new(entries: Vec<f64>) -> Result<LatticeVector, LatticeError> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(LatticeError::NonFinite { index: 0 });
        }
        Ok(LatticeVector(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.0
    }

    fn zip_with(&self, other: &LatticeVector, f: impl Fn(f64, f64) -> f64) -> Result<LatticeVector, LatticeError> {
        if self.dim() != other.dim() {
            return Err(LatticeError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(LatticeVector(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect()))
    }

    pub fn join(&self, other: &LatticeVector) -> Result<LatticeVector, LatticeError> {
        self.zip_with(other, f64::max)
    }

    pub fn meet(&self, other: &LatticeVector) -> Result<LatticeVector, LatticeError> {
        self.zip_with(other, f64::min)
    }

    pub fn pos(&self) -> LatticeVector {
        LatticeVector(self.0.iter().map(|x| x.max(0.0)).collect())
    }

    pub fn neg(&self) -> LatticeVector {
        LatticeVector(self.0.iter().map(|x| (-x).max(0.0)).collect())
    }

    pub fn abs(&self) -> LatticeVector {
        LatticeVector(self.0.iter().map(|x| x.abs()).collect())
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|&x| x >= 0.0)
    }
}

impl Index<usize> for LatticeVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeOps {
    pub join: LatticeVector,
    pub meet: LatticeVector,
    pub pos: LatticeVector,
    pub neg: LatticeVector,
    pub abs: LatticeVector,
}

/// Join, meet, positive part, negative part (`u = u⁺ − u⁻`) and modulus.
pub fn lattice_ops(u: &LatticeVector, v: &LatticeVector) -> Result<LatticeOps, LatticeError> {
    Ok(LatticeOps { join: u.join(v)?, meet: u.meet(v)?, pos: u.pos(), neg: u.neg(), abs: u.abs() })
}

/// Finite set of generators sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    vectors: Vec<LatticeVector>,
    positive: bool,
}

impl GeneratorSet {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<GeneratorSet, LatticeError> {
        let d = vectors.first().ok_or(LatticeError::NoGenerators)?.len();
        let mut out = Vec::with_capacity(vectors.len());
        for (index, v) in vectors.into_iter().enumerate() {
            if v.len() != d {
                return Err(LatticeError::DimensionMismatch(d, v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(LatticeError::NonFinite { index });
            }
            out.push(LatticeVector(v));
        }
        let positive = out.iter().all(LatticeVector::is_positive);
        Ok(GeneratorSet { vectors: out, positive })
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn vectors(&self) -> &[LatticeVector] {
        &self.vectors
    }

    fn require_positive(&self) -> Result<(), LatticeError> {
        for (index, v) in self.vectors.iter().enumerate() {
            if let Some(coord) = v.0.iter().position(|&x| x < 0.0) {
                return Err(LatticeError::NotPositive { index, coord });
            }
        }
        Ok(())
    }

    /// `Σ c_i a_i`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (c, v) in coeffs.iter().zip(&self.vectors) {
            out.iter_mut().zip(&v.0).for_each(|(o, x)| *o += c * x);
        }
        out
    }

    /// Coordinatewise sum of all generators.
    pub fn sum(&self) -> Vec<f64> {
        self.combine(&vec![1.0; self.len()])
    }
}

/// Stopping rule of the randomized closures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureBudget {
    pub batch_size: usize,
    pub stable_batches: usize,
}

impl Default for ClosureBudget {
    fn default() -> Self {
        ClosureBudget { batch_size: 200, stable_batches: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureOptions {
    pub rank_tol: f64,
    pub budget: ClosureBudget,
    pub seed: u64,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions { rank_tol: DEFAULT_RANK_TOL, budget: ClosureBudget::default(), seed: 0 }
    }
}

impl ClosureOptions {
    pub fn with_seed(seed: u64) -> Self {
        ClosureOptions { seed, ..Self::default() }
    }
}

/// Grows `space` with candidates until the budget's stability rule or the
/// ambient dimension stops it.
fn grow(space: &mut Subspace, budget: ClosureBudget, mut candidate: impl FnMut(&Subspace) -> Vec<f64>) {
    let d = space.ambient_dim();
    let mut stable = 0;
    while stable < budget.stable_batches && space.dim() < d {
        let mut grew = false;
        for _ in 0..budget.batch_size {
            let c = candidate(space);
            if space.extend_unchecked(&c) {
                grew = true;
                if space.dim() == d {
                    break;
                }
            }
        }
        stable = if grew { 0 } else { stable + 1 };
    }
}

fn random_member(space: &Subspace, rng: &mut impl rand::Rng) -> Vec<f64> {
    let mut out = vec![0.0; space.ambient_dim()];
    for q in space.basis() {
        let c = rng::normal(rng);
        out.iter_mut().zip(q).for_each(|(o, x)| *o += c * x);
    }
    out
}

/// Linear sublattice generated by `a`: the span of `a`, closed under joins of
/// sampled pairs.
pub fn sublattice_closure(a: &GeneratorSet, opts: &ClosureOptions) -> Result<Subspace, LatticeError> {
    let mut space = Subspace::span_of(a.dim(), a.vectors().iter().map(|v| v.entries()), opts.rank_tol)?;
    let mut rng = rng::seeded(opts.seed);
    grow(&mut space, opts.budget, |s| {
        let u = random_member(s, &mut rng);
        let v = random_member(s, &mut rng);
        u.iter().zip(&v).map(|(x, y)| x.max(*y)).collect()
    });
    Ok(space)
}

/// `span Φ(span A)`, sampled with standard-normal coefficients on `A`.
pub fn phi_span(a: &GeneratorSet, phi: LeakyPhi, opts: &ClosureOptions) -> Result<Subspace, LatticeError> {
    let mut space = Subspace::span_of(a.dim(), std::iter::empty::<&[f64]>(), opts.rank_tol)?;
    let mut rng = rng::seeded(opts.seed);
    let n = a.len();
    grow(&mut space, opts.budget, |_| phi.apply(&a.combine(&rng::normal_vec(&mut rng, n))));
    Ok(space)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationCheck {
    pub vlt_dim: usize,
    pub phi_dim: usize,
    pub equal: bool,
}

/// Compares the generated sublattice with `span Φ(span A)` for positive
/// generators, both grown from the same seed.
pub fn check_generation_formula(
    a: &GeneratorSet,
    phi: LeakyPhi,
    tol: f64,
    opts: &ClosureOptions,
) -> Result<GenerationCheck, LatticeError> {
    a.require_positive()?;
    let vlt = sublattice_closure(a, opts)?;
    let spanned = phi_span(a, phi, opts)?;
    Ok(GenerationCheck { vlt_dim: vlt.dim(), phi_dim: spanned.dim(), equal: vlt.equal(&spanned, tol)? })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HuijsmansReport {
    pub g_in_phi_span: bool,
    pub g_in_vlt: bool,
    pub vlt_dim: usize,
    pub phi_dim: usize,
    pub grid_points: usize,
}

/// Samples the coordinate projections `u, v, w` of `[0,1]³` and
/// `g = (u ∧ v − w)⁺` on a cubic grid, and tests whether `g` lies in
/// `span Φ(span{u, v, w})` there.
pub fn huijsmans_grid_check(
    points_per_axis: usize,
    phi: LeakyPhi,
    tol: f64,
    opts: &ClosureOptions,
) -> Result<HuijsmansReport, LatticeError> {
    if points_per_axis < 3 {
        return Err(LatticeError::GridTooCoarse(points_per_axis));
    }
    let (a, g) = huijsmans_vectors(points_per_axis)?;
    let spanned = phi_span(&a, phi, opts)?;
    let vlt = sublattice_closure(&a, opts)?;
    Ok(HuijsmansReport {
        g_in_phi_span: spanned.contains(&g, tol)?,
        g_in_vlt: vlt.contains(&g, tol)?,
        vlt_dim: vlt.dim(),
        phi_dim: spanned.dim(),
        grid_points: a.dim(),
    })
}

/// Generators `{u, v, w}` and `g = (u ∧ v − w)⁺` sampled on the cube grid.
pub fn huijsmans_vectors(points_per_axis: usize) -> Result<(GeneratorSet, Vec<f64>), LatticeError> {
    let grid = Grid::make_box(&[(0.0, 1.0); 3], points_per_axis)?;
    let coords: Vec<Vec<f64>> = (0..3).map(|k| grid.points().map(|p| p[k]).collect()).collect();
    let g = grid.points().map(|p| (p[0].min(p[1]) - p[2]).max(0.0)).collect();
    Ok((GeneratorSet::new(coords)?, g))
}

/// Lattice-linear expression over generator symbols `g0, g1, …`.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeExpr {
    Generator(usize),
    /// Constant vector `c·𝟙`.
    Constant(f64),
    Join(Box<LatticeExpr>, Box<LatticeExpr>),
    Meet(Box<LatticeExpr>, Box<LatticeExpr>),
    Sum(Box<LatticeExpr>, Box<LatticeExpr>),
    Scale(f64, Box<LatticeExpr>),
}

impl LatticeExpr {
    pub fn gen(i: usize) -> LatticeExpr {
        LatticeExpr::Generator(i)
    }

    pub fn join(self, other: LatticeExpr) -> LatticeExpr {
        LatticeExpr::Join(Box::new(self), Box::new(other))
    }

    pub fn meet(self, other: LatticeExpr) -> LatticeExpr {
        LatticeExpr::Meet(Box::new(self), Box::new(other))
    }

    pub fn plus(self, other: LatticeExpr) -> LatticeExpr {
        LatticeExpr::Sum(Box::new(self), Box::new(other))
    }

    pub fn scale(self, c: f64) -> LatticeExpr {
        LatticeExpr::Scale(c, Box::new(self))
    }

    /// One more than the largest generator index used.
    pub fn arity(&self) -> usize {
        match self {
            LatticeExpr::Generator(i) => i + 1,
            LatticeExpr::Constant(_) => 0,
            LatticeExpr::Join(a, b) | LatticeExpr::Meet(a, b) | LatticeExpr::Sum(a, b) => a.arity().max(b.arity()),
            LatticeExpr::Scale(_, a) => a.arity(),
        }
    }

    /// No non-zero constants: `h(λx) = λ h(x)` for `λ ≥ 0`.
    pub fn is_positively_homogeneous(&self) -> bool {
        match self {
            LatticeExpr::Generator(_) => true,
            LatticeExpr::Constant(c) => *c == 0.0,
            LatticeExpr::Join(a, b) | LatticeExpr::Meet(a, b) | LatticeExpr::Sum(a, b) => {
                a.is_positively_homogeneous() && b.is_positively_homogeneous()
            }
            LatticeExpr::Scale(_, a) => a.is_positively_homogeneous(),
        }
    }

    /// Value at a single point `y ∈ R^n`.
    pub fn eval_point(&self, y: &[f64]) -> f64 {
        match self {
            LatticeExpr::Generator(i) => y[*i],
            LatticeExpr::Constant(c) => *c,
            LatticeExpr::Join(a, b) => a.eval_point(y).max(b.eval_point(y)),
            LatticeExpr::Meet(a, b) => a.eval_point(y).min(b.eval_point(y)),
            LatticeExpr::Sum(a, b) => a.eval_point(y) + b.eval_point(y),
            LatticeExpr::Scale(c, a) => c * a.eval_point(y),
        }
    }
}

/// Coordinatewise evaluation of `h ∘ a`.
pub fn eval_expr(h: &LatticeExpr, a: &GeneratorSet) -> Result<LatticeVector, LatticeError> {
    if h.arity() > a.len() {
        return Err(LatticeError::IndexOutOfRange { index: h.arity() - 1, arity: a.len() });
    }
    let mut point = vec![0.0; a.len()];
    let values = (0..a.dim())
        .map(|x| {
            for (slot, v) in point.iter_mut().zip(a.vectors()) {
                *slot = v[x];
            }
            h.eval_point(&point)
        })
        .collect();
    Ok(LatticeVector(values))
}

impl fmt::Display for LatticeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeExpr::Generator(i) => write!(f, "g{i}"),
            LatticeExpr::Constant(c) => write!(f, "{c}"),
            LatticeExpr::Join(a, b) => write!(f, "max({a}, {b})"),
            LatticeExpr::Meet(a, b) => write!(f, "min({a}, {b})"),
            LatticeExpr::Sum(a, b) => write!(f, "({a} + {b})"),
            LatticeExpr::Scale(c, a) => write!(f, "{c}*{a}"),
        }
    }
}

impl FromStr for LatticeExpr {
    type Err = LatticeError;

    /// Grammar: `expr := term (('+'|'-') term)*`,
    /// `term := NUMBER '*' atom | atom`,
    /// `atom := 'g'INDEX | NUMBER | ('max'|'min') '(' expr ',' expr ')' | '(' expr ')' | '-' atom`.
    fn from_str(input: &str) -> Result<LatticeExpr, LatticeError> {
        let mut p = Parser { src: input, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != input.len() {
            return Err(p.fail("trailing input"));
        }
        Ok(e)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn fail(&self, reason: &str) -> LatticeError {
        LatticeError::Parse { input: self.src.to_string(), at: self.pos, reason: reason.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), LatticeError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.fail(&format!("expected {token:?}")))
        }
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let sign = usize::from(self.rest().starts_with('-'));
        let len = sign
            + self.rest()[sign..]
                .char_indices()
                .take_while(|&(i, c)| c.is_ascii_digit() || c == '.' || (i > 0 && (c == 'e' || c == 'E')))
                .count();
        if len == sign {
            return None;
        }
        let value = self.rest()[..len].parse().ok()?;
        self.pos += len;
        Some(value)
    }

    fn expr(&mut self) -> Result<LatticeExpr, LatticeError> {
        let mut acc = self.term()?;
        loop {
            if self.eat("+") {
                acc = acc.plus(self.term()?);
            } else if self.eat("-") {
                acc = acc.plus(self.term()?.scale(-1.0));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<LatticeExpr, LatticeError> {
        let start = self.pos;
        if let Some(c) = self.number() {
            if self.eat("*") {
                return Ok(self.atom()?.scale(c));
            }
            self.pos = start;
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<LatticeExpr, LatticeError> {
        if self.eat("-") {
            return Ok(self.atom()?.scale(-1.0));
        }
        if self.eat("(") {
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        for (name, meet) in [("max", false), ("min", true)] {
            if self.eat(name) {
                self.expect("(")?;
                let a = self.expr()?;
                self.expect(",")?;
                let b = self.expr()?;
                self.expect(")")?;
                return Ok(if meet { a.meet(b) } else { a.join(b) });
            }
        }
        if self.eat("g") {
            let len = self.rest().chars().take_while(char::is_ascii_digit).count();
            let index = self.rest()[..len].parse().map_err(|_| self.fail("expected generator index"))?;
            self.pos += len;
            return Ok(LatticeExpr::Generator(index));
        }
        match self.number() {
            Some(c) => Ok(LatticeExpr::Constant(c)),
            None => Err(self.fail("expected generator, number, max, min or '('")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpanningResult {
    /// Coefficient of `Φ(f_j)` in the output.
    pub coefficients: Vec<f64>,
    /// Elements `f_j = Σ_i u_ji a_i + b_j Σ_i a_i` of `span A`.
    pub f_list: Vec<LatticeVector>,
    /// `Σ_j c_j Φ(f_j)`.
    pub output: LatticeVector,
    /// `max_x |output − h∘a| / e`, the error in the `‖·‖_e` norm.
    pub achieved_sup_error: f64,
    /// Plain `max_x |output − h∘a|`.
    pub plain_sup_error: f64,
}

/// Approximates `h ∘ a` by an element of `span Φ(span A)`.
///
/// The generators are normalised by `e = Σ a_i`, so every coordinate `x`
/// becomes a point `â(x)` of the simplex. A dictionary `φ(u·y + b)` with the
/// given maps is fitted to `h` on that point cloud, and each term is lifted
/// to `Φ(Σ u_i a_i + b e) = e · φ(u·â + b)`.
pub fn spanning_construct_with_maps(
    a: &GeneratorSet,
    h: &LatticeExpr,
    phi: LeakyPhi,
    maps: &[AffineMap],
    ridge: f64,
) -> Result<SpanningResult, LatticeError> {
    let cloud = NormalizedCloud::new(a, h)?;
    let dictionary = Dictionary::build(Activation::Leaky(phi), maps.to_vec(), cloud.grid.clone())?;
    let target = SampledFunction::from_fn(cloud.grid.clone(), |y| h.eval_point(y));
    let fitted = approximator::fit(&dictionary, &target, ridge)?;
    Ok(cloud.lift(a, h, phi, maps, fitted.coefficients))
}

/// [`spanning_construct_with_maps`] with `width` Gaussian maps drawn for the
/// normalised cloud.
pub fn spanning_construct(
    a: &GeneratorSet,
    h: &LatticeExpr,
    phi: LeakyPhi,
    epsilon: f64,
    width: usize,
    seed: u64,
) -> Result<(SpanningResult, bool), LatticeError> {
    if !(epsilon > 0.0) {
        return Err(LatticeError::BadEpsilon(epsilon));
    }
    let cloud = NormalizedCloud::new(a, h)?;
    let maps = approximator::sample_affine_maps(&cloud.grid, width, seed, SamplingScheme::Gaussian)?;
    let result = spanning_construct_with_maps(a, h, phi, &maps, 0.0)?;
    let met = result.achieved_sup_error <= epsilon;
    Ok((result, met))
}

struct NormalizedCloud {
    grid: Arc<Grid>,
    sum: Vec<f64>,
}

impl NormalizedCloud {
    fn new(a: &GeneratorSet, h: &LatticeExpr) -> Result<NormalizedCloud, LatticeError> {
        a.require_positive()?;
        if h.arity() > a.len() {
            return Err(LatticeError::IndexOutOfRange { index: h.arity() - 1, arity: a.len() });
        }
        if !h.is_positively_homogeneous() {
            return Err(LatticeError::NotHomogeneous);
        }
        let sum = a.sum();
        if let Some(x) = sum.iter().position(|&s| !(s > 0.0)) {
            return Err(LatticeError::DegenerateSum(x));
        }
        // distinct normalised points; coordinates sharing a profile collapse
        let mut seen = HashMap::new();
        let mut points = Vec::new();
        for x in 0..a.dim() {
            let y: Vec<f64> = a.vectors().iter().map(|v| v[x] / sum[x]).collect();
            let key: Vec<u64> = y.iter().map(|t| (t + 0.0).to_bits()).collect();
            seen.entry(key).or_insert_with(|| {
                points.push(y);
            });
        }
        Ok(NormalizedCloud { grid: Arc::new(Grid::from_points(points)?), sum })
    }

    fn lift(
        &self,
        a: &GeneratorSet,
        h: &LatticeExpr,
        phi: LeakyPhi,
        maps: &[AffineMap],
        coefficients: Vec<f64>,
    ) -> SpanningResult {
        let d = a.dim();
        let f_list: Vec<LatticeVector> = maps
            .iter()
            .map(|m| {
                let mut f = a.combine(&m.w);
                f.iter_mut().zip(&self.sum).for_each(|(fx, ex)| *fx += m.b * ex);
                LatticeVector(f)
            })
            .collect();
        let mut output = vec![0.0; d];
        for (c, f) in coefficients.iter().zip(&f_list) {
            output.iter_mut().zip(phi.apply(f.entries())).for_each(|(o, p)| *o += c * p);
        }
        let target = eval_expr(h, a).expect("arity checked").0;
        let mut achieved = 0.0f64;
        let mut plain = 0.0f64;
        for x in 0..d {
            let diff = (output[x] - target[x]).abs();
            plain = plain.max(diff);
            achieved = achieved.max(diff / self.sum[x]);
        }
        SpanningResult {
            coefficients,
            f_list,
            output: LatticeVector(output),
            achieved_sup_error: achieved,
            plain_sup_error: plain,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DominatedStep {
    pub width: usize,
    /// Measured sup error of the ReLU fit at this step.
    pub epsilon: f64,
    pub approx: SampledFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominatedOptions {
    pub steps: usize,
    /// Width per step; the last entry repeats when `steps` exceeds it.
    pub widths: Vec<usize>,
    pub seed: u64,
    pub ridge: f64,
}

/// Increasing sequence `0 ≤ e_1 ≤ … ≤ e_T ≤ f` built from ReLU dictionary
/// fits: step `n` fits `g_n ≈ f` with measured sup error `ε_n` and sets
/// `e_n = e_{n−1} ∨ (f ∧ (g_n − ε_n)⁺)`, so `sup(f − e_n) ≤ 2ε_n`.
/// Step `n` draws its maps with seed `seed + n`.
pub fn dominated_approx(f: &SampledFunction, opts: &DominatedOptions) -> Result<Vec<DominatedStep>, LatticeError> {
    if f.codomain_dim() != 1 {
        return Err(LatticeError::NotScalar);
    }
    if let Some(i) = f.values().iter().position(|&v| !(v >= 0.0)) {
        return Err(LatticeError::NegativeTarget(i));
    }
    if opts.widths.is_empty() || opts.widths.contains(&0) {
        return Err(LatticeError::BadSchedule);
    }
    let grid = f.grid().clone();
    let mut current = vec![0.0; f.len()];
    let mut steps = Vec::with_capacity(opts.steps);
    for n in 0..opts.steps {
        let width = opts.widths[n.min(opts.widths.len() - 1)];
        let seed = opts.seed.wrapping_add(n as u64);
        let maps = approximator::sample_affine_maps(&grid, width, seed, SamplingScheme::Gaussian)?;
        let dictionary = Dictionary::build(Activation::Relu, maps, grid.clone())?;
        let fitted = approximator::fit(&dictionary, f, opts.ridge)?;
        let eps = fitted.sup_error;
        for ((e, &g), &target) in current.iter_mut().zip(&fitted.fitted).zip(f.values()) {
            let candidate = target.min((g - eps).max(0.0));
            *e = f64::max(*e, candidate);
        }
        steps.push(DominatedStep {
            width,
            epsilon: eps,
            approx: SampledFunction::scalar(grid.clone(), current.clone())?,
        });
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspaces::tests::elimination_rank;
    use proptest::prelude::*;
    use rand::Rng;

    fn lv(v: &[f64]) -> LatticeVector {
        LatticeVector::new(v.to_vec()).unwrap()
    }

    fn random_positive(seed: u64, count: usize, d: usize) -> GeneratorSet {
        let mut r = rng::seeded(seed);
        GeneratorSet::new((0..count).map(|_| (0..d).map(|_| r.random_range(0.0..1.0)).collect()).collect()).unwrap()
    }

    fn uv() -> GeneratorSet {
        GeneratorSet::new(vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 1.0, 0.0]]).unwrap()
    }

    /// `(r u + s v)⁺` over a square coefficient grid.
    fn brute_force_pair_span(a: &GeneratorSet, phi: LeakyPhi, steps: usize) -> Subspace {
        let mut vs = Vec::new();
        for i in 0..steps {
            for j in 0..steps {
                let r = -1.0 + 2.0 * i as f64 / (steps - 1) as f64;
                let s = -1.0 + 2.0 * j as f64 / (steps - 1) as f64;
                vs.push(phi.apply(&a.combine(&[r, s])));
            }
        }
        Subspace::span_of(a.dim(), &vs, DEFAULT_RANK_TOL).unwrap()
    }

    #[test]
    fn ops_on_small_vectors() {
        let ops = lattice_ops(&lv(&[1.0, -2.0]), &lv(&[0.0, 0.0])).unwrap();
        assert_eq!(ops.join, lv(&[1.0, 0.0]));
        assert_eq!(ops.meet, lv(&[0.0, -2.0]));
        assert_eq!(ops.pos, lv(&[1.0, 0.0]));
        assert_eq!(ops.neg, lv(&[0.0, 2.0]));
        assert_eq!(ops.abs, lv(&[1.0, 2.0]));
        assert!(matches!(lattice_ops(&lv(&[1.0]), &lv(&[1.0, 2.0])), Err(LatticeError::DimensionMismatch(1, 2))));
    }

    #[test]
    fn positive_singleton_closures() {
        let a = GeneratorSet::new(vec![vec![0.5, 2.0, 0.0, 1.0]]).unwrap();
        assert_eq!(sublattice_closure(&a, &ClosureOptions::default()).unwrap().dim(), 1);
        assert_eq!(phi_span(&a, LeakyPhi::RELU, &ClosureOptions::default()).unwrap().dim(), 1);
    }

    #[test]
    fn standard_basis_fills_space() {
        let d = 6;
        let a = GeneratorSet::new((0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()).unwrap();
        assert_eq!(sublattice_closure(&a, &ClosureOptions::default()).unwrap().dim(), d);
    }

    #[test]
    fn pair_in_r4_generates_three_dimensions() {
        let a = uv();
        let brute = brute_force_pair_span(&a, LeakyPhi::RELU, 41);
        assert_eq!(brute.dim(), 3);
        let meet = a.vectors()[0].meet(&a.vectors()[1]).unwrap();
        assert_eq!(meet, lv(&[0.0, 0.0, 1.0, 0.0]));
        let with_meet: Vec<Vec<f64>> = a.vectors().iter().map(|v| v.entries().to_vec()).chain([meet.into_entries()]).collect();
        assert_eq!(elimination_rank(&with_meet, 1e-12), 3);

        let opts = ClosureOptions::with_seed(3);
        let vlt = sublattice_closure(&a, &opts).unwrap();
        let spanned = phi_span(&a, LeakyPhi::RELU, &opts).unwrap();
        assert_eq!(vlt.dim(), 3);
        assert!(vlt.equal(&spanned, 1e-7).unwrap());
        assert!(vlt.equal(&brute, 1e-7).unwrap());
    }

    #[test]
    fn modulus_span_in_the_plane() {
        let a = GeneratorSet::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let brute = brute_force_pair_span(&a, LeakyPhi::ABS, 21);
        assert_eq!(brute.dim(), 2);
        assert_eq!(phi_span(&a, LeakyPhi::ABS, &ClosureOptions::default()).unwrap().dim(), 2);
    }

    #[test]
    fn formula_check_on_random_positive_sets() {
        let two = random_positive(1, 2, 8);
        let r = check_generation_formula(&two, LeakyPhi::RELU, 1e-7, &ClosureOptions::with_seed(1)).unwrap();
        assert!(r.equal, "{r:?}");
        let three = random_positive(2, 3, 10);
        let r = check_generation_formula(&three, LeakyPhi::new(1.0, 0.5).unwrap(), 1e-7, &ClosureOptions::with_seed(2)).unwrap();
        assert!(r.equal, "{r:?}");
    }

    #[test]
    fn formula_check_rejects_negative_generators() {
        let a = GeneratorSet::new(vec![vec![1.0, 0.5], vec![0.2, -0.1]]).unwrap();
        assert!(!a.is_positive());
        assert!(matches!(
            check_generation_formula(&a, LeakyPhi::RELU, 1e-7, &ClosureOptions::default()),
            Err(LatticeError::NotPositive { index: 1, coord: 1 })
        ));
    }

    #[test]
    fn huijsmans_on_small_grids() {
        let opts = ClosureOptions::with_seed(5);
        let r = huijsmans_grid_check(3, LeakyPhi::RELU, 1e-7, &opts).unwrap();
        assert!(r.g_in_phi_span && r.g_in_vlt, "{r:?}");
        assert!(r.phi_dim < r.grid_points);
        assert_eq!(r.phi_dim, r.vlt_dim);
        assert!(matches!(huijsmans_grid_check(2, LeakyPhi::RELU, 1e-7, &opts), Err(LatticeError::GridTooCoarse(2))));
    }

    #[test]
    fn random_vector_escapes_phi_span() {
        let (a, _) = huijsmans_vectors(3).unwrap();
        let s = phi_span(&a, LeakyPhi::RELU, &ClosureOptions::with_seed(5)).unwrap();
        assert!(s.dim() < a.dim());
        let mut r = rng::seeded(77);
        assert!(!s.contains(&rng::normal_vec(&mut r, a.dim()), 1e-7).unwrap());
    }

    #[test]
    fn expression_evaluation() {
        let a = uv();
        assert_eq!(eval_expr(&LatticeExpr::gen(0), &a).unwrap(), a.vectors()[0]);
        let meet = LatticeExpr::gen(0).meet(LatticeExpr::gen(1));
        assert_eq!(eval_expr(&meet, &a).unwrap(), lv(&[0.0, 0.0, 1.0, 0.0]));
        assert!(matches!(eval_expr(&LatticeExpr::gen(2), &a), Err(LatticeError::IndexOutOfRange { index: 2, arity: 2 })));
    }

    #[test]
    fn expression_matches_loop_interpreter() {
        let mut r = rng::seeded(12);
        let a = GeneratorSet::new((0..2).map(|_| rng::normal_vec(&mut r, 30)).collect()).unwrap();
        let h = LatticeExpr::gen(0).scale(2.0).plus(LatticeExpr::gen(1).join(LatticeExpr::Constant(0.0)));
        let got = eval_expr(&h, &a).unwrap();
        for x in 0..30 {
            let u = a.vectors()[0][x];
            let v = a.vectors()[1][x];
            let expect = 2.0 * u + if v > 0.0 { v } else { 0.0 };
            assert_eq!(got[x], expect);
        }
    }

    #[test]
    fn expression_parsing() {
        let h: LatticeExpr = "2*g0 + max(g1, 0)".parse().unwrap();
        assert_eq!(h, LatticeExpr::gen(0).scale(2.0).plus(LatticeExpr::gen(1).join(LatticeExpr::Constant(0.0))));
        let h: LatticeExpr = "min(g0,g1) - g2".parse().unwrap();
        assert_eq!(h.arity(), 3);
        assert!(h.is_positively_homogeneous());
        assert!(!"max(g0, 1)".parse::<LatticeExpr>().unwrap().is_positively_homogeneous());
        assert!("max(g0 g1)".parse::<LatticeExpr>().is_err());
        assert!("g0 +".parse::<LatticeExpr>().is_err());
        let round: LatticeExpr = h.to_string().parse().unwrap();
        assert_eq!(round, h);
    }

    #[test]
    fn single_generator_is_reproduced_exactly() {
        let a = random_positive(4, 3, 20);
        let maps = [AffineMap::new(vec![1.0, 0.0, 0.0], 0.0).unwrap()];
        let r = spanning_construct_with_maps(&a, &LatticeExpr::gen(0), LeakyPhi::RELU, &maps, 0.0).unwrap();
        assert!(r.achieved_sup_error <= 1e-10, "{}", r.achieved_sup_error);
        assert_eq!(r.f_list[0], a.vectors()[0]);
    }

    #[test]
    fn meet_of_two_generators_is_approximated() {
        let a = random_positive(13, 2, 50);
        let h = LatticeExpr::gen(0).meet(LatticeExpr::gen(1));
        let (r, met) = spanning_construct(&a, &h, LeakyPhi::RELU, 0.05, 200, 13).unwrap();
        assert!(met && r.achieved_sup_error < 0.05, "{}", r.achieved_sup_error);
        let s = phi_span(&a, LeakyPhi::RELU, &ClosureOptions::with_seed(13)).unwrap();
        assert!(s.contains(r.output.entries(), 1e-7).unwrap());
    }

    #[test]
    fn construct_output_is_a_phi_combination() {
        // recompute Σ c_j Φ(f_j) and check each f_j lies in span A
        let a = random_positive(21, 3, 12);
        let h: LatticeExpr = "max(min(g0, g1), 0.5*g2)".parse().unwrap();
        let phi = LeakyPhi::new(1.0, 0.25).unwrap();
        let (r, _) = spanning_construct(&a, &h, phi, 0.1, 25, 2).unwrap();
        let span_a = Subspace::span_of(12, a.vectors().iter().map(|v| v.entries()), DEFAULT_RANK_TOL).unwrap();
        let mut total = [0.0; 12];
        for (c, f) in r.coefficients.iter().zip(&r.f_list) {
            assert!(span_a.contains(f.entries(), 1e-10).unwrap());
            total.iter_mut().zip(phi.apply(f.entries())).for_each(|(t, p)| *t += c * p);
        }
        for (a, b) in total.iter().zip(r.output.entries()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn construct_preconditions() {
        let a = GeneratorSet::new(vec![vec![1.0, 0.0], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(
            spanning_construct(&a, &LatticeExpr::gen(0), LeakyPhi::RELU, 0.1, 5, 0),
            Err(LatticeError::DegenerateSum(1))
        ));
        let b = random_positive(1, 2, 4);
        assert!(matches!(
            spanning_construct(&b, &"max(g0, 1)".parse().unwrap(), LeakyPhi::RELU, 0.1, 5, 0),
            Err(LatticeError::NotHomogeneous)
        ));
        assert!(matches!(
            spanning_construct(&b, &LatticeExpr::gen(0), LeakyPhi::RELU, 0.0, 5, 0),
            Err(LatticeError::BadEpsilon(_))
        ));
    }

    fn dominated_opts(widths: Vec<usize>, seed: u64, ridge: f64) -> DominatedOptions {
        DominatedOptions { steps: widths.len(), widths, seed, ridge }
    }

    #[test]
    fn zero_target_stays_zero() {
        let g = Arc::new(Grid::make_box(&[(-1.0, 1.0)], 21).unwrap());
        let f = SampledFunction::from_fn(g, |_| 0.0);
        for step in dominated_approx(&f, &dominated_opts(vec![5, 10], 1, 1e-8)).unwrap() {
            assert!(step.approx.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn exact_member_is_recovered() {
        let g = Arc::new(Grid::make_box(&[(-1.0, 1.0)], 41).unwrap());
        let maps = approximator::sample_affine_maps(&g, 10, 8, SamplingScheme::Gaussian).unwrap();
        let d = Dictionary::build(Activation::Relu, maps, g.clone()).unwrap();
        let f = SampledFunction::scalar(g, d.column(2)).unwrap();
        let steps = dominated_approx(&f, &dominated_opts(vec![10], 8, 0.0)).unwrap();
        assert!(steps[0].epsilon <= 1e-9);
        let gap = f.values().iter().zip(steps[0].approx.values()).map(|(a, b)| a - b).fold(0.0, f64::max);
        assert!(gap <= 2.0 * steps[0].epsilon);
    }

    #[test]
    fn dominated_rejects_negative_values() {
        let g = Arc::new(Grid::make_box(&[(-1.0, 1.0)], 5).unwrap());
        let f = SampledFunction::from_fn(g, |x| x[0]);
        assert!(matches!(dominated_approx(&f, &dominated_opts(vec![3], 0, 0.0)), Err(LatticeError::NegativeTarget(0))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn riesz_identities(u in prop::collection::vec(-1e3f64..1e3, 1..12)) {
            let u = lv(&u);
            let back: Vec<f64> = u.pos().entries().iter().zip(u.neg().entries()).map(|(p, n)| p - n).collect();
            prop_assert_eq!(&back[..], u.entries());
            prop_assert!(u.pos().meet(&u.neg()).unwrap().entries().iter().all(|&x| x == 0.0));
            let minus = lv(&u.entries().iter().map(|x| -x).collect::<Vec<_>>());
            prop_assert_eq!(u.abs(), u.join(&minus).unwrap());
        }

        #[test]
        fn closure_is_closed_under_joins(seed in 0u64..1000, count in 1usize..4) {
            let a = random_positive(seed, count, 7);
            let opts = ClosureOptions { budget: ClosureBudget { batch_size: 50, stable_batches: 20 }, ..ClosureOptions::with_seed(seed) };
            let s = sublattice_closure(&a, &opts).unwrap();
            let span_a = Subspace::span_of(7, a.vectors().iter().map(|v| v.entries()), DEFAULT_RANK_TOL).unwrap();
            prop_assert!(s.contains_subspace(&span_a, 1e-7).unwrap());
            let mut r = rng::seeded(seed + 1);
            for _ in 0..1000 {
                let u = random_member(&s, &mut r);
                let v = random_member(&s, &mut r);
                let j: Vec<f64> = u.iter().zip(&v).map(|(x, y)| x.max(*y)).collect();
                prop_assert!(s.contains(&j, 1e-7).unwrap());
            }
        }

        #[test]
        fn phi_span_sits_inside_the_sublattice(seed in 0u64..1000, count in 1usize..4, r in 0.1f64..2.0, s in -2.0f64..2.0) {
            let a = random_positive(seed, count, 9);
            let phi = LeakyPhi::new(r, s).unwrap();
            let opts = ClosureOptions { budget: ClosureBudget { batch_size: 50, stable_batches: 20 }, ..ClosureOptions::with_seed(seed) };
            let vlt = sublattice_closure(&a, &opts).unwrap();
            let spanned = phi_span(&a, phi, &opts).unwrap();
            prop_assert!(vlt.contains_subspace(&spanned, 1e-7).unwrap());
        }

        #[test]
        fn closure_ignores_positive_rescaling(seed in 0u64..1000, scales in prop::collection::vec(0.1f64..10.0, 3)) {
            // sets with coincident ratios keep the closure below full dimension
            let mut r = rng::seeded(seed);
            let base: Vec<f64> = (0..4).map(|_| r.random_range(0.1..1.0)).collect();
            let raw: Vec<Vec<f64>> = (0..3).map(|i| base.iter().cycle().skip(i).take(4).chain(base.iter()).copied().collect()).collect();
            let a = GeneratorSet::new(raw.clone()).unwrap();
            let scaled = GeneratorSet::new(raw.iter().zip(&scales).map(|(v, c)| v.iter().map(|x| x * c).collect()).collect()).unwrap();
            let opts = ClosureOptions { budget: ClosureBudget { batch_size: 50, stable_batches: 20 }, ..ClosureOptions::with_seed(seed) };
            let s1 = sublattice_closure(&a, &opts).unwrap();
            let s2 = sublattice_closure(&scaled, &opts).unwrap();
            prop_assert!(s1.equal(&s2, 1e-7).unwrap());
        }

        #[test]
        fn random_pairs_match_brute_force(seed in 0u64..1000) {
            let a = random_positive(seed, 2, 6);
            let brute = brute_force_pair_span(&a, LeakyPhi::RELU, 101);
            let s = phi_span(&a, LeakyPhi::RELU, &ClosureOptions::with_seed(seed)).unwrap();
            prop_assert!(s.equal(&brute, 1e-7).unwrap());
        }

        #[test]
        fn dominated_chain_is_monotone(seed in 0u64..100) {
            let g = Arc::new(Grid::make_box(&[(-2.0, 2.0)], 41).unwrap());
            let f = SampledFunction::from_fn(g, |x| (-x[0] * x[0]).exp());
            let steps = dominated_approx(&f, &dominated_opts(vec![5, 10, 20], seed, 1e-8)).unwrap();
            let mut prev = vec![0.0; f.len()];
            for step in &steps {
                for ((&p, &e), &t) in prev.iter().zip(step.approx.values()).zip(f.values()) {
                    prop_assert!(0.0 <= p && p <= e && e <= t);
                }
                let gap = f.values().iter().zip(step.approx.values()).map(|(a, b)| a - b).fold(0.0, f64::max);
                prop_assert!(gap <= 2.0 * step.epsilon + 1e-15);
                prev = step.approx.values().to_vec();
            }
        }
    }
}
