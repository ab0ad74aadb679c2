//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uat::activations::{polynomial_along_lines, FnMap, LineProbe};
use uat::approximator::{
    annihilator_probe, build_dictionary, fit, polynomial_baseline, sample_affine_maps, vector_fit, AffineMap,
    SamplingScheme, VectorMode,
};
use uat::grids::sup_distance;
use uat::harness;
use uat::lattice::{
    check_generation_formula, dominated_approx, huijsmans_grid_check, phi_span, spanning_construct, ClosureOptions,
    DominatedOptions,
};
use uat::subspaces::DEFAULT_RANK_TOL;
use uat::{Activation, GeneratorSet, Grid, LatticeExpr, LeakyPhi, SampledFunction, Subspace};

fn report(n: usize, pass: bool, elapsed: Duration, limit: Duration, detail: String) {
    let pass = pass && elapsed < limit;
    println!(
        "criterion {n}: {} ({:.2}s, limit {}s) {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

fn line(lo: f64, hi: f64, n: usize) -> Arc<Grid> {
    Arc::new(Grid::make_box(&[(lo, hi)], n).unwrap())
}

fn positive_set(rng: &mut ChaCha8Rng, count: usize, d: usize) -> GeneratorSet {
    GeneratorSet::new((0..count).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect()).unwrap()
}

/// Least-squares residual onto `1, t, t²` by modified Gram-Schmidt on the
/// sampled monomials.
fn quadratic_projection_sup_error(ts: &[f64], y: &[f64]) -> f64 {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in 0..3 {
        let mut v: Vec<f64> = ts.iter().map(|t| t.powi(p)).collect();
        for q in &basis {
            let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        basis.push(v.into_iter().map(|a| a / n).collect());
    }
    let mut r = y.to_vec();
    for q in &basis {
        let c: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
        r.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
    }
    r.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn criterion_01_polynomial_obstruction() {
    let start = Instant::now();
    let g = line(-1.0, 1.0, 201);
    let target = SampledFunction::from_fn(g.clone(), |x| x[0].powi(3));
    let mut maps = sample_affine_maps(&g, 20, 1, SamplingScheme::Gaussian).unwrap();
    maps.extend((0..10).map(|j| AffineMap::new(vec![1.0], -0.9 + 0.2 * j as f64).unwrap()));
    let d = build_dictionary(&Activation::Monomial(2), &maps, &g).unwrap();
    let fitted = fit(&d, &target, 0.0).unwrap();
    let baseline = polynomial_baseline(&target, 2).unwrap().fit.sup_error;
    let ts: Vec<f64> = g.points().map(|p| p[0]).collect();
    let oracle = quadratic_projection_sup_error(&ts, target.values());
    let gap = (fitted.sup_error - baseline).abs();
    let pass = gap <= 1e-8 && (baseline - oracle).abs() <= 1e-10;
    report(
        1,
        pass,
        start.elapsed(),
        Duration::from_secs(1),
        format!("fit {:.6e} baseline {:.6e} oracle {:.6e} gap {gap:.1e}", fitted.sup_error, baseline, oracle),
    );
}

#[test]
fn criterion_02_density_trend() {
    let start = Instant::now();
    let g = line(-3.0, 3.0, 301);
    let target = SampledFunction::from_fn(g.clone(), |x| (3.0 * x[0]).cos());
    let mut pass = true;
    let mut detail = String::new();
    for phi in [Activation::Relu, Activation::Sigmoid] {
        let errors: Vec<f64> = [10, 50, 200]
            .iter()
            .map(|&w| {
                let maps = sample_affine_maps(&g, w, 2024, SamplingScheme::Gaussian).unwrap();
                fit(&build_dictionary(&phi, &maps, &g).unwrap(), &target, 1e-8).unwrap().sup_error
            })
            .collect();
        pass &= errors.windows(2).all(|w| w[1] <= w[0]) && errors[2] < 0.02;
        detail += &format!("{phi}: {errors:.3?} ");
    }
    report(2, pass, start.elapsed(), Duration::from_secs(10), detail);
}

#[test]
fn criterion_03_annihilator_moments() {
    let start = Instant::now();
    let g = Arc::new(Grid::from_points(vec![vec![-2.0], vec![-1.0], vec![0.0], vec![1.0], vec![2.0]]).unwrap());
    let maps = sample_affine_maps(&g, 50, 3, SamplingScheme::Gaussian).unwrap();
    let d = build_dictionary(&Activation::Monomial(3), &maps, &g).unwrap();
    let r = annihilator_probe(&d, 4, 1e-8).unwrap();
    // oracle: fourth differences annihilate every cubic
    let expect = [1.0, -4.0, 6.0, -4.0, 1.0];
    let mut pass = r.annihilator_basis.dim() == 1;
    let mut detail = format!("dim {}", r.annihilator_basis.dim());
    if pass {
        let nu = &r.annihilator_basis.basis()[0];
        let scale = nu[0] / expect[0];
        let mismatch = nu.iter().zip(expect).fold(0.0f64, |m, (a, b)| m.max((a - scale * b).abs()));
        let low = r.moments[0][..4].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let fourth = r.moments[0][4].abs();
        pass = mismatch <= 1e-8 && low < 1e-8 && fourth > 1e-3;
        detail += &format!(" mismatch {mismatch:.1e} low moments {low:.1e} moment 4 {fourth:.3e}");
    }
    report(3, pass, start.elapsed(), Duration::from_secs(1), detail);
}

/// `span{(r u + s v)⁺}` over a 101×101 coefficient grid on `[−1,1]²`.
fn brute_force_span(a: &GeneratorSet, phi: LeakyPhi) -> Subspace {
    let steps = 101;
    let level = |i: usize| -1.0 + 2.0 * i as f64 / (steps - 1) as f64;
    let vectors: Vec<Vec<f64>> = (0..steps * steps)
        .map(|k| {
            let (r, s) = (level(k / steps), level(k % steps));
            let u = a.vectors()[0].entries();
            let v = a.vectors()[1].entries();
            u.iter().zip(v).map(|(x, y)| phi.scalar(r * x + s * y)).collect()
        })
        .collect();
    Subspace::span_of(a.dim(), &vectors, DEFAULT_RANK_TOL).unwrap()
}

#[test]
fn criterion_04_generation_formula_pairs() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    for trial in 0..100u64 {
        let a = positive_set(&mut rng, 2, 8);
        let opts = ClosureOptions::with_seed(trial);
        let check = check_generation_formula(&a, LeakyPhi::RELU, 1e-7, &opts).unwrap();
        let sampled = phi_span(&a, LeakyPhi::RELU, &opts).unwrap();
        if !check.equal || !sampled.equal(&brute_force_span(&a, LeakyPhi::RELU), 1e-7).unwrap() {
            failures.push(trial);
        }
    }
    let pass = failures.is_empty();
    report(4, pass, start.elapsed(), Duration::from_secs(30), format!("100 pairs in R^8, failing trials {failures:?}"));
}

#[test]
fn criterion_05_generation_formula_triples() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    for trial in 0..50u64 {
        let a = positive_set(&mut rng, 3, 10);
        let check = check_generation_formula(&a, LeakyPhi::RELU, 1e-7, &ClosureOptions::with_seed(trial)).unwrap();
        if !check.equal {
            failures.push(trial);
        }
    }
    let pass = failures.is_empty();
    report(5, pass, start.elapsed(), Duration::from_secs(60), format!("50 triples in R^10, failing trials {failures:?}"));
}

#[test]
fn criterion_06_huijsmans_grid() {
    let start = Instant::now();
    let r = huijsmans_grid_check(6, LeakyPhi::RELU, 1e-7, &ClosureOptions::with_seed(6)).unwrap();
    report(
        6,
        r.g_in_phi_span,
        start.elapsed(),
        Duration::from_secs(60),
        format!("grid points {} phi_dim {} vlt_dim {}", r.grid_points, r.phi_dim, r.vlt_dim),
    );
}

#[test]
fn criterion_07_polynomial_along_lines() {
    let start = Instant::now();
    let probe = LineProbe { seed: 7, ..LineProbe::default() };
    let positive_part = FnMap::new(2, 2, |x: &[f64]| Ok(x.iter().map(|t| t.max(0.0)).collect()));
    let relu = polynomial_along_lines(&positive_part, &probe).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let mut coeffs = [0.0; 3];
    coeffs.iter_mut().for_each(|c| *c = rng.random_range(0.5..2.0));
    let bilinear = FnMap::new(2, 2, move |x: &[f64]| Ok(vec![coeffs[0] * x[0] * x[1], coeffs[1] * x[0] - coeffs[2] * x[1]]));
    let bi = polynomial_along_lines(&bilinear, &probe).unwrap();

    let affine = FnMap::new(2, 3, |x: &[f64]| Ok(vec![x[0] + 2.0 * x[1] - 1.0, 0.5 * x[0], 3.0 - x[1]]));
    let af = polynomial_along_lines(&affine, &probe).unwrap();

    let pass = !relu.is_polynomial_bounded
        && bi.is_polynomial_bounded
        && bi.max_observed_degree == Some(2)
        && af.is_polynomial_bounded
        && af.max_observed_degree.is_some_and(|d| d <= 1);
    report(
        7,
        pass,
        start.elapsed(),
        Duration::from_secs(5),
        format!(
            "positive part bounded={} bilinear degree {:?} affine degree {:?}",
            relu.is_polynomial_bounded, bi.max_observed_degree, af.max_observed_degree
        ),
    );
}

#[test]
fn criterion_08_spanning_constructor() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = positive_set(&mut rng, 2, 50);
    assert!(a.sum().iter().all(|&e| e > 0.0));
    let h = LatticeExpr::gen(0).meet(LatticeExpr::gen(1));
    let (r, met) = spanning_construct(&a, &h, LeakyPhi::RELU, 0.05, 200, 8).unwrap();
    let span = phi_span(&a, LeakyPhi::RELU, &ClosureOptions::with_seed(8)).unwrap();
    let member = span.contains(r.output.entries(), 1e-7).unwrap();
    // oracle for the e-norm error: direct coordinate loop
    let e = a.sum();
    let u = a.vectors()[0].entries();
    let v = a.vectors()[1].entries();
    let direct = (0..50).fold(0.0f64, |m, x| m.max((r.output[x] - u[x].min(v[x])).abs() / e[x]));
    let pass = met && r.achieved_sup_error < 0.05 && member && (direct - r.achieved_sup_error).abs() < 1e-12;
    report(
        8,
        pass,
        start.elapsed(),
        Duration::from_secs(10),
        format!("e-norm error {:.3e} phi_dim {} member {member}", r.achieved_sup_error, span.dim()),
    );
}

#[test]
fn criterion_09_dominated_approximation() {
    let start = Instant::now();
    let g = Arc::new(Grid::make_box(&[(-2.0, 2.0), (-2.0, 2.0)], 41).unwrap());
    let f = SampledFunction::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
    let opts = DominatedOptions { steps: 3, widths: vec![50, 200, 800], seed: 9, ridge: 1e-8 };
    let steps = dominated_approx(&f, &opts).unwrap();
    let mut chain = true;
    let mut prev = vec![0.0; f.len()];
    for s in &steps {
        for ((&p, &e), &t) in prev.iter().zip(s.approx.values()).zip(f.values()) {
            chain &= 0.0 <= p && p <= e && e <= t;
        }
        prev = s.approx.values().to_vec();
    }
    let gap = sup_distance(&f, &steps[2].approx).unwrap();
    let eps: Vec<f64> = steps.iter().map(|s| s.epsilon).collect();
    report(
        9,
        chain && gap < 0.1,
        start.elapsed(),
        Duration::from_secs(30),
        format!("chain {chain} sup(f - e3) {gap:.3e} eps {eps:.3?}"),
    );
}

#[test]
fn criterion_10_vector_density() {
    let start = Instant::now();
    let g = line(-2.0, 2.0, 201);
    let target = SampledFunction::from_vector_fn(g, 2, |x| vec![x[0].cos(), x[0].sin()]).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for (label, mode) in [("tensor", VectorMode::Tensor(Activation::Relu)), ("map", VectorMode::Map(LeakyPhi::RELU))] {
        let errors: Vec<f64> =
            [20, 100, 400].iter().map(|&w| vector_fit(&mode, &target, w, 5, 1e-8).unwrap().sup_error).collect();
        pass &= errors.windows(2).all(|w| w[1] <= w[0]) && errors[2] < 0.05;
        detail += &format!("{label}: {errors:.3?} ");
    }
    report(10, pass, start.elapsed(), Duration::from_secs(20), detail);
}

#[test]
fn criterion_11_positively_homogeneous() {
    let start = Instant::now();
    let sphere = Arc::new(Grid::make_sphere(2, 200, 11).unwrap());
    let target = SampledFunction::from_fn(sphere, |x| x.iter().map(|t| t * t).sum::<f64>().sqrt());
    let r = uat::approximator::ph_fit(LeakyPhi::RELU, &target, 100, 9, 1e-8).unwrap();
    report(11, r.sup_error < 0.02, start.elapsed(), Duration::from_secs(5), format!("sup_error {:.3e}", r.sup_error));
}

#[test]
fn criterion_12_manifest_determinism() {
    let start = Instant::now();
    let manifest = concat!(env!("CARGO_MANIFEST_DIR"), "/manifests/acceptance.json");
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let a = harness::run_manifest(manifest.as_ref(), first.path(), true, None).unwrap();
    let b = harness::run_manifest(manifest.as_ref(), second.path(), true, None).unwrap();
    let mut pass = a.all_passed() && b.all_passed() && !a.outputs.is_empty();
    let mut compared = 0;
    for rel in &a.outputs {
        let x = std::fs::read(first.path().join(rel)).unwrap();
        let y = std::fs::read(second.path().join(rel)).unwrap();
        pass &= x == y;
        compared += 1;
    }
    report(
        12,
        pass,
        start.elapsed(),
        Duration::from_secs(300),
        format!("{compared} output files compared, failed configs {:?}", a.failed()),
    );
}
