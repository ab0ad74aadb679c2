//! Sup error of random ReLU / sigmoid dictionaries on cos(3t) as the width
//! grows.
//!
//!     cargo run --release --example density

use std::sync::Arc;

use uat::approximator::{build_dictionary, fit, holdout_sup_error, sample_affine_maps, SamplingScheme};
use uat::{Activation, Grid, SampledFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Arc::new(Grid::make_box(&[(-3.0, 3.0)], 301)?);
    let fine = Arc::new(Grid::make_box(&[(-3.0, 3.0)], 601)?);
    let target = SampledFunction::from_fn(grid.clone(), |x| (3.0 * x[0]).cos());
    let holdout = SampledFunction::from_fn(fine, |x| (3.0 * x[0]).cos());

    println!("{:<8} {:>6} {:>12} {:>12}", "phi", "width", "sup", "holdout");
    for phi in [Activation::Relu, Activation::Sigmoid, Activation::Tanh] {
        for width in [10, 25, 50, 100, 200, 400] {
            let maps = sample_affine_maps(&grid, width, 2024, SamplingScheme::Gaussian)?;
            let d = build_dictionary(&phi, &maps, &grid)?;
            let r = fit(&d, &target, 1e-8)?;
            let h = holdout_sup_error(&d, &r.coefficients, &holdout)?;
            println!("{:<8} {:>6} {:>12.3e} {:>12.3e}", phi.to_string(), width, r.sup_error, h);
        }
    }
    Ok(())
}
