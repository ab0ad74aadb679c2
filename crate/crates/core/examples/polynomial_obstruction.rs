//! A polynomial activation cannot beat the polynomial baseline of its own
//! degree, and its dictionary has annihilators whose low moments vanish.
//!
//!     cargo run --release --example polynomial_obstruction

use std::sync::Arc;

use uat::approximator::{annihilator_probe, build_dictionary, fit, polynomial_baseline, sample_affine_maps, SamplingScheme};
use uat::{Activation, Grid, SampledFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Arc::new(Grid::make_box(&[(-1.0, 1.0)], 201)?);
    let cube = SampledFunction::from_fn(grid.clone(), |x| x[0].powi(3));
    let baseline = polynomial_baseline(&cube, 2)?;
    println!("degree-2 baseline on t^3: sup {:.6e}", baseline.fit.sup_error);
    for width in [5, 50, 500] {
        let maps = sample_affine_maps(&grid, width, 1, SamplingScheme::Gaussian)?;
        let r = fit(&build_dictionary(&Activation::Monomial(2), &maps, &grid)?, &cube, 0.0)?;
        let relu = fit(&build_dictionary(&Activation::Relu, &maps, &grid)?, &cube, 0.0)?;
        println!("width {width:>3}: monomial(2) sup {:.6e}   relu sup {:.3e}", r.sup_error, relu.sup_error);
    }

    let five = Arc::new(Grid::make_box(&[(-2.0, 2.0)], 5)?);
    for phi in [Activation::Monomial(3), Activation::Relu] {
        let maps = sample_affine_maps(&five, 50, 3, SamplingScheme::Gaussian)?;
        let report = annihilator_probe(&build_dictionary(&phi, &maps, &five)?, 4, 1e-8)?;
        println!("\n{phi}: {} annihilator(s)", report.annihilator_basis.dim());
        for (nu, moments) in report.annihilator_basis.basis().iter().zip(&report.moments) {
            let scale = nu[0];
            let normalised: Vec<String> = nu.iter().map(|v| format!("{:.3}", v / scale)).collect();
            println!("  nu ~ [{}]", normalised.join(", "));
            println!("  moments {}", moments.iter().map(|m| format!("{m:.1e}")).collect::<Vec<_>>().join(" "));
        }
    }
    Ok(())
}
