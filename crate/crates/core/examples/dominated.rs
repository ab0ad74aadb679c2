//! Increasing approximations 0 <= e1 <= e2 <= ... <= f of a Gaussian bump.
//!
//!     cargo run --release --example dominated

use std::sync::Arc;

use uat::grids::sup_distance;
use uat::lattice::{dominated_approx, DominatedOptions};
use uat::{Grid, SampledFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Arc::new(Grid::make_box(&[(-2.0, 2.0), (-2.0, 2.0)], 41)?);
    let f = SampledFunction::from_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
    let opts = DominatedOptions { steps: 5, widths: vec![25, 50, 100, 200, 800], seed: 9, ridge: 1e-8 };
    for (n, step) in dominated_approx(&f, &opts)?.iter().enumerate() {
        println!(
            "step {} width {:>3}: fit error {:.3e}, sup(f - e) {:.3e}",
            n + 1,
            step.width,
            step.epsilon,
            sup_distance(&f, &step.approx)?
        );
    }
    Ok(())
}
