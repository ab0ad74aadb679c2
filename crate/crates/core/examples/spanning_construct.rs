//! Approximates lattice expressions of positive generators by finite
//! combinations of Φ(f) with f in span A.
//!
//!     cargo run --release --example spanning_construct

use rand::{Rng, SeedableRng};
use uat::lattice::spanning_construct;
use uat::{GeneratorSet, LatticeExpr, LeakyPhi};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let mut draw = |d: usize| (0..d).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f64>>();
    let a = GeneratorSet::new(vec![draw(60), draw(60), draw(60)])?;

    for expr in ["min(g0, g1)", "max(min(g0, g1), g2) - 0.5*g0", "min(min(g0, g1), g2)"] {
        let h: LatticeExpr = expr.parse()?;
        for width in [20, 80, 320] {
            let (r, met) = spanning_construct(&a, &h, LeakyPhi::new(1.0, 0.5)?, 0.05, width, 1)?;
            println!(
                "{expr:<32} width {width:>3}: e-norm error {:.3e}  sup {:.3e}  within 0.05: {met}",
                r.achieved_sup_error, r.plain_sup_error
            );
        }
    }
    Ok(())
}
