//! Generated sublattices of R^d against span Φ(span A), and what happens
//! without positivity.
//!
//!     cargo run --release --example sublattices

use rand::{Rng, SeedableRng};
use uat::lattice::{check_generation_formula, lattice_ops, phi_span, sublattice_closure, ClosureOptions};
use uat::{GeneratorSet, LatticeVector, LeakyPhi};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let u = LatticeVector::new(vec![1.0, -2.0, 0.5])?;
    let v = LatticeVector::new(vec![0.0, 1.0, 0.5])?;
    let ops = lattice_ops(&u, &v)?;
    println!("u v v = {:?}\nu ^ v = {:?}\n|u|   = {:?}\n", ops.join.entries(), ops.meet.entries(), ops.abs.entries());

    // u and v overlap on one coordinate, so their meet adds a direction
    let a = GeneratorSet::new(vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 1.0, 0.0]])?;
    let opts = ClosureOptions::default();
    println!("span A dim 2, vlt(A) dim {}", sublattice_closure(&a, &opts)?.dim());
    for phi in [LeakyPhi::RELU, LeakyPhi::ABS, LeakyPhi::new(1.0, 0.3)?] {
        let r = check_generation_formula(&a, phi, 1e-7, &opts)?;
        println!("phi (r={}, s={}): phi_dim {} equal {}", phi.r(), phi.s(), r.phi_dim, r.equal);
    }

    // with a sign change the plain span of A is not enough
    let signed = GeneratorSet::new(vec![vec![1.0, 1.0, 1.0], vec![1.0, -1.0, 0.0]])?;
    println!("\nsigned pair: |.|-span dim {}", phi_span(&signed, LeakyPhi::ABS, &opts)?.dim());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let profile: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
    // coordinates with equal ratios stay tied, capping the dimension
    let tied: Vec<f64> = profile.iter().map(|p| (p * 4.0f64).floor() / 4.0 + 0.1).collect();
    let b = GeneratorSet::new(vec![vec![1.0; 12], tied])?;
    let r = check_generation_formula(&b, LeakyPhi::RELU, 1e-7, &opts)?;
    println!("tied pair in R^12: vlt {} phi {} equal {}", r.vlt_dim, r.phi_dim, r.equal);
    Ok(())
}
