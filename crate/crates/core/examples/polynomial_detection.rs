//! Finite-difference degree detection for activations, and for vector maps
//! restricted to random lines.
//!
//!     cargo run --release --example polynomial_detection

use uat::activations::{detect_polynomial_degree, polynomial_along_lines, FnMap, LineProbe};
use uat::Activation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for spec in ["relu", "sigmoid", "tanh", "exp", "monomial:3", "poly:1,0,-2", "leaky:1:0.25"] {
        let phi: Activation = spec.parse()?;
        let degree = detect_polynomial_degree(&phi, (-1.0, 1.0), 8, 1e-7)?;
        match degree {
            Some(d) => println!("{spec:<14} polynomial of degree {d}"),
            None => println!("{spec:<14} no degree <= 8"),
        }
    }

    let probe = LineProbe { seed: 7, ..LineProbe::default() };
    let positive = FnMap::new(2, 2, |x: &[f64]| Ok(x.iter().map(|t| t.max(0.0)).collect()));
    let bilinear = FnMap::new(2, 1, |x: &[f64]| Ok(vec![x[0] * x[1] - x[0]]));
    let cubic = FnMap::new(3, 2, |x: &[f64]| Ok(vec![x[0] * x[1] * x[2], x[2] + 1.0]));
    for (name, map) in [("positive part", &positive as &dyn uat::activations::VectorMap), ("bilinear", &bilinear), ("cubic", &cubic)] {
        let r = polynomial_along_lines(map, &probe)?;
        println!("{name:<14} bounded={} max degree {:?}", r.is_polynomial_bounded, r.max_observed_degree);
    }
    Ok(())
}
