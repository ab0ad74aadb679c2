//! Vector-valued fits in tensor and map mode, and positively homogeneous
//! fits on the circle.
//!
//!     cargo run --release --example vector_and_homogeneous

use std::sync::Arc;

use uat::approximator::{ph_fit, vector_fit, VectorMode};
use uat::{Activation, Grid, LeakyPhi, SampledFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let line = Arc::new(Grid::make_box(&[(-2.0, 2.0)], 201)?);
    let curve = SampledFunction::from_vector_fn(line, 2, |x| vec![x[0].cos(), x[0].sin()])?;
    for (name, mode) in [("tensor", VectorMode::Tensor(Activation::Relu)), ("map", VectorMode::Map(LeakyPhi::RELU))] {
        for width in [20, 100, 400] {
            let r = vector_fit(&mode, &curve, width, 5, 1e-8)?;
            println!("{name:<6} width {width:>3}: sup {:.3e}", r.sup_error);
        }
    }

    let circle = Arc::new(Grid::make_sphere(2, 200, 11)?);
    type Target = fn(&[f64]) -> f64;
    let targets: [(&str, Target); 3] = [
        ("norm", |x| x.iter().map(|t| t * t).sum::<f64>().sqrt()),
        ("max(x1, x2)", |x| x[0].max(x[1])),
        ("|x1 x2|^(1/2)", |x| (x[0] * x[1]).abs().sqrt()),
    ];
    for (name, f) in targets {
        let target = SampledFunction::from_fn(circle.clone(), f);
        let r = ph_fit(LeakyPhi::RELU, &target, 100, 9, 1e-8)?;
        println!("ph {name:<14} width 100: sup {:.3e}", r.sup_error);
    }
    Ok(())
}
