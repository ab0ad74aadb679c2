//! On a cube grid, g = (min(u, v) - w)+ of the coordinate projections is a
//! finite combination of Φ-images of span{u, v, w}.
//!
//!     cargo run --release --example huijsmans

use std::time::Instant;

use uat::lattice::{huijsmans_grid_check, ClosureOptions};
use uat::LeakyPhi;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in [3, 4, 5, 6] {
        let start = Instant::now();
        let r = huijsmans_grid_check(n, LeakyPhi::RELU, 1e-7, &ClosureOptions::with_seed(6))?;
        println!(
            "{n} per axis: {} points, phi_dim {}, vlt_dim {}, g in span: {} ({:.2?})",
            r.grid_points,
            r.phi_dim,
            r.vlt_dim,
            r.g_in_phi_span,
            start.elapsed()
        );
    }
    Ok(())
}
