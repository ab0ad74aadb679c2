//! Drives the experiment harness from an in-memory JSON config, the same
//! path `uat run` takes, and renders the error plot.
//!
//!     cargo run --release --example experiment_config

use uat::harness::{run_config, ExperimentConfig, RunContext};

const CONFIG: &str = r#"{
  "kind": "fit",
  "name": "density",
  "activation": ["relu", "sigmoid"],
  "target": "cos3",
  "grid": "-3:3:301",
  "widths": [10, 50, 200],
  "seed": 2024,
  "out": "density.csv",
  "plot": "density.svg",
  "expect_non_increasing": true,
  "expect_sup_below": 0.02
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    let dir = std::env::temp_dir().join("uat-example");
    let ctx = RunContext { check: true, ..RunContext::in_dir(&dir) };
    let outcome = run_config(&cfg, &ctx)?;
    print!("{}", outcome.table.to_csv());
    for path in outcome.outputs {
        println!("wrote {}", dir.join(path).display());
    }
    Ok(())
}
