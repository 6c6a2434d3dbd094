//! Runs an experiment config in process and prints the job table.
//! Usage: cargo run --example runner -- configs/torus_duality.json

use modwedge::runner::{run_config, ExperimentConfig};
use std::path::Path;

fn main() -> modwedge::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/torus_duality.json".into());
    let text = std::fs::read_to_string(&path)?;
    let config = ExperimentConfig::from_json(&text)?;
    let out = std::env::temp_dir().join("modwedge-example-runner");
    let outcome = run_config(&config, Some(2), Path::new(&out))?;
    for r in &outcome.records {
        println!("{:<28} value={:.12} converged={} checks={}", r.job, r.value, r.converged, r.checks.len());
    }
    println!("exit code {} reports in {}", outcome.exit_code, outcome.out_dir.display());
    Ok(())
}
