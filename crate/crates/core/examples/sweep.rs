//! Short sweep over the non-reciprocity grid, written as CSV and compared.
//!
//! Run with `cargo run --release --example sweep -- [out.csv]`.

use std::path::PathBuf;

use v2vkey::harness::{emit_comparison, read_rows, run_sweep, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweep_example.csv".into()));
    let cfg = ExperimentConfig { trials: 1, simulated_minutes: 1.0, ..Default::default() };
    run_sweep(&cfg, &out)?;
    let rows = read_rows(&out)?;
    println!("{} rows written to {}", rows.len(), out.display());
    print!("{}", emit_comparison(&rows)?.to_text());
    Ok(())
}
