//! One paired session with both schemes on the same traces.
//!
//! Run with `cargo run --release --example session -- [config.txt]`.

use std::time::Instant;

use std::path::Path;

use v2vkey::harness::{simulate_session, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(Path::new(&path))?,
        None => ExperimentConfig::default(),
    };
    let t0 = Instant::now();
    let outcome = simulate_session(&cfg, 0)?;
    println!(
        "sigma2 = {}, f_P = {:.0} Hz, {:.0} s simulated, {:.1} s wall clock",
        outcome.sigma2,
        outcome.f_p,
        outcome.simulated_seconds,
        t0.elapsed().as_secs_f64()
    );
    for run in &outcome.runs {
        println!(
            "{:>9}: raw BMR {:.4}, BMR {:.4}, entropy {:.3}, p_hat {:?}, blocks {}/{}",
            run.scheme.name(),
            run.raw_bmr,
            run.bmr,
            run.entropy_mean,
            run.p_hat,
            run.blocks_verified,
            run.blocks_attempted
        );
    }
    for key_len in [128, 256, 512] {
        for r in outcome.reports(key_len) {
            println!(
                "{:>9} {key_len}-bit keys: {:.2} keys/min, secret bit rate {:.1} bit/s, leaked {}",
                r.scheme.name(),
                r.kgr_keys_per_min,
                r.secret_bit_rate,
                r.leaked_bits_total
            );
        }
    }
    Ok(())
}
