//! Turbo code BER against BSC crossover probability for a few iteration counts.
//!
//! Run with `cargo run --release --example turbo_codec`.

use v2vkey::harness::turbo_ber;
use v2vkey::turbo::{Puncture, TurboCodec, TurboConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for iterations in [1, 4, 8] {
        let codec = TurboCodec::new(TurboConfig { block_len: 512, iterations, puncture: Puncture::None, ..Default::default() })?;
        for p in [0.05, 0.1, 0.15] {
            let pt = turbo_ber(&codec, p, 50, 1)?;
            println!(
                "{iterations} iterations, p = {p:.2}: BER {:.2e}, FER {:.2}, mean iterations {:.1}",
                pt.ber, pt.fer, pt.mean_iterations
            );
        }
    }
    Ok(())
}
