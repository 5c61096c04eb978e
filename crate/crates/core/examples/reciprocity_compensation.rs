//! Estimate and remove the hardware offset between Alice and Bob.
//!
//! Run with `cargo run --release --example reciprocity_compensation`.

use num_complex::Complex64;
use v2vkey::channel::{self, V2VChannelParams};
use v2vkey::reciprocity::{compensate, derive_alice_trace, estimate_discrepancy, NonReciprocityModel};
use v2vkey::rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bob = channel::realize(&V2VChannelParams { n_samples: 20_000, ..Default::default() }, 3)?.trace;
    let model = NonReciprocityModel {
        sigma2_true: 0.01,
        mu_true: Complex64::from_polar(3.0, 0.7),
        snr_db: None,
    };
    let alice = derive_alice_trace(&bob, &model, &mut rng::stream(3, &[rng::label::NON_RECIPROCITY]))?;
    for probes in [64, 256, 4096] {
        let est = estimate_discrepancy(&alice.samples[..probes], &bob.samples[..probes])?;
        println!(
            "{probes:>5} probes: mu_hat {:.4}{:+.4}i, sigma2_hat {:.5}",
            est.mu_hat.re, est.mu_hat.im, est.sigma2_hat
        );
    }
    let est = estimate_discrepancy(&alice.samples[..256], &bob.samples[..256])?;
    let fixed = compensate(&alice, &est);
    let gap = |a: &[Complex64]| a.iter().zip(&bob.samples).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() / a.len() as f64;
    println!("mean |alice - bob|^2: raw {:.4}, compensated {:.4}", gap(&alice.samples), gap(&fixed.samples));
    Ok(())
}
