//! Dual-threshold excursion indexing against single-threshold quantization.
//!
//! Run with `cargo run --release --example excursion_indexing`.

use num_complex::Complex64;
use v2vkey::channel::{self, V2VChannelParams};
use v2vkey::metrics::{empirical_entropy, measure_bmr};
use v2vkey::quantize::{compute_thresholds, index_reconcile, quantize_lossless, ThresholdMode};
use v2vkey::reciprocity::{derive_alice_trace, NonReciprocityModel};
use v2vkey::rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bob = channel::realize(&V2VChannelParams { n_samples: 50_000, ..Default::default() }, 11)?.trace;
    let env_b = channel::envelope(&bob);
    for sigma2 in [1e-3, 1e-2, 1e-1] {
        let model = NonReciprocityModel { sigma2_true: sigma2, mu_true: Complex64::new(0.0, 0.0), snr_db: None };
        let alice = derive_alice_trace(&bob, &model, &mut rng::stream(11, &[rng::label::NON_RECIPROCITY]))?;
        let env_a = channel::envelope(&alice);

        let dual_a = compute_thresholds(&env_a, 0.35, ThresholdMode::DualLossy)?;
        let dual_b = compute_thresholds(&env_b, 0.35, ThresholdMode::DualLossy)?;
        let mut r = rng::stream(11, &[rng::label::SEGMENT_SELECTION]);
        let out = index_reconcile(&env_a, &env_b, &dual_a, &dual_b, 5, 1.0, &mut r)?;

        let single_a = quantize_lossless(&env_a, &compute_thresholds(&env_a, 0.0, ThresholdMode::SingleLossless)?)?;
        let single_b = quantize_lossless(&env_b, &compute_thresholds(&env_b, 0.0, ThresholdMode::SingleLossless)?)?;
        println!(
            "sigma2 {sigma2:.0e}: indexing {} bits, BMR {:.4}, discarded {}; median threshold BMR {:.4}, entropy {:.3}",
            out.bits_a.len(),
            measure_bmr(&out.bits_a, &out.bits_b)?,
            out.discarded,
            measure_bmr(&single_a, &single_b)?,
            empirical_entropy(&single_a, 64)?.mean
        );
    }
    Ok(())
}
