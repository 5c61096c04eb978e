//! Alice's view of the channel and non-reciprocity compensation.
//!
//! Alice's gain differs from Bob's by a complex offset plus circular
//! Gaussian discrepancy. The offset is estimated on a calibration window of
//! probe pairs and subtracted from Alice's trace before quantization.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelTrace;
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonReciprocityModel {
    /// Total variance of the circular complex discrepancy.
    pub sigma2_true: f64,
    /// Systematic complex offset between the two views.
    pub mu_true: Complex64,
    /// Measurement SNR in dB relative to the channel power, applied
    /// independently to each party. `None` disables measurement noise.
    pub snr_db: Option<f64>,
}

impl Default for NonReciprocityModel {
    fn default() -> Self {
        Self {
            sigma2_true: 0.0,
            mu_true: Complex64::new(0.0, 0.0),
            snr_db: None,
        }
    }
}

impl NonReciprocityModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2_true >= 0.0) {
            return Err(Error::invalid("sigma2_true must be non-negative"));
        }
        Ok(())
    }
}

/// Offset and spread of `G_A - G_B` over `probes` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyEstimate {
    pub mu_hat: Complex64,
    pub sigma2_hat: f64,
    pub probes: usize,
}

fn circular_gaussian(variance: f64, rng: &mut SimRng) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Adds circular Gaussian noise at `snr_db` below `reference_power`.
pub fn add_measurement_noise(
    trace: &ChannelTrace,
    snr_db: f64,
    reference_power: f64,
    rng: &mut SimRng,
) -> ChannelTrace {
    let variance = reference_power / 10f64.powf(snr_db / 10.0);
    trace.with_samples(
        trace
            .samples
            .iter()
            .map(|&s| s + circular_gaussian(variance, rng))
            .collect(),
    )
}

/// `alice[k] = bob[k] + mu + d[k] (+ n_A[k])`.
///
/// Discrepancy and measurement noise are drawn per sample in that order, so
/// a fixed stream gives an identical trace.
pub fn derive_alice_trace(
    bob: &ChannelTrace,
    model: &NonReciprocityModel,
    rng: &mut SimRng,
) -> Result<ChannelTrace> {
    if bob.is_empty() {
        return Err(Error::EmptyInput);
    }
    model.validate()?;
    let noise_var = model
        .snr_db
        .map(|snr| bob.mean_power() / 10f64.powf(snr / 10.0));
    let samples = bob
        .samples
        .iter()
        .map(|&g| {
            let mut a = g + model.mu_true;
            if model.sigma2_true > 0.0 {
                a += circular_gaussian(model.sigma2_true, rng);
            }
            if let Some(v) = noise_var {
                a += circular_gaussian(v, rng);
            }
            a
        })
        .collect();
    Ok(bob.with_samples(samples))
}

/// Sample mean and (biased) variance of the complex differences.
pub fn estimate_discrepancy(alice: &[Complex64], bob: &[Complex64]) -> Result<DiscrepancyEstimate> {
    Error::check_len(alice.len(), bob.len())?;
    if alice.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = alice.len() as f64;
    let diffs = alice.iter().zip(bob).map(|(a, b)| a - b);
    let mu_hat = diffs.clone().sum::<Complex64>() / m;
    let sigma2_hat = diffs.map(|d| (d - mu_hat).norm_sqr()).sum::<f64>() / m;
    Ok(DiscrepancyEstimate {
        mu_hat,
        sigma2_hat,
        probes: alice.len(),
    })
}

/// Removes the estimated offset from Alice's trace. The spread is left in
/// place; it is noise, not bias.
pub fn compensate(alice: &ChannelTrace, est: &DiscrepancyEstimate) -> ChannelTrace {
    alice.with_samples(alice.samples.iter().map(|&a| a - est.mu_hat).collect())
}
