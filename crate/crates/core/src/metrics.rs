//! Key-generation metrics: entropy, extraction rate, mismatch probabilities
//! and per-session rates.

use std::fmt;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Binary entropy `H(p0)` in bits, with `0 log 0 = 0`.
pub fn entropy_per_bit(p0: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::invalid("p0 must be in [0, 1]"));
    }
    if p0 == 0.0 || p0 == 1.0 {
        return Ok(0.0);
    }
    // 1 - p0 is exact for p0 >= 0.5; ln_1p keeps the small terms accurate.
    let p1 = 1.0 - p0;
    let nats = if p0 < 0.5 {
        -p0 * p0.ln() - p1 * (-p0).ln_1p()
    } else {
        -p0 * (-p1).ln_1p() - p1 * p1.ln()
    };
    Ok(nats / std::f64::consts::LN_2)
}

/// Windowed plug-in entropy estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate {
    pub per_window: Vec<f64>,
    pub mean: f64,
}

/// `H(p0_hat)` over disjoint windows of `window` bits; a trailing partial
/// window is ignored.
pub fn empirical_entropy(bits: &BitString, window: usize) -> Result<EntropyEstimate> {
    if window < 8 {
        return Err(Error::invalid("entropy window must be at least 8 bits"));
    }
    if bits.len() < window {
        return Err(Error::invalid(format!(
            "{} bits are fewer than one window of {window}",
            bits.len()
        )));
    }
    let per_window = bits
        .as_slice()
        .chunks_exact(window)
        .map(|w| {
            let zeros = w.iter().filter(|&&b| b == 0).count();
            entropy_per_bit(zeros as f64 / window as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = per_window.iter().sum::<f64>() / per_window.len() as f64;
    Ok(EntropyEstimate { per_window, mean })
}

/// `R = 2 f_P p_joint` bits per second.
pub fn secret_bit_rate(f_p: f64, p_joint: f64) -> f64 {
    2.0 * f_p * p_joint
}

/// Probability that at least one of `n` bits is wrong, `1 - (1 - p_e)^n`.
pub fn mismatch_prob(p_e: f64, n: u32) -> f64 {
    -(f64::from(n) * (-p_e).ln_1p()).exp_m1()
}

/// `P(b = 0 | a = 1)` estimated by frequency.
pub fn estimate_pe(a: &BitString, b: &BitString) -> Result<f64> {
    Error::check_len(a.len(), b.len())?;
    let ones = a.count_ones();
    if ones == 0 {
        return Err(Error::UndefinedConditional);
    }
    let errors = a.iter().zip(b.iter()).filter(|&(x, y)| x == 1 && y == 0).count();
    Ok(errors as f64 / ones as f64)
}

/// Fraction of positions that differ.
pub fn measure_bmr(a: &BitString, b: &BitString) -> Result<f64> {
    Error::check_len(a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(a.hamming(b) as f64 / a.len() as f64)
}

/// One key produced by a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyRecord {
    pub len: usize,
    pub verified: bool,
}

/// Verified keys of exactly `key_len` bits per simulated minute.
pub fn measure_kgr(keys: &[KeyRecord], key_len: usize, simulated_seconds: f64) -> Result<f64> {
    if !(simulated_seconds > 0.0) {
        return Err(Error::invalid("simulated time must be positive"));
    }
    let good = keys.iter().filter(|k| k.verified && k.len == key_len).count();
    Ok(good as f64 / (simulated_seconds / 60.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Indexing,
    TurboNR,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Indexing => "indexing",
            Scheme::TurboNR => "turbo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "indexing" => Some(Scheme::Indexing),
            "turbo" => Some(Scheme::TurboNR),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one simulated session for one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionReport {
    pub scheme: Scheme,
    pub key_len: usize,
    pub sigma2: f64,
    pub f_p_hz: f64,
    /// Mismatch of the material the scheme hands to key assembly: raw bits
    /// for indexing, decoded blocks for the turbo scheme.
    pub bmr: f64,
    /// Mismatch right after thresholding.
    pub raw_bmr: f64,
    pub kgr_keys_per_min: f64,
    pub entropy_per_bit_mean: f64,
    pub secret_bit_rate: f64,
    pub blocks_attempted: usize,
    pub blocks_verified: usize,
    pub leaked_bits_total: usize,
    pub keys: Vec<KeyRecord>,
    pub simulated_seconds: f64,
    pub config_fingerprint: u64,
    /// Digest of the Alice and Bob traces the session consumed.
    pub trace_digest: u64,
}
