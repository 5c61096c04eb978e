//! One simulated key-generation session.
//!
//! A session synthesises the channel once, derives Alice's view, calibrates
//! on the first probes and then runs the selected schemes on the remaining
//! key region. Under `SchemeSelection::Both` the two branches consume the
//! same traces.

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, SchemeSelection};
use crate::bits::BitString;
use crate::channel::{self, ChannelTrace};
use crate::error::{Error, Result};
use crate::metrics::{self, KeyRecord, Scheme, SessionReport};
use crate::quantize::{self, ThresholdMode, ThresholdSchedule};
use crate::reciprocity::{self, DiscrepancyEstimate};
use crate::reconcile::{self, KeyMaterial, CHECK_BITS};
use crate::rng::{self, label};
use crate::turbo::{TurboCodec, TurboConfig};

/// Traces and calibration shared by both schemes.
#[derive(Debug, Clone)]
pub struct PreparedTraces {
    /// Bob's measured trace.
    pub bob: ChannelTrace,
    /// Alice's measured trace before compensation.
    pub alice_raw: ChannelTrace,
    pub alice_compensated: ChannelTrace,
    pub estimate: DiscrepancyEstimate,
    /// Probes at the start spent on calibration.
    pub calibration_len: usize,
    /// Threshold epochs, relative to the key region.
    pub epoch_starts: Vec<usize>,
    pub f_p: f64,
    pub digest: u64,
}

impl PreparedTraces {
    pub fn key_region_len(&self) -> usize {
        self.bob.len() - self.calibration_len
    }

    pub fn simulated_seconds(&self) -> f64 {
        self.bob.len() as f64 / self.f_p
    }
}

fn trace_pair_digest(a: &ChannelTrace, b: &ChannelTrace) -> u64 {
    let mut h = Sha256::new();
    h.update(a.digest().to_be_bytes());
    h.update(b.digest().to_be_bytes());
    u64::from_be_bytes(h.finalize()[..8].try_into().expect("sha256 is 32 bytes"))
}

/// Synthesises and calibrates the traces of session `trial`.
pub fn prepare(cfg: &ExperimentConfig, trial: u64) -> Result<PreparedTraces> {
    let bounds = channel::doppler_bounds(&cfg.channel)?;
    let n = (cfg.simulated_minutes * 60.0 * bounds.f_p).round() as usize;
    let calib = cfg.quant.calibration_len;
    if n <= calib + cfg.quant.refresh.estimation_window {
        return Err(Error::invalid("session too short for calibration and thresholds"));
    }
    let params = channel::V2VChannelParams { n_samples: n, ..cfg.channel };
    let seed = cfg.master_seed;
    let truth = channel::realize(&params, rng::derive_u64(seed, &[trial, label::CHANNEL]))?.trace;
    let alice_raw =
        reciprocity::derive_alice_trace(&truth, &cfg.nr_model, &mut rng::stream(seed, &[trial, label::NON_RECIPROCITY]))?;
    let bob = match cfg.nr_model.snr_db {
        Some(snr) => reciprocity::add_measurement_noise(
            &truth,
            snr,
            truth.mean_power(),
            &mut rng::stream(seed, &[trial, label::MEASUREMENT_BOB]),
        ),
        None => truth,
    };
    let estimate = reciprocity::estimate_discrepancy(&alice_raw.samples[..calib], &bob.samples[..calib])?;
    let alice_compensated = reciprocity::compensate(&alice_raw, &estimate);
    let epoch_starts = quantize::plan_epochs(
        &bob.samples[calib..],
        cfg.channel.samples_per_region(),
        &cfg.quant.refresh,
    )?;
    let digest = trace_pair_digest(&alice_raw, &bob);
    Ok(PreparedTraces {
        bob,
        alice_raw,
        alice_compensated,
        estimate,
        calibration_len: calib,
        epoch_starts,
        f_p: bounds.f_p,
        digest,
    })
}

/// Scheme-specific material from which keys of any length are assembled.
#[derive(Debug, Clone, PartialEq)]
pub enum KeyPool {
    /// Agreed indexing bits, unverified.
    Indexing { bits_a: BitString, bits_b: BitString },
    /// Privacy-amplified output of verified reconciliation blocks.
    Turbo { pool_a: BitString, pool_b: BitString },
}

/// Outcome of one scheme in a session, before key assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub raw_bmr: f64,
    pub bmr: f64,
    pub entropy_mean: f64,
    pub p_joint: f64,
    pub p_hat: Option<f64>,
    pub blocks_attempted: usize,
    pub blocks_verified: usize,
    pub leaked_bits: usize,
    pub pool: KeyPool,
}

/// Both scheme runs of one session plus the shared trace facts.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub trial: u64,
    pub sigma2: f64,
    pub f_p: f64,
    pub simulated_seconds: f64,
    pub trace_digest: u64,
    pub config_fingerprint: u64,
    pub master_seed: u64,
    pub runs: Vec<SchemeRun>,
}

fn bmr_or_nan(a: &BitString, b: &BitString) -> f64 {
    metrics::measure_bmr(a, b).unwrap_or(f64::NAN)
}

fn entropy_or_nan(bits: &BitString, window: usize) -> f64 {
    metrics::empirical_entropy(bits, window).map_or(f64::NAN, |e| e.mean)
}

fn joint_ones(a: &BitString, b: &BitString) -> usize {
    a.iter().zip(b.iter()).filter(|&(x, y)| x == 1 && y == 1).count()
}

fn envelope_region(trace: &ChannelTrace, from: usize) -> Vec<f64> {
    trace.samples[from..].iter().map(|z| z.norm()).collect()
}

fn run_indexing(cfg: &ExperimentConfig, t: &PreparedTraces, trial: u64) -> Result<SchemeRun> {
    let q = &cfg.quant;
    let alice = if q.indexing_compensated { &t.alice_compensated } else { &t.alice_raw };
    let env_a = envelope_region(alice, t.calibration_len);
    let env_b = envelope_region(&t.bob, t.calibration_len);
    let schedule = |env: &[f64]| {
        ThresholdSchedule::build(env, &t.epoch_starts, q.refresh.estimation_window, q.gamma, ThresholdMode::DualLossy)
    };
    let out = quantize::index_reconcile(
        &env_a,
        &env_b,
        &schedule(&env_a)?,
        &schedule(&env_b)?,
        q.m,
        q.fraction,
        &mut rng::stream(cfg.master_seed, &[trial, label::SEGMENT_SELECTION]),
    )?;
    let bmr = bmr_or_nan(&out.bits_a, &out.bits_b);
    Ok(SchemeRun {
        scheme: Scheme::Indexing,
        raw_bmr: bmr,
        bmr,
        entropy_mean: entropy_or_nan(&out.bits_b, q.entropy_window),
        p_joint: joint_ones(&out.bits_a, &out.bits_b) as f64 / t.key_region_len() as f64,
        p_hat: None,
        blocks_attempted: 0,
        blocks_verified: 0,
        leaked_bits: 0,
        pool: KeyPool::Indexing {
            bits_a: out.bits_a,
            bits_b: out.bits_b,
        },
    })
}

/// Crossover estimate from the calibration probes: Laplace-smoothed
/// single-threshold mismatch, clamped to a usable decoder prior.
fn calibration_p_hat(t: &PreparedTraces) -> Result<f64> {
    let c = t.calibration_len;
    let quantize_window = |trace: &ChannelTrace| -> Result<BitString> {
        let env: Vec<f64> = trace.samples[..c].iter().map(|z| z.norm()).collect();
        let th = quantize::compute_thresholds(&env, 0.0, ThresholdMode::SingleLossless)?;
        quantize::quantize_lossless(&env, &th)
    };
    let mismatches = quantize_window(&t.alice_compensated)?.hamming(&quantize_window(&t.bob)?);
    Ok(((mismatches as f64 + 1.0) / (c as f64 + 2.0)).clamp(1e-3, 0.45))
}

enum BlockResult {
    Verified { key_a: BitString, key_b: BitString, leaked: usize },
    Failed { leaked: usize, residual: usize },
}

fn run_turbo(cfg: &ExperimentConfig, t: &PreparedTraces, trial: u64) -> Result<SchemeRun> {
    let q = &cfg.quant;
    let env_a = envelope_region(&t.alice_compensated, t.calibration_len);
    let env_b = envelope_region(&t.bob, t.calibration_len);
    let quantize_region = |env: &[f64]| -> Result<BitString> {
        let sched =
            ThresholdSchedule::build(env, &t.epoch_starts, q.refresh.estimation_window, 0.0, ThresholdMode::SingleLossless)?;
        quantize::quantize_lossless(env, &sched)
    };
    let bits_a = quantize_region(&env_a)?;
    let bits_b = quantize_region(&env_b)?;
    let raw_bmr = bmr_or_nan(&bits_a, &bits_b);

    let p_hat = calibration_p_hat(t)?;
    let seed = cfg.master_seed;
    let codec = TurboCodec::new(TurboConfig {
        puncture: cfg.rate_policy.select(p_hat),
        interleaver_seed: rng::derive_u64(seed, &[trial, label::INTERLEAVER]),
        ..cfg.turbo
    })?;
    let k = codec.config().block_len;
    let blocks = bits_b.len() / k;
    let results = (0..blocks)
        .into_par_iter()
        .map(|i| -> Result<BlockResult> {
            let a = bits_a.slice(i * k, (i + 1) * k).without_sources();
            let b = bits_b.slice(i * k, (i + 1) * k).without_sources();
            let msg = reconcile::bob_prepare(&codec, i as u32, &b)?;
            match reconcile::alice_reconcile(&codec, &a, &msg, p_hat) {
                Ok(km) => {
                    let out_len = k.saturating_sub(km.leaked_bits);
                    let pa_seed = rng::derive_u64(seed, &[trial, label::PRIVACY, i as u64]);
                    let bob_km = KeyMaterial { bits: b, ..km.clone() };
                    Ok(BlockResult::Verified {
                        key_a: reconcile::privacy_amplify(&km, pa_seed, out_len)?,
                        key_b: reconcile::privacy_amplify(&bob_km, pa_seed, out_len)?,
                        leaked: km.leaked_bits,
                    })
                }
                Err(Error::Reconciliation(f)) => Ok(BlockResult::Failed {
                    leaked: msg.parity_payload.len() + CHECK_BITS,
                    residual: f.decoded.hamming(&b),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pool_a = BitString::new();
    let mut pool_b = BitString::new();
    let (mut verified, mut leaked_total, mut residual) = (0, 0, 0);
    for r in results {
        match r {
            BlockResult::Verified { key_a, key_b, leaked } => {
                verified += 1;
                leaked_total += leaked;
                pool_a.extend_from(&key_a);
                pool_b.extend_from(&key_b);
            }
            BlockResult::Failed { leaked, residual: r } => {
                leaked_total += leaked;
                residual += r;
            }
        }
    }
    let reconciled_bits = (blocks * k).max(1);
    let material = bits_b.slice(0, blocks * k);
    Ok(SchemeRun {
        scheme: Scheme::TurboNR,
        raw_bmr,
        bmr: if blocks == 0 { f64::NAN } else { residual as f64 / reconciled_bits as f64 },
        entropy_mean: entropy_or_nan(&material, q.entropy_window),
        p_joint: joint_ones(&bits_a, &bits_b) as f64 / t.key_region_len() as f64,
        p_hat: Some(p_hat),
        blocks_attempted: blocks,
        blocks_verified: verified,
        leaked_bits: leaked_total,
        pool: KeyPool::Turbo { pool_a, pool_b },
    })
}

/// Runs every scheme selected by `cfg.scheme` on the traces of `trial`.
pub fn simulate_session(cfg: &ExperimentConfig, trial: u64) -> Result<SessionOutcome> {
    cfg.validate()?;
    let traces = prepare(cfg, trial)?;
    let mut runs = Vec::new();
    if matches!(cfg.scheme, SchemeSelection::Indexing | SchemeSelection::Both) {
        runs.push(run_indexing(cfg, &traces, trial)?);
    }
    if matches!(cfg.scheme, SchemeSelection::TurboNR | SchemeSelection::Both) {
        runs.push(run_turbo(cfg, &traces, trial)?);
    }
    Ok(SessionOutcome {
        trial,
        sigma2: cfg.nr_model.sigma2_true,
        f_p: traces.f_p,
        simulated_seconds: traces.simulated_seconds(),
        trace_digest: traces.digest,
        config_fingerprint: cfg.fingerprint(),
        master_seed: cfg.master_seed,
        runs,
    })
}

/// Splits a key pool into `key_len`-bit keys.
///
/// Turbo pools are already verified and amplified, so keys are consecutive
/// chunks. Indexing bits are taken in chunks of `key_len + 64`; a chunk is a
/// key only if both sides' check values agree, after which the 64 disclosed
/// bits are hashed away. Returns the keys, the chunks attempted and the
/// bits disclosed during assembly.
fn assemble_keys(pool: &KeyPool, key_len: usize, seed: u64, trial: u64) -> (Vec<KeyRecord>, usize, usize) {
    match pool {
        KeyPool::Turbo { pool_a, pool_b } => {
            let keys = (0..pool_b.len() / key_len)
                .map(|i| {
                    let a = pool_a.slice(i * key_len, (i + 1) * key_len);
                    let b = pool_b.slice(i * key_len, (i + 1) * key_len);
                    KeyRecord {
                        len: key_len,
                        verified: reconcile::verify_keys(&a, &b),
                    }
                })
                .collect();
            (keys, 0, 0)
        }
        KeyPool::Indexing { bits_a, bits_b } => {
            let chunk = key_len + CHECK_BITS;
            let n = bits_b.len() / chunk;
            let keys = (0..n)
                .map(|i| {
                    let a = bits_a.slice(i * chunk, (i + 1) * chunk).without_sources();
                    let b = bits_b.slice(i * chunk, (i + 1) * chunk).without_sources();
                    if a.check_value() != b.check_value() {
                        return KeyRecord { len: key_len, verified: false };
                    }
                    let pa_seed = rng::derive_u64(seed, &[trial, label::PRIVACY_INDEXING, key_len as u64, i as u64]);
                    let amplify = |bits: BitString| {
                        let km = KeyMaterial { bits, leaked_bits: CHECK_BITS, verified: true };
                        reconcile::privacy_amplify(&km, pa_seed, key_len).expect("chunk holds key_len spare bits")
                    };
                    KeyRecord {
                        len: key_len,
                        verified: reconcile::verify_keys(&amplify(a), &amplify(b)),
                    }
                })
                .collect();
            (keys, n, n * CHECK_BITS)
        }
    }
}

impl SessionOutcome {
    /// One report per scheme for keys of `key_len` bits.
    pub fn reports(&self, key_len: usize) -> Vec<SessionReport> {
        self.runs
            .iter()
            .map(|run| {
                let (keys, chunks, chunk_leak) = assemble_keys(&run.pool, key_len, self.master_seed, self.trial);
                let kgr = metrics::measure_kgr(&keys, key_len, self.simulated_seconds).unwrap_or(0.0);
                let verified_keys = keys.iter().filter(|k| k.verified).count();
                let (attempted, verified) = match run.pool {
                    KeyPool::Indexing { .. } => (chunks, verified_keys),
                    KeyPool::Turbo { .. } => (run.blocks_attempted, run.blocks_verified),
                };
                SessionReport {
                    scheme: run.scheme,
                    key_len,
                    sigma2: self.sigma2,
                    f_p_hz: self.f_p,
                    bmr: run.bmr,
                    raw_bmr: run.raw_bmr,
                    kgr_keys_per_min: kgr,
                    entropy_per_bit_mean: run.entropy_mean,
                    secret_bit_rate: metrics::secret_bit_rate(self.f_p, run.p_joint),
                    blocks_attempted: attempted,
                    blocks_verified: verified,
                    leaked_bits_total: run.leaked_bits + chunk_leak,
                    keys,
                    simulated_seconds: self.simulated_seconds,
                    config_fingerprint: self.config_fingerprint,
                    trace_digest: self.trace_digest,
                }
            })
            .collect()
    }
}

/// Runs session `trial` and reports at `cfg.key_len`.
pub fn run_session(cfg: &ExperimentConfig, trial: u64) -> Result<Vec<SessionReport>> {
    Ok(simulate_session(cfg, trial)?.reports(cfg.key_len))
}
