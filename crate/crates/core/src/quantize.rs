//! Envelope-to-bit quantization.
//!
//! Two quantizers are provided:
//!
//! * dual-threshold lossy quantization with excursion indexing: Alice finds
//!   runs of at least `m` samples outside `[q-, q+]`, publishes their centre
//!   indices, Bob keeps the indices where his own `m`-sample window agrees on
//!   being outside the thresholds, and both quantize at the surviving
//!   indices;
//! * single-threshold lossless quantization: one bit per sample against the
//!   median.
//!
//! Thresholds are recomputed in epochs. An epoch ends after a fixed number
//! of coherence regions or earlier when the Doppler spectrum of the channel
//! has decorrelated from the one seen at the start of the epoch.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index;
use rustfft::{Fft, FftPlanner};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    DualLossy,
    SingleLossless,
}

/// Quantization thresholds for one epoch.
///
/// In `SingleLossless` mode `q_minus == q_plus == q_single`; in `DualLossy`
/// mode `q_single` holds the window mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub mode: ThresholdMode,
    pub q_minus: f64,
    pub q_plus: f64,
    pub q_single: f64,
    pub gamma: f64,
    /// Refresh epochs elapsed before this one.
    pub window_id: usize,
}

/// Ternary class of a sample against dual thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Below,
    Inside,
    Above,
}

impl Thresholds {
    fn side(&self, x: f64) -> Side {
        if x > self.q_plus {
            Side::Above
        } else if x < self.q_minus {
            Side::Below
        } else {
            Side::Inside
        }
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// `mean ± gamma * stddev` (dual) or the median (single).
pub fn compute_thresholds(env: &[f64], gamma: f64, mode: ThresholdMode) -> Result<Thresholds> {
    if env.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(gamma >= 0.0) {
        return Err(Error::invalid("gamma must be non-negative"));
    }
    let n = env.len() as f64;
    let mean = env.iter().sum::<f64>() / n;
    match mode {
        ThresholdMode::DualLossy => {
            let sd = (env.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
            if sd == 0.0 {
                return Err(Error::DegenerateEnvelope);
            }
            Ok(Thresholds {
                mode,
                q_minus: mean - gamma * sd,
                q_plus: mean + gamma * sd,
                q_single: mean,
                gamma,
                window_id: 0,
            })
        }
        ThresholdMode::SingleLossless => {
            let q = median(env);
            Ok(Thresholds {
                mode,
                q_minus: q,
                q_plus: q,
                q_single: q,
                gamma,
                window_id: 0,
            })
        }
    }
}

/// Per-sample threshold lookup.
pub trait ThresholdSource {
    fn mode(&self) -> ThresholdMode;
    fn at(&self, k: usize) -> &Thresholds;
}

impl ThresholdSource for Thresholds {
    fn mode(&self) -> ThresholdMode {
        self.mode
    }

    fn at(&self, _k: usize) -> &Thresholds {
        self
    }
}

/// Piecewise-constant thresholds over refresh epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSchedule {
    mode: ThresholdMode,
    starts: Vec<usize>,
    thresholds: Vec<Thresholds>,
}

impl ThresholdSchedule {
    /// For each epoch start `s`, computes thresholds on `env[s..s + window]`
    /// (shifted back to stay inside the trace). `epoch_starts` must begin
    /// with 0 and be strictly increasing.
    pub fn build(
        env: &[f64],
        epoch_starts: &[usize],
        estimation_window: usize,
        gamma: f64,
        mode: ThresholdMode,
    ) -> Result<Self> {
        if env.is_empty() {
            return Err(Error::EmptyInput);
        }
        if epoch_starts.first() != Some(&0) || epoch_starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("epoch starts must begin at 0 and increase"));
        }
        if estimation_window == 0 {
            return Err(Error::invalid("estimation window must be positive"));
        }
        let n = env.len();
        let w = estimation_window.min(n);
        let thresholds = epoch_starts
            .iter()
            .enumerate()
            .map(|(id, &s)| {
                let lo = s.min(n - w);
                let mut th = compute_thresholds(&env[lo..lo + w], gamma, mode)?;
                th.window_id = id;
                Ok(th)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mode,
            starts: epoch_starts.to_vec(),
            thresholds,
        })
    }

    /// A single epoch covering everything.
    pub fn constant(th: Thresholds) -> Self {
        Self {
            mode: th.mode,
            starts: vec![0],
            thresholds: vec![th],
        }
    }

    pub fn epochs(&self) -> usize {
        self.starts.len()
    }

    pub fn epoch_starts(&self) -> &[usize] {
        &self.starts
    }
}

impl ThresholdSource for ThresholdSchedule {
    fn mode(&self) -> ThresholdMode {
        self.mode
    }

    fn at(&self, k: usize) -> &Thresholds {
        let i = self.starts.partition_point(|&s| s <= k) - 1;
        &self.thresholds[i]
    }
}

fn require_mode(th: &impl ThresholdSource, mode: ThresholdMode) -> Result<()> {
    if th.mode() == mode {
        Ok(())
    } else {
        Err(Error::invalid(format!("expected {mode:?} thresholds")))
    }
}

/// Run of at least `m` samples on one side of the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Excursion {
    pub i_start: usize,
    /// Inclusive.
    pub i_end: usize,
    pub bit: u8,
    pub i_center: usize,
}

impl Excursion {
    pub fn len(&self) -> usize {
        self.i_end - self.i_start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn sides(env: &[f64], th: &impl ThresholdSource) -> Vec<Side> {
    env.iter()
        .enumerate()
        .map(|(k, &x)| th.at(k).side(x))
        .collect()
}

/// Maximal runs of `>= m` samples strictly above `q+` (bit 1) or strictly
/// below `q-` (bit 0). Samples inside `[q-, q+]` break runs.
pub fn find_excursions(env: &[f64], th: &impl ThresholdSource, m: usize) -> Result<Vec<Excursion>> {
    require_mode(th, ThresholdMode::DualLossy)?;
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let sides = sides(env, th);
    let mut out = Vec::new();
    let mut i = 0;
    while i < sides.len() {
        let side = sides[i];
        let mut j = i;
        while j + 1 < sides.len() && sides[j + 1] == side {
            j += 1;
        }
        if side != Side::Inside && j - i + 1 >= m {
            out.push(Excursion {
                i_start: i,
                i_end: j,
                bit: u8::from(side == Side::Above),
                i_center: (i + j) / 2,
            });
        }
        i = j + 1;
    }
    Ok(out)
}

/// Result of the excursion-indexing exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexOutcome {
    pub bits_a: BitString,
    pub bits_b: BitString,
    /// Centre indices Alice published.
    pub l_a: Vec<usize>,
    /// Indices Bob confirmed, a subset of `l_a`.
    pub l_b: Vec<usize>,
    pub discarded: usize,
}

/// Excursion-indexing agreement between Alice and Bob.
///
/// Each party quantizes against its own thresholds. Alice publishes the
/// centres of a random `fraction` of her excursions; Bob keeps a centre when
/// his `m` samples centred on it all lie on one side of his thresholds.
pub fn index_reconcile(
    alice_env: &[f64],
    bob_env: &[f64],
    th_alice: &impl ThresholdSource,
    th_bob: &impl ThresholdSource,
    m: usize,
    fraction: f64,
    rng: &mut SimRng,
) -> Result<IndexOutcome> {
    Error::check_len(alice_env.len(), bob_env.len())?;
    require_mode(th_bob, ThresholdMode::DualLossy)?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid("fraction must be in (0, 1]"));
    }
    let excursions = find_excursions(alice_env, th_alice, m)?;
    let l_a: Vec<usize> = if fraction >= 1.0 {
        excursions.iter().map(|e| e.i_center).collect()
    } else {
        let count = (fraction * excursions.len() as f64).round() as usize;
        let mut picked = index::sample(rng, excursions.len(), count).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| excursions[i].i_center).collect()
    };

    let n = bob_env.len();
    let half = (m - 1) / 2;
    let bob_side = |k: usize| th_bob.at(k).side(bob_env[k]);
    let mut l_b = Vec::new();
    let mut a_bits = Vec::new();
    let mut b_bits = Vec::new();
    for &c in &l_a {
        if c < half || c - half + m > n {
            continue;
        }
        let lo = c - half;
        let first = bob_side(lo);
        if first == Side::Inside || !(lo..lo + m).all(|k| bob_side(k) == first) {
            continue;
        }
        l_b.push(c);
        a_bits.push(u8::from(th_alice.at(c).side(alice_env[c]) == Side::Above));
        b_bits.push(u8::from(bob_side(c) == Side::Above));
    }
    let discarded = l_a.len() - l_b.len();
    Ok(IndexOutcome {
        bits_a: BitString::from_bits(a_bits).with_sources(l_b.clone())?,
        bits_b: BitString::from_bits(b_bits).with_sources(l_b.clone())?,
        l_a,
        l_b,
        discarded,
    })
}

/// One bit per sample: `1` iff `env[k] >= q_single`.
pub fn quantize_lossless(env: &[f64], th: &impl ThresholdSource) -> Result<BitString> {
    require_mode(th, ThresholdMode::SingleLossless)?;
    let bits = env
        .iter()
        .enumerate()
        .map(|(k, &x)| u8::from(x >= th.at(k).q_single));
    BitString::from_bits(bits).with_sources((0..env.len()).collect())
}

/// Doppler power spectrum over a fixed frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerSpectrum {
    pub bins: Vec<f64>,
    pub normalized: bool,
}

impl DopplerSpectrum {
    pub fn from_bins(bins: Vec<f64>) -> Self {
        Self {
            bins,
            normalized: false,
        }
    }

    /// Scales bins to sum to one. A zero spectrum stays unnormalized.
    pub fn normalize(mut self) -> Self {
        let total: f64 = self.bins.iter().sum();
        if total > 0.0 {
            self.bins.iter_mut().for_each(|b| *b /= total);
            self.normalized = true;
        }
        self
    }
}

/// Periodogram-based spectrum estimator with a cached FFT plan.
pub struct SpectrumEstimator {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
}

impl SpectrumEstimator {
    pub fn new(len: usize) -> Self {
        Self {
            fft: FftPlanner::new().plan_fft_forward(len),
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Normalized magnitude-squared DFT of `samples` (length must match).
    pub fn estimate(&self, samples: &[Complex64]) -> Result<DopplerSpectrum> {
        Error::check_len(samples.len(), self.len)?;
        let mut buf = samples.to_vec();
        self.fft.process(&mut buf);
        Ok(DopplerSpectrum::from_bins(buf.iter().map(|c| c.norm_sqr()).collect()).normalize())
    }
}

/// Pearson correlation of two normalized spectra over their bins.
pub fn doppler_correlation(x: &DopplerSpectrum, y: &DopplerSpectrum) -> Result<f64> {
    Error::check_len(x.bins.len(), y.bins.len())?;
    if !x.normalized || !y.normalized {
        return Err(Error::invalid("spectra must be normalized"));
    }
    let n = x.bins.len() as f64;
    let mx = x.bins.iter().sum::<f64>() / n;
    let my = y.bins.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.bins.iter().zip(&y.bins) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::FlatSpectrum);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Whether thresholds must be recomputed: the region budget is spent or the
/// Doppler correlation dropped below `rho_threshold`.
pub fn refresh_due(windows_elapsed: usize, rho: f64, rho_threshold: f64, region_budget: usize) -> bool {
    windows_elapsed >= region_budget || rho < rho_threshold
}

/// Threshold refresh parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefreshPolicy {
    /// Coherence regions per epoch at most.
    pub region_budget: usize,
    pub rho_threshold: f64,
    /// Probes per Doppler spectrum estimate.
    pub spectrum_window: usize,
    /// Probes used to estimate each epoch's thresholds.
    pub estimation_window: usize,
}

impl Default for RefreshPolicy {
    fn default() -> Self {
        Self {
            region_budget: 10,
            rho_threshold: 0.9,
            spectrum_window: 10,
            estimation_window: 128,
        }
    }
}

/// Epoch start indices for `reference` (Bob's complex trace).
///
/// At every coherence-region boundary the spectrum of the next
/// `spectrum_window` probes is compared with the one captured at the start
/// of the current epoch. Near the end of the trace, where no full window is
/// left, only the region budget applies.
pub fn plan_epochs(reference: &[Complex64], samples_per_region: usize, policy: &RefreshPolicy) -> Result<Vec<usize>> {
    if policy.region_budget == 0 || samples_per_region == 0 || policy.spectrum_window < 2 {
        return Err(Error::invalid("region budget, region length and spectrum window must be positive"));
    }
    let n = reference.len();
    let sw = policy.spectrum_window;
    let est = SpectrumEstimator::new(sw);
    let spectrum_at = |k: usize| -> Option<DopplerSpectrum> {
        if k + sw <= n {
            est.estimate(&reference[k..k + sw]).ok()
        } else {
            None
        }
    };
    let mut starts = vec![0];
    let mut reference_spectrum = spectrum_at(0);
    let mut elapsed = 0;
    let mut k = samples_per_region;
    while k < n {
        elapsed += 1;
        let current = spectrum_at(k);
        let rho = match (&reference_spectrum, &current) {
            (Some(a), Some(b)) => doppler_correlation(a, b).unwrap_or(1.0),
            _ => 1.0,
        };
        if refresh_due(elapsed, rho, policy.rho_threshold, policy.region_budget) {
            starts.push(k);
            reference_spectrum = current;
            elapsed = 0;
        }
        k += samples_per_region;
    }
    Ok(starts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn dual(q_minus: f64, q_plus: f64) -> Thresholds {
        Thresholds {
            mode: ThresholdMode::DualLossy,
            q_minus,
            q_plus,
            q_single: 0.5 * (q_minus + q_plus),
            gamma: 0.0,
            window_id: 0,
        }
    }

    #[test]
    fn dual_threshold_formula() {
        let th = compute_thresholds(&[-1.0, 1.0], 0.5, ThresholdMode::DualLossy).unwrap();
        assert_eq!((th.q_minus, th.q_plus), (-0.5, 0.5));
        let th = compute_thresholds(&[1.0, 2.0, 3.0], 0.0, ThresholdMode::DualLossy).unwrap();
        assert_eq!(th.q_minus, th.q_plus);
        assert_eq!(th.q_plus, 2.0);
    }

    #[test]
    fn single_threshold_is_median() {
        let th = compute_thresholds(&[0.1, 0.9, 0.5], 0.0, ThresholdMode::SingleLossless).unwrap();
        assert_eq!(th.q_single, 0.5);
        let th = compute_thresholds(&[4.0, 1.0, 3.0, 2.0], 0.0, ThresholdMode::SingleLossless).unwrap();
        assert_eq!(th.q_single, 2.5);
    }

    #[test]
    fn degenerate_envelope() {
        assert!(matches!(
            compute_thresholds(&[2.0; 8], 0.3, ThresholdMode::DualLossy),
            Err(Error::DegenerateEnvelope)
        ));
        assert!(compute_thresholds(&[], 0.3, ThresholdMode::DualLossy).is_err());
    }

    #[test]
    fn excursion_example() {
        let env = [4.0, 4.0, 4.0, 4.0, 4.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let ex = find_excursions(&env, &dual(1.0, 3.0), 5).unwrap();
        assert_eq!(
            ex,
            vec![
                Excursion { i_start: 0, i_end: 4, bit: 1, i_center: 2 },
                Excursion { i_start: 7, i_end: 11, bit: 0, i_center: 9 },
            ]
        );
    }

    #[test]
    fn excursion_edge_cases() {
        assert!(find_excursions(&[2.0; 20], &dual(1.0, 3.0), 5).unwrap().is_empty());
        assert!(find_excursions(&[4.0, 4.0, 4.0, 4.0, 2.0], &dual(1.0, 3.0), 5).unwrap().is_empty());
        // Boundary values count as inside.
        assert!(find_excursions(&[3.0; 6], &dual(1.0, 3.0), 5).unwrap().is_empty());
        let single = compute_thresholds(&[0.0, 1.0], 0.0, ThresholdMode::SingleLossless).unwrap();
        assert!(find_excursions(&[1.0; 5], &single, 5).is_err());
    }

    #[test]
    fn identical_envelopes_agree_on_every_index() {
        let env: Vec<f64> = (0..400).map(|k| ((k as f64) * 0.07).sin() + 1.5).collect();
        let th = compute_thresholds(&env, 0.35, ThresholdMode::DualLossy).unwrap();
        let out = index_reconcile(&env, &env, &th, &th, 5, 1.0, &mut rng::stream(0, &[])).unwrap();
        assert!(!out.l_a.is_empty());
        assert_eq!(out.l_a, out.l_b);
        assert_eq!(out.bits_a, out.bits_b);
        assert_eq!(out.discarded, 0);
    }

    #[test]
    fn flat_bob_keeps_nothing() {
        let env: Vec<f64> = (0..400).map(|k| ((k as f64) * 0.07).sin() + 1.5).collect();
        let th = compute_thresholds(&env, 0.35, ThresholdMode::DualLossy).unwrap();
        let flat = vec![1.5; 400];
        let out = index_reconcile(&env, &flat, &th, &th, 5, 1.0, &mut rng::stream(0, &[])).unwrap();
        assert!(out.l_b.is_empty());
        assert!(out.bits_a.is_empty() && out.bits_b.is_empty());
        assert_eq!(out.discarded, out.l_a.len());
    }

    #[test]
    fn partial_fraction_selects_subset() {
        let env: Vec<f64> = (0..2000).map(|k| ((k as f64) * 0.05).sin() + 1.5).collect();
        let th = compute_thresholds(&env, 0.35, ThresholdMode::DualLossy).unwrap();
        let all = index_reconcile(&env, &env, &th, &th, 5, 1.0, &mut rng::stream(0, &[])).unwrap();
        let half = index_reconcile(&env, &env, &th, &th, 5, 0.5, &mut rng::stream(0, &[])).unwrap();
        assert_eq!(half.l_a.len(), (all.l_a.len() as f64 * 0.5).round() as usize);
        assert!(half.l_a.iter().all(|c| all.l_a.contains(c)));
        assert!(index_reconcile(&env, &env[1..], &th, &th, 5, 1.0, &mut rng::stream(0, &[])).is_err());
    }

    #[test]
    fn lossless_examples() {
        let th = compute_thresholds(&[0.1, 0.9, 0.5], 0.0, ThresholdMode::SingleLossless).unwrap();
        let bits = quantize_lossless(&[0.1, 0.9, 0.5], &th).unwrap();
        assert_eq!(bits.as_slice(), &[0, 1, 1]);
        let flat = [0.7; 9];
        let th = compute_thresholds(&flat, 0.0, ThresholdMode::SingleLossless).unwrap();
        assert_eq!(quantize_lossless(&flat, &th).unwrap().count_ones(), 9);
    }

    #[test]
    fn correlation_examples() {
        let x = DopplerSpectrum::from_bins(vec![0.1, 0.6, 0.3]).normalize();
        assert!((doppler_correlation(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let a = DopplerSpectrum::from_bins(vec![1.0, 0.0]).normalize();
        let b = DopplerSpectrum::from_bins(vec![0.0, 1.0]).normalize();
        assert!((doppler_correlation(&a, &b).unwrap() + 1.0).abs() < 1e-12);
        let y = DopplerSpectrum::from_bins(vec![0.5, 0.2, 0.3]).normalize();
        assert_eq!(doppler_correlation(&x, &y).unwrap(), doppler_correlation(&y, &x).unwrap());
        let flat = DopplerSpectrum::from_bins(vec![1.0; 3]).normalize();
        assert!(matches!(doppler_correlation(&x, &flat), Err(Error::FlatSpectrum)));
    }

    #[test]
    fn refresh_rules() {
        assert!(refresh_due(10, 1.0, 0.9, 10));
        assert!(!refresh_due(3, 0.95, 0.9, 10));
        assert!(refresh_due(0, 0.5, 0.9, 10));
    }

    #[test]
    fn schedule_lookup_and_epochs() {
        let env: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let sched = ThresholdSchedule::build(&env, &[0, 40, 90], 20, 0.0, ThresholdMode::SingleLossless).unwrap();
        assert_eq!(sched.epochs(), 3);
        assert_eq!(sched.at(0).q_single, 9.5);
        assert_eq!(sched.at(39).q_single, 9.5);
        assert_eq!(sched.at(40).q_single, 49.5);
        // Last epoch's window is pulled back to [80, 100).
        assert_eq!(sched.at(99).q_single, 89.5);
        assert_eq!(sched.at(99).window_id, 2);
        assert!(ThresholdSchedule::build(&env, &[5], 20, 0.0, ThresholdMode::SingleLossless).is_err());
    }

    #[test]
    fn stationary_tone_refreshes_on_budget_only() {
        let tone: Vec<Complex64> = (0..200)
            .map(|k| Complex64::from_polar(1.0, 0.4 * k as f64))
            .collect();
        let starts = plan_epochs(&tone, 1, &RefreshPolicy::default()).unwrap();
        let expected: Vec<usize> = (0..200).step_by(10).collect();
        assert_eq!(starts, expected);
    }

    /// Window-scan oracle: a sample belongs to an excursion iff some
    /// length-`m` window containing it lies wholly on one side.
    fn scan_oracle(env: &[f64], th: &Thresholds, m: usize) -> Vec<Excursion> {
        let side = |k: usize| th.side(env[k]);
        let mut covered = vec![None; env.len()];
        for s in 0..env.len().saturating_sub(m - 1) {
            let first = side(s);
            if first != Side::Inside && (s..s + m).all(|k| side(k) == first) {
                for c in &mut covered[s..s + m] {
                    *c = Some(first);
                }
            }
        }
        let mut out = Vec::new();
        let mut k = 0;
        while k < env.len() {
            let Some(sd) = covered[k] else {
                k += 1;
                continue;
            };
            let start = k;
            while k + 1 < env.len() && covered[k + 1] == Some(sd) {
                k += 1;
            }
            out.push(Excursion {
                i_start: start,
                i_end: k,
                bit: u8::from(sd == Side::Above),
                i_center: (start + k) / 2,
            });
            k += 1;
        }
        out
    }

    fn random_walk(len: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, &[]);
        let mut x = 0.0f64;
        (0..len)
            .map(|_| {
                x = 0.8 * x + r.random_range(-1.0..1.0);
                x.abs()
            })
            .collect()
    }

    #[test]
    fn excursions_match_window_scan_oracle() {
        for seed in 0..1000 {
            let env = random_walk(10_000, seed);
            let th = compute_thresholds(&env, 0.35, ThresholdMode::DualLossy).unwrap();
            let m = 1 + (seed as usize % 7);
            let found = find_excursions(&env, &th, m).unwrap();
            assert_eq!(found, scan_oracle(&env, &th, m), "seed {seed}");
            for e in &found {
                assert!(e.len() >= m);
                assert_eq!(e.i_center, (e.i_start + e.i_end) / 2);
                assert!(env[e.i_start..=e.i_end]
                    .iter()
                    .all(|&x| if e.bit == 1 { x > th.q_plus } else { x < th.q_minus }));
            }
        }
    }

    #[test]
    fn indexing_beats_naive_dual_quantization() {
        use crate::channel::{realize, V2VChannelParams};
        use crate::reciprocity::{derive_alice_trace, NonReciprocityModel};

        let model = NonReciprocityModel {
            sigma2_true: 0.05,
            mu_true: Complex64::new(0.0, 0.0),
            snr_db: None,
        };
        let params = V2VChannelParams { n_samples: 10_000, ..V2VChannelParams::default() };
        let mut wins = 0;
        for seed in 0..100u64 {
            let bob = realize(&params, seed).unwrap().trace;
            let alice = derive_alice_trace(&bob, &model, &mut rng::stream(seed, &[1])).unwrap();
            let env_a: Vec<f64> = alice.samples.iter().map(|z| z.norm()).collect();
            let env_b: Vec<f64> = bob.samples.iter().map(|z| z.norm()).collect();
            let th_a = compute_thresholds(&env_a, 0.35, ThresholdMode::DualLossy).unwrap();
            let th_b = compute_thresholds(&env_b, 0.35, ThresholdMode::DualLossy).unwrap();
            let out = index_reconcile(&env_a, &env_b, &th_a, &th_b, 5, 1.0, &mut rng::stream(seed, &[2])).unwrap();
            let indexed = out.bits_a.hamming(&out.bits_b) as f64 / out.bits_a.len().max(1) as f64;

            // Naive: every sample both parties place outside their thresholds.
            let (mut both, mut differ) = (0usize, 0usize);
            for k in 0..env_a.len() {
                let (sa, sb) = (th_a.side(env_a[k]), th_b.side(env_b[k]));
                if sa != Side::Inside && sb != Side::Inside {
                    both += 1;
                    differ += usize::from(sa != sb);
                }
            }
            if indexed <= differ as f64 / both as f64 {
                wins += 1;
            }
        }
        assert!(wins >= 90, "indexing won {wins}/100");
    }

    #[test]
    fn lossless_median_is_balanced_on_continuous_input() {
        let env = random_walk(10_000, 99);
        let th = compute_thresholds(&env, 0.0, ThresholdMode::SingleLossless).unwrap();
        let ones = quantize_lossless(&env, &th).unwrap().count_ones() as f64;
        assert!((ones / 1e4 - 0.5).abs() <= 0.02);
    }

    proptest! {
        #[test]
        fn lossless_median_splits_distinct_values(v in proptest::collection::hash_set(0u32..1_000_000, 1..300)) {
            let env: Vec<f64> = v.into_iter().map(f64::from).collect();
            let th = compute_thresholds(&env, 0.0, ThresholdMode::SingleLossless).unwrap();
            let bits = quantize_lossless(&env, &th).unwrap();
            prop_assert_eq!(bits.len(), env.len());
            let diff = 2 * bits.count_ones() as i64 - env.len() as i64;
            prop_assert!(diff.abs() <= 2);
        }

        #[test]
        fn refresh_due_is_monotone(w in 0usize..50, dw in 0usize..50, rho in -1.0f64..1.0, drho in 0.0f64..1.0, budget in 1usize..20) {
            if refresh_due(w, rho, 0.9, budget) {
                prop_assert!(refresh_due(w + dw, rho, 0.9, budget));
                prop_assert!(refresh_due(w, rho - drho, 0.9, budget));
            }
        }

        #[test]
        fn index_outcome_invariants(seed in 0u64..10_000, noise in 0.0f64..0.5, m in 1usize..8) {
            let bob = random_walk(2_000, seed);
            let mut r = rng::stream(seed, &[7]);
            let alice: Vec<f64> = bob.iter().map(|x| (x + noise * r.random_range(-1.0..1.0)).abs()).collect();
            let th_a = compute_thresholds(&alice, 0.35, ThresholdMode::DualLossy).unwrap();
            let th_b = compute_thresholds(&bob, 0.35, ThresholdMode::DualLossy).unwrap();
            let out = index_reconcile(&alice, &bob, &th_a, &th_b, m, 0.7, &mut r).unwrap();
            prop_assert!(out.l_b.iter().all(|c| out.l_a.contains(c)));
            prop_assert_eq!(out.bits_a.len(), out.l_b.len());
            prop_assert_eq!(out.bits_b.len(), out.l_b.len());
            prop_assert_eq!(out.discarded, out.l_a.len() - out.l_b.len());
            for &c in &out.l_b {
                prop_assert!(th_a.side(alice[c]) != Side::Inside);
                prop_assert!(th_b.side(bob[c]) != Side::Inside);
            }
        }
    }
}
