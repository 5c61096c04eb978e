//! Monte Carlo synthesis of a 3D vehicle-to-vehicle Rayleigh channel.
//!
//! The complex gain seen by Bob is a sum of `L` sinusoids,
//!
//! ```text
//! G(t) = sum_l |a_l| exp(j phi_l) exp(j 2 pi v_l t),   v_l = v_T,l + v_S,l + v_R,l
//! ```
//!
//! where each Doppler term comes from transmitter, receiver and a single
//! mobile scatterer per path. Transmitter/receiver terms depend on the
//! azimuth and elevation of departure/arrival; the scatterer term on its
//! Weibull-distributed speed and two uniform angles.
//!
//! The probing rate is tied to the maximum Doppler shift
//! `u_max = (fc / c) (u_T + u_R + 2 u_S)` so that successive probes fall in
//! different coherence regions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

/// Closed angle interval `[min, max]` in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleInterval {
    pub min: f64,
    pub max: f64,
}

impl AngleInterval {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn full_azimuth() -> Self {
        Self::new(-PI, PI)
    }

    pub const fn full_elevation() -> Self {
        Self::new(-PI / 2.0, PI / 2.0)
    }

    fn within(&self, lo: f64, hi: f64) -> bool {
        self.min <= self.max && self.min >= lo && self.max <= hi
    }

    fn sample(&self, rng: &mut SimRng) -> f64 {
        self.min + (self.max - self.min) * rng.random::<f64>()
    }
}

/// Amplitude normalisation of the multipath components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `|a_l| = sqrt(2 / L)`: total power 2.
    #[default]
    Sqrt2OverL,
    /// `|a_l| = sqrt(1 / L)`: total power 1.
    UnitPower,
}

impl Normalization {
    pub fn amplitude(self, num_paths: usize) -> f64 {
        match self {
            Normalization::Sqrt2OverL => (2.0 / num_paths as f64).sqrt(),
            Normalization::UnitPower => (1.0 / num_paths as f64).sqrt(),
        }
    }
}

/// Generative parameters of the V2V channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct V2VChannelParams {
    /// Number of multipath components.
    pub num_paths: usize,
    /// Carrier frequency (Hz).
    pub carrier_hz: f64,
    /// Propagation speed (m/s).
    pub propagation_speed: f64,
    /// Transmitter speed (m/s).
    pub tx_speed: f64,
    /// Receiver speed (m/s).
    pub rx_speed: f64,
    pub azimuth_tx: AngleInterval,
    pub azimuth_rx: AngleInterval,
    pub elevation_tx: AngleInterval,
    pub elevation_rx: AngleInterval,
    /// Weibull shape `b`, `0 < b <= 1`.
    pub weibull_shape: f64,
    /// Weibull scale `w`.
    pub weibull_scale: f64,
    /// Scatterer speed cap entering the Doppler bound (m/s). Sampled speeds
    /// are not truncated to it.
    pub scatterer_speed_max: f64,
    pub normalization: Normalization,
    pub n_samples: usize,
    /// Multiplier in `(0, 1]` applied to `1 / T_c,min` to get the probing rate.
    pub probe_rate_factor: f64,
}

/// Mean scatterer speed of the default scenario (m/s).
pub const DEFAULT_MEAN_SCATTERER_SPEED: f64 = 10.0;
/// Weibull shape of the default scenario.
pub const DEFAULT_WEIBULL_SHAPE: f64 = 0.8;
/// Quantile of the scatterer speed law used as `u_S,max`. Higher quantiles
/// contain more Doppler energy but slow the probe clock below the
/// decorrelation point.
pub const DEFAULT_SCATTERER_SPEED_QUANTILE: f64 = 0.9;

impl Default for V2VChannelParams {
    /// Urban 5.9 GHz scenario: 20 paths, 30 and 25 m/s vehicles, full 3D
    /// scattering, Weibull scatterer speeds with mean 10 m/s capped at their
    /// 90th percentile.
    fn default() -> Self {
        let shape = DEFAULT_WEIBULL_SHAPE;
        let scale = weibull_scale_for_mean(shape, DEFAULT_MEAN_SCATTERER_SPEED);
        Self {
            num_paths: 20,
            carrier_hz: 5.9e9,
            propagation_speed: 3.0e8,
            tx_speed: 30.0,
            rx_speed: 25.0,
            azimuth_tx: AngleInterval::full_azimuth(),
            azimuth_rx: AngleInterval::full_azimuth(),
            elevation_tx: AngleInterval::full_elevation(),
            elevation_rx: AngleInterval::full_elevation(),
            weibull_shape: shape,
            weibull_scale: scale,
            scatterer_speed_max: weibull_quantile(shape, scale, DEFAULT_SCATTERER_SPEED_QUANTILE),
            normalization: Normalization::Sqrt2OverL,
            n_samples: 100_000,
            probe_rate_factor: 1.0,
        }
    }
}

impl V2VChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_paths < 1 {
            return Err(Error::invalid("L must be at least 1"));
        }
        if !(self.carrier_hz > 0.0) || !(self.propagation_speed > 0.0) {
            return Err(Error::invalid("carrier frequency and propagation speed must be positive"));
        }
        if !(self.tx_speed >= 0.0 && self.rx_speed >= 0.0 && self.scatterer_speed_max >= 0.0) {
            return Err(Error::invalid("speeds must be non-negative"));
        }
        for (name, iv) in [("azimuth_tx", self.azimuth_tx), ("azimuth_rx", self.azimuth_rx)] {
            if !iv.within(-PI, PI) {
                return Err(Error::invalid(format!("{name} must lie inside [-pi, pi]")));
            }
        }
        for (name, iv) in [("elevation_tx", self.elevation_tx), ("elevation_rx", self.elevation_rx)] {
            if !iv.within(-PI / 2.0, PI / 2.0) {
                return Err(Error::invalid(format!("{name} must lie inside [-pi/2, pi/2]")));
            }
        }
        check_weibull(self.weibull_shape, self.weibull_scale)?;
        if !(self.probe_rate_factor > 0.0 && self.probe_rate_factor <= 1.0) {
            return Err(Error::invalid("probe_rate_factor must be in (0, 1]"));
        }
        Ok(())
    }

    /// Free-space wavenumber scale `fc / c` (1/m).
    pub fn doppler_per_speed(&self) -> f64 {
        self.carrier_hz / self.propagation_speed
    }

    /// Probes per coherence region at the configured rate.
    pub fn samples_per_region(&self) -> usize {
        (1.0 / self.probe_rate_factor).round().max(1.0) as usize
    }
}

fn check_weibull(shape: f64, scale: f64) -> Result<()> {
    if !(shape > 0.0 && shape <= 1.0) {
        return Err(Error::invalid("Weibull shape must satisfy 0 < b <= 1"));
    }
    if !(scale > 0.0) {
        return Err(Error::invalid("Weibull scale must be positive"));
    }
    Ok(())
}

/// Mean of the scatterer-speed density `w u^(b-1) exp(-w u^b / b)`.
pub fn weibull_mean(shape: f64, scale: f64) -> f64 {
    (shape / scale).powf(1.0 / shape) * gamma(1.0 + 1.0 / shape)
}

/// Scale `w` giving the requested mean speed for shape `b`.
pub fn weibull_scale_for_mean(shape: f64, mean: f64) -> f64 {
    let ratio = (mean / gamma(1.0 + 1.0 / shape)).powf(shape);
    shape / ratio
}

/// Quantile `q` of the scatterer-speed distribution.
pub fn weibull_quantile(shape: f64, scale: f64, q: f64) -> f64 {
    (-(shape / scale) * (-q).ln_1p()).powf(1.0 / shape)
}

pub fn weibull_cdf(shape: f64, scale: f64, u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        -(-scale * u.powf(shape) / shape).exp_m1()
    }
}

/// Maximum Doppler shift, minimum coherence time and probing rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerBounds {
    /// Hz.
    pub u_max: f64,
    /// s.
    pub t_c_min: f64,
    /// Hz.
    pub f_p: f64,
}

pub fn doppler_bounds(params: &V2VChannelParams) -> Result<DopplerBounds> {
    params.validate()?;
    let u_max = max_doppler(
        params.carrier_hz,
        params.propagation_speed,
        params.tx_speed,
        params.rx_speed,
        params.scatterer_speed_max,
    );
    if u_max <= 0.0 {
        return Err(Error::StaticChannel);
    }
    Ok(DopplerBounds {
        u_max,
        t_c_min: 1.0 / u_max,
        f_p: params.probe_rate_factor * u_max,
    })
}

/// `u_max = (fc / c)(u_T + u_R + 2 u_S)`.
pub fn max_doppler(fc: f64, c: f64, u_t: f64, u_r: f64, u_s: f64) -> f64 {
    (fc / c) * (u_t + u_r + 2.0 * u_s)
}

/// Inverse-CDF draw from `w u^(b-1) exp(-w u^b / b)`.
pub fn sample_scatterer_speed(shape: f64, scale: f64, rng: &mut SimRng) -> f64 {
    debug_assert!(check_weibull(shape, scale).is_ok());
    let u: f64 = rng.random();
    (-(shape / scale) * (-u).ln_1p()).powf(1.0 / shape)
}

/// Doppler contribution of a moving terminal: `(u fc / c) cos(beta) cos(alpha)`.
pub fn terminal_doppler(speed: f64, azimuth: f64, elevation: f64, fc: f64, c: f64) -> f64 {
    speed * fc / c * elevation.cos() * azimuth.cos()
}

/// Doppler contribution of a single-bounce mobile scatterer:
/// `(u_S fc / c)(cos(alpha_1) + cos(alpha_2))`.
pub fn scatterer_doppler(speed: f64, aoa: f64, aod: f64, fc: f64, c: f64) -> f64 {
    speed * fc / c * (aoa.cos() + aod.cos())
}

/// One path of the sum-of-sinusoids model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipathComponent {
    pub amplitude: f64,
    /// rad, in `[-pi, pi]`.
    pub phase: f64,
    /// Hz.
    pub v_t: f64,
    /// Hz.
    pub v_s: f64,
    /// Hz.
    pub v_r: f64,
    /// Realised scatterer speed (m/s).
    pub scatterer_speed: f64,
}

impl MultipathComponent {
    pub fn doppler(&self) -> f64 {
        self.v_t + self.v_s + self.v_r
    }
}

/// Draws `L` independent components.
pub fn draw_components(params: &V2VChannelParams, rng: &mut SimRng) -> Result<Vec<MultipathComponent>> {
    params.validate()?;
    let (fc, c) = (params.carrier_hz, params.propagation_speed);
    let amplitude = params.normalization.amplitude(params.num_paths);
    let full = AngleInterval::full_azimuth();
    let comps = (0..params.num_paths)
        .map(|_| {
            let phase = full.sample(rng);
            let az_t = params.azimuth_tx.sample(rng);
            let el_t = params.elevation_tx.sample(rng);
            let az_r = params.azimuth_rx.sample(rng);
            let el_r = params.elevation_rx.sample(rng);
            let aoa_s = full.sample(rng);
            let aod_s = full.sample(rng);
            let u_s = sample_scatterer_speed(params.weibull_shape, params.weibull_scale, rng);
            MultipathComponent {
                amplitude,
                phase,
                v_t: terminal_doppler(params.tx_speed, az_t, el_t, fc, c),
                v_s: scatterer_doppler(u_s, aoa_s, aod_s, fc, c),
                v_r: terminal_doppler(params.rx_speed, az_r, el_r, fc, c),
                scatterer_speed: u_s,
            }
        })
        .collect();
    Ok(comps)
}

/// Complex channel gains sampled at the probing rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    pub samples: Vec<Complex64>,
    /// s.
    pub sample_interval: f64,
    pub params: Option<V2VChannelParams>,
    pub seed: Option<u64>,
}

impl ChannelTrace {
    pub fn new(samples: Vec<Complex64>, sample_interval: f64) -> Self {
        Self {
            samples,
            sample_interval,
            params: None,
            seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            sample_interval: self.sample_interval,
            params: self.params,
            seed: self.seed,
        }
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Samples `[start, end)` with the same metadata.
    pub fn window(&self, start: usize, end: usize) -> Self {
        self.with_samples(self.samples[start..end].to_vec())
    }

    /// SHA-256 based digest of the exact sample bits.
    pub fn digest(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for s in &self.samples {
            h.update(s.re.to_bits().to_be_bytes());
            h.update(s.im.to_bits().to_be_bytes());
        }
        let out = h.finalize();
        u64::from_be_bytes(out[..8].try_into().expect("sha256 is 32 bytes"))
    }
}

/// Evaluates the sum of sinusoids at `t_k = k / f_p`, `k = 0..n`.
pub fn synthesize_trace(components: &[MultipathComponent], f_p: f64, n: usize) -> Result<ChannelTrace> {
    if components.is_empty() {
        return Err(Error::NoComponents);
    }
    if n == 0 || !(f_p > 0.0) {
        return Err(Error::invalid("need n >= 1 and f_P > 0"));
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    for comp in components {
        let step = 2.0 * PI * comp.doppler() / f_p;
        for (k, s) in samples.iter_mut().enumerate() {
            *s += Complex64::from_polar(comp.amplitude, comp.phase + step * k as f64);
        }
    }
    Ok(ChannelTrace::new(samples, 1.0 / f_p))
}

/// Element-wise modulus.
pub fn envelope(trace: &ChannelTrace) -> Vec<f64> {
    trace.samples.iter().map(|s| s.norm()).collect()
}

/// A synthesised channel together with what produced it.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub components: Vec<MultipathComponent>,
    pub bounds: DopplerBounds,
    pub trace: ChannelTrace,
}

/// Draws components from the `(seed, CHANNEL)` stream and synthesises
/// `n_samples` probes at the configured probing rate.
pub fn realize(params: &V2VChannelParams, seed: u64) -> Result<ChannelRealization> {
    let bounds = doppler_bounds(params)?;
    let mut rng = rng::stream(seed, &[rng::label::CHANNEL]);
    let components = draw_components(params, &mut rng)?;
    let mut trace = synthesize_trace(&components, bounds.f_p, params.n_samples)?;
    trace.params = Some(*params);
    trace.seed = Some(seed);
    Ok(ChannelRealization {
        components,
        bounds,
        trace,
    })
}

/// Magnitude-squared DFT of `samples`, returned as `(frequency_hz, power)`
/// pairs ordered from `-fs/2` upward. With `hann`, a Hann taper is applied
/// first.
pub fn periodogram(samples: &[Complex64], sample_rate: f64, hann: bool) -> Vec<(f64, f64)> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = if hann && n > 1 {
        samples
            .iter()
            .enumerate()
            .map(|(i, s)| s * (0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
            .collect()
    } else {
        samples.to_vec()
    };
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    (0..n)
        .map(|i| {
            // Output index 0 is the most negative frequency.
            let k = i as isize - half as isize;
            let bin = k.rem_euclid(n as isize) as usize;
            (k as f64 * sample_rate / n as f64, buf[bin].norm_sqr())
        })
        .collect()
}
