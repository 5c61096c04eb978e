//! Experiment configuration and its flat `key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! channel.L = 20
//! nr.sigma2 = 0.01
//! sweep.sigma2 = 1e-4, 1e-3, 1e-2, 1e-1
//! turbo.puncture = adaptive
//! ```
//!
//! Every key has a default; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::channel::{Normalization, V2VChannelParams};
use crate::error::{Error, Result};
use crate::quantize::RefreshPolicy;
use crate::reciprocity::NonReciprocityModel;
use crate::turbo::{Algorithm, Puncture, TurboConfig};

/// Which key-generation branches a session runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSelection {
    Indexing,
    TurboNR,
    Both,
}

impl SchemeSelection {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "indexing" => Some(Self::Indexing),
            "turbo" => Some(Self::TurboNR),
            "both" => Some(Self::Both),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Indexing => "indexing",
            Self::TurboNR => "turbo",
            Self::Both => "both",
        }
    }
}

/// Reconciliation code rate policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatePolicy {
    Fixed(Puncture),
    /// Pick the lightest puncturing whose success region covers `p_hat`:
    /// period 4 up to `period4_max`, half rate up to `half_rate_max`,
    /// rate 1/3 above.
    Adaptive { period4_max: f64, half_rate_max: f64 },
}

impl RatePolicy {
    pub fn select(&self, p_hat: f64) -> Puncture {
        match *self {
            RatePolicy::Fixed(p) => p,
            RatePolicy::Adaptive { period4_max, half_rate_max } => {
                if p_hat <= period4_max {
                    Puncture::Period(4)
                } else if p_hat <= half_rate_max {
                    Puncture::HalfRate
                } else {
                    Puncture::None
                }
            }
        }
    }
}

impl Default for RatePolicy {
    fn default() -> Self {
        RatePolicy::Adaptive {
            period4_max: 0.05,
            half_rate_max: 0.09,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantConfig {
    pub gamma: f64,
    pub m: usize,
    pub fraction: f64,
    pub refresh: RefreshPolicy,
    /// Probe pairs at the start of a session spent on discrepancy
    /// estimation; excluded from key material.
    pub calibration_len: usize,
    /// Run excursion indexing on the compensated trace instead of the raw
    /// one.
    pub indexing_compensated: bool,
    pub entropy_window: usize,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self {
            gamma: 0.35,
            m: 5,
            fraction: 1.0,
            refresh: RefreshPolicy::default(),
            calibration_len: 256,
            indexing_compensated: false,
            entropy_window: 64,
        }
    }
}

/// Axes swept by [`run_sweep`](super::run_sweep).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub sigma2: Vec<f64>,
    pub key_lens: Vec<usize>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            sigma2: vec![1e-4, 1e-3, 1e-2, 1e-1],
            key_lens: vec![128, 256, 512],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub channel: V2VChannelParams,
    pub nr_model: NonReciprocityModel,
    pub quant: QuantConfig,
    /// Block length, iterations and polynomials; the puncturing is chosen
    /// per session by `rate_policy`.
    pub turbo: TurboConfig,
    pub rate_policy: RatePolicy,
    pub key_len: usize,
    pub scheme: SchemeSelection,
    pub master_seed: u64,
    pub trials: usize,
    /// Session length in simulated channel time; the probe count is
    /// `simulated_minutes * 60 * f_P`.
    pub simulated_minutes: f64,
    pub sweep: SweepGrid,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            channel: V2VChannelParams::default(),
            nr_model: NonReciprocityModel {
                sigma2_true: 0.01,
                mu_true: Complex64::from_polar(3.0, 0.7),
                snr_db: None,
            },
            quant: QuantConfig::default(),
            turbo: TurboConfig {
                block_len: 1024,
                ..TurboConfig::default()
            },
            rate_policy: RatePolicy::default(),
            key_len: 128,
            scheme: SchemeSelection::Both,
            master_seed: 1,
            trials: 3,
            simulated_minutes: 10.0,
            sweep: SweepGrid::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{value}'"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_octal(key: &str, value: &str) -> Result<u32> {
    u32::from_str_radix(value.trim_start_matches("0o"), 8)
        .map_err(|_| Error::Config(format!("{key}: expected an octal polynomial, got '{value}'")))
}

pub(crate) fn parse_puncture(key: &str, value: &str) -> Result<Puncture> {
    match value {
        "none" => Ok(Puncture::None),
        "half" => Ok(Puncture::HalfRate),
        _ => match value.strip_prefix("period:") {
            Some(p) => Ok(Puncture::Period(parse_num(key, p)?)),
            None => Err(Error::Config(format!(
                "{key}: expected adaptive, none, half or period:N, got '{value}'"
            ))),
        },
    }
}

fn puncture_text(p: Puncture) -> String {
    match p {
        Puncture::None => "none".into(),
        Puncture::HalfRate => "half".into(),
        Puncture::Period(n) => format!("period:{n}"),
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Parses the text format on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim();
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
        }
        let mut cfg = Self::default();
        for (k, v) in &entries {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one dotted key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let ch = &mut self.channel;
        match key {
            "channel.L" => ch.num_paths = parse_num(key, v)?,
            "channel.carrier_hz" => ch.carrier_hz = parse_num(key, v)?,
            "channel.propagation_speed" => ch.propagation_speed = parse_num(key, v)?,
            "channel.tx_speed" => ch.tx_speed = parse_num(key, v)?,
            "channel.rx_speed" => ch.rx_speed = parse_num(key, v)?,
            "channel.azimuth_tx_min" => ch.azimuth_tx.min = parse_num(key, v)?,
            "channel.azimuth_tx_max" => ch.azimuth_tx.max = parse_num(key, v)?,
            "channel.azimuth_rx_min" => ch.azimuth_rx.min = parse_num(key, v)?,
            "channel.azimuth_rx_max" => ch.azimuth_rx.max = parse_num(key, v)?,
            "channel.elevation_tx_min" => ch.elevation_tx.min = parse_num(key, v)?,
            "channel.elevation_tx_max" => ch.elevation_tx.max = parse_num(key, v)?,
            "channel.elevation_rx_min" => ch.elevation_rx.min = parse_num(key, v)?,
            "channel.elevation_rx_max" => ch.elevation_rx.max = parse_num(key, v)?,
            "channel.weibull_shape" => ch.weibull_shape = parse_num(key, v)?,
            "channel.weibull_scale" => ch.weibull_scale = parse_num(key, v)?,
            "channel.scatterer_speed_max" => ch.scatterer_speed_max = parse_num(key, v)?,
            "channel.normalization" => {
                ch.normalization = match v {
                    "sqrt2_over_l" => Normalization::Sqrt2OverL,
                    "unit_power" => Normalization::UnitPower,
                    _ => return Err(Error::Config(format!("{key}: expected sqrt2_over_l or unit_power"))),
                }
            }
            "channel.n_samples" => ch.n_samples = parse_num(key, v)?,
            "channel.probe_rate_factor" => ch.probe_rate_factor = parse_num(key, v)?,
            "nr.sigma2" => self.nr_model.sigma2_true = parse_num(key, v)?,
            "nr.mu_re" => self.nr_model.mu_true.re = parse_num(key, v)?,
            "nr.mu_im" => self.nr_model.mu_true.im = parse_num(key, v)?,
            "nr.snr_db" => {
                self.nr_model.snr_db = if v == "none" { None } else { Some(parse_num(key, v)?) }
            }
            "quant.gamma" => self.quant.gamma = parse_num(key, v)?,
            "quant.m" => self.quant.m = parse_num(key, v)?,
            "quant.fraction" => self.quant.fraction = parse_num(key, v)?,
            "quant.region_budget" => self.quant.refresh.region_budget = parse_num(key, v)?,
            "quant.rho_threshold" => self.quant.refresh.rho_threshold = parse_num(key, v)?,
            "quant.spectrum_window" => self.quant.refresh.spectrum_window = parse_num(key, v)?,
            "quant.estimation_window" => self.quant.refresh.estimation_window = parse_num(key, v)?,
            "quant.calibration_len" => self.quant.calibration_len = parse_num(key, v)?,
            "quant.indexing_compensated" => self.quant.indexing_compensated = parse_bool(key, v)?,
            "quant.entropy_window" => self.quant.entropy_window = parse_num(key, v)?,
            "turbo.constraint_length" => self.turbo.rsc.constraint_length = parse_num(key, v)?,
            "turbo.feedback" => self.turbo.rsc.feedback_poly = parse_octal(key, v)?,
            "turbo.feedforward" => self.turbo.rsc.feedforward_poly = parse_octal(key, v)?,
            "turbo.block_len" => self.turbo.block_len = parse_num(key, v)?,
            "turbo.iterations" => self.turbo.iterations = parse_num(key, v)?,
            "turbo.extrinsic_scale" => self.turbo.extrinsic_scale = parse_num(key, v)?,
            "turbo.algorithm" => {
                self.turbo.algorithm = match v {
                    "logmap" => Algorithm::LogMap,
                    "maxlogmap" => Algorithm::MaxLogMap,
                    _ => return Err(Error::Config(format!("{key}: expected logmap or maxlogmap"))),
                }
            }
            "turbo.puncture" => {
                self.rate_policy = if v == "adaptive" {
                    RatePolicy::default()
                } else {
                    RatePolicy::Fixed(parse_puncture(key, v)?)
                }
            }
            "key_len" => self.key_len = parse_num(key, v)?,
            "scheme" => {
                self.scheme = SchemeSelection::parse(v)
                    .ok_or_else(|| Error::Config(format!("{key}: expected indexing, turbo or both")))?
            }
            "master_seed" => self.master_seed = parse_num(key, v)?,
            "trials" => self.trials = parse_num(key, v)?,
            "simulated_minutes" => self.simulated_minutes = parse_num(key, v)?,
            "sweep.sigma2" => self.sweep.sigma2 = parse_list(key, v)?,
            "sweep.key_len" => self.sweep.key_lens = parse_list(key, v)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.channel.validate().map_err(wrap)?;
        self.nr_model.validate().map_err(wrap)?;
        self.turbo.validate().map_err(wrap)?;
        if let RatePolicy::Fixed(p) = self.rate_policy {
            TurboConfig { puncture: p, ..self.turbo }.validate().map_err(wrap)?;
        }
        let q = &self.quant;
        let checks = [
            (self.trials >= 1, "trials must be at least 1"),
            (self.key_len >= 1, "key_len must be positive"),
            (self.simulated_minutes > 0.0, "simulated_minutes must be positive"),
            (q.gamma >= 0.0, "quant.gamma must be non-negative"),
            (q.m >= 1, "quant.m must be at least 1"),
            (q.fraction > 0.0 && q.fraction <= 1.0, "quant.fraction must be in (0, 1]"),
            (q.refresh.region_budget >= 1, "quant.region_budget must be at least 1"),
            (q.refresh.spectrum_window >= 2, "quant.spectrum_window must be at least 2"),
            (q.refresh.estimation_window >= 2, "quant.estimation_window must be at least 2"),
            (q.calibration_len >= 2, "quant.calibration_len must be at least 2"),
            (q.entropy_window >= 8, "quant.entropy_window must be at least 8"),
            (!self.sweep.sigma2.is_empty(), "sweep.sigma2 must not be empty"),
            (!self.sweep.key_lens.is_empty(), "sweep.key_len must not be empty"),
            (self.sweep.sigma2.iter().all(|s| *s >= 0.0), "sweep.sigma2 values must be non-negative"),
            (self.sweep.key_lens.iter().all(|k| *k >= 1), "sweep.key_len values must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config((*msg).to_string())),
            None => Ok(()),
        }
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let ch = &self.channel;
        let q = &self.quant;
        let t = &self.turbo;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("channel.L", ch.num_paths.to_string());
        kv("channel.carrier_hz", ch.carrier_hz.to_string());
        kv("channel.propagation_speed", ch.propagation_speed.to_string());
        kv("channel.tx_speed", ch.tx_speed.to_string());
        kv("channel.rx_speed", ch.rx_speed.to_string());
        kv("channel.azimuth_tx_min", ch.azimuth_tx.min.to_string());
        kv("channel.azimuth_tx_max", ch.azimuth_tx.max.to_string());
        kv("channel.azimuth_rx_min", ch.azimuth_rx.min.to_string());
        kv("channel.azimuth_rx_max", ch.azimuth_rx.max.to_string());
        kv("channel.elevation_tx_min", ch.elevation_tx.min.to_string());
        kv("channel.elevation_tx_max", ch.elevation_tx.max.to_string());
        kv("channel.elevation_rx_min", ch.elevation_rx.min.to_string());
        kv("channel.elevation_rx_max", ch.elevation_rx.max.to_string());
        kv("channel.weibull_shape", ch.weibull_shape.to_string());
        kv("channel.weibull_scale", ch.weibull_scale.to_string());
        kv("channel.scatterer_speed_max", ch.scatterer_speed_max.to_string());
        kv(
            "channel.normalization",
            match ch.normalization {
                Normalization::Sqrt2OverL => "sqrt2_over_l",
                Normalization::UnitPower => "unit_power",
            }
            .into(),
        );
        kv("channel.n_samples", ch.n_samples.to_string());
        kv("channel.probe_rate_factor", ch.probe_rate_factor.to_string());
        kv("nr.sigma2", self.nr_model.sigma2_true.to_string());
        kv("nr.mu_re", self.nr_model.mu_true.re.to_string());
        kv("nr.mu_im", self.nr_model.mu_true.im.to_string());
        kv("nr.snr_db", self.nr_model.snr_db.map_or("none".into(), |x| x.to_string()));
        kv("quant.gamma", q.gamma.to_string());
        kv("quant.m", q.m.to_string());
        kv("quant.fraction", q.fraction.to_string());
        kv("quant.region_budget", q.refresh.region_budget.to_string());
        kv("quant.rho_threshold", q.refresh.rho_threshold.to_string());
        kv("quant.spectrum_window", q.refresh.spectrum_window.to_string());
        kv("quant.estimation_window", q.refresh.estimation_window.to_string());
        kv("quant.calibration_len", q.calibration_len.to_string());
        kv("quant.indexing_compensated", q.indexing_compensated.to_string());
        kv("quant.entropy_window", q.entropy_window.to_string());
        kv("turbo.constraint_length", t.rsc.constraint_length.to_string());
        kv("turbo.feedback", format!("{:o}", t.rsc.feedback_poly));
        kv("turbo.feedforward", format!("{:o}", t.rsc.feedforward_poly));
        kv("turbo.block_len", t.block_len.to_string());
        kv("turbo.iterations", t.iterations.to_string());
        kv("turbo.extrinsic_scale", t.extrinsic_scale.to_string());
        kv(
            "turbo.algorithm",
            match t.algorithm {
                Algorithm::LogMap => "logmap",
                Algorithm::MaxLogMap => "maxlogmap",
            }
            .into(),
        );
        kv(
            "turbo.puncture",
            match self.rate_policy {
                RatePolicy::Fixed(p) => puncture_text(p),
                RatePolicy::Adaptive { .. } => "adaptive".into(),
            },
        );
        kv("key_len", self.key_len.to_string());
        kv("scheme", self.scheme.name().into());
        kv("master_seed", self.master_seed.to_string());
        kv("trials", self.trials.to_string());
        kv("simulated_minutes", self.simulated_minutes.to_string());
        kv("sweep.sigma2", join(&self.sweep.sigma2));
        kv("sweep.key_len", join(&self.sweep.key_lens));
        s
    }

    /// 64-bit digest of the canonical text form.
    pub fn fingerprint(&self) -> u64 {
        let digest = Sha256::digest(self.to_text().as_bytes());
        u64::from_be_bytes(digest[..8].try_into().expect("sha256 is 32 bytes"))
    }
}
