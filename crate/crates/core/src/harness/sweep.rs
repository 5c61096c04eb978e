//! Grid sweeps written as CSV.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::session::{simulate_session, SessionOutcome};
use crate::error::{Error, Result};
use crate::metrics::{Scheme, SessionReport};

/// Column names; the last column is a wall-clock timestamp that is excluded
/// from reproducibility comparisons.
pub const CSV_HEADER: [&str; 19] = [
    "point_id",
    "trial",
    "scheme",
    "key_len",
    "sigma2",
    "f_P_hz",
    "bmr",
    "kgr_keys_per_min",
    "entropy_mean",
    "secret_bit_rate",
    "blocks_attempted",
    "blocks_verified",
    "leaked_bits",
    "raw_bmr",
    "bmr_std",
    "kgr_std",
    "kgr_min",
    "kgr_max",
    "timestamp",
];

/// Marker in the `trial` column of aggregate rows.
pub const AGGREGATE_TRIAL: &str = "mean";

/// One CSV row: a single trial (`trial = Some`) or the aggregate over all
/// trials of a point. Spread columns are only populated on aggregate rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub point_id: usize,
    pub trial: Option<u64>,
    pub scheme: Scheme,
    pub key_len: usize,
    pub sigma2: f64,
    pub f_p_hz: f64,
    pub bmr: f64,
    pub kgr_keys_per_min: f64,
    pub entropy_mean: f64,
    pub secret_bit_rate: f64,
    pub blocks_attempted: usize,
    pub blocks_verified: usize,
    pub leaked_bits: usize,
    pub raw_bmr: f64,
    pub bmr_std: Option<f64>,
    pub kgr_std: Option<f64>,
    pub kgr_min: Option<f64>,
    pub kgr_max: Option<f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::Config(format!("column {}: cannot parse '{raw}'", CSV_HEADER[i])))
}

fn opt_field(rec: &csv::StringRecord, i: usize) -> Result<Option<f64>> {
    match rec.get(i) {
        None | Some("") => Ok(None),
        Some(_) => field(rec, i).map(Some),
    }
}

impl CsvRow {
    fn from_report(point_id: usize, trial: u64, r: &SessionReport) -> Self {
        Self {
            point_id,
            trial: Some(trial),
            scheme: r.scheme,
            key_len: r.key_len,
            sigma2: r.sigma2,
            f_p_hz: r.f_p_hz,
            bmr: r.bmr,
            kgr_keys_per_min: r.kgr_keys_per_min,
            entropy_mean: r.entropy_per_bit_mean,
            secret_bit_rate: r.secret_bit_rate,
            blocks_attempted: r.blocks_attempted,
            blocks_verified: r.blocks_verified,
            leaked_bits: r.leaked_bits_total,
            raw_bmr: r.raw_bmr,
            bmr_std: None,
            kgr_std: None,
            kgr_min: None,
            kgr_max: None,
        }
    }

    /// Mean over `rows`, with the spread of BMR and KGR. Block and leakage
    /// counts are totals.
    pub fn aggregate(rows: &[CsvRow]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput)?;
        let col = |f: fn(&CsvRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        let kgr = col(|r| r.kgr_keys_per_min);
        let bmr = col(|r| r.bmr);
        Ok(Self {
            trial: None,
            bmr: nan_mean(&bmr),
            kgr_keys_per_min: nan_mean(&kgr),
            entropy_mean: nan_mean(&col(|r| r.entropy_mean)),
            secret_bit_rate: nan_mean(&col(|r| r.secret_bit_rate)),
            raw_bmr: nan_mean(&col(|r| r.raw_bmr)),
            blocks_attempted: rows.iter().map(|r| r.blocks_attempted).sum(),
            blocks_verified: rows.iter().map(|r| r.blocks_verified).sum(),
            leaked_bits: rows.iter().map(|r| r.leaked_bits).sum(),
            bmr_std: Some(nan_std(&bmr)),
            kgr_std: Some(nan_std(&kgr)),
            kgr_min: Some(kgr.iter().copied().fold(f64::INFINITY, f64::min)),
            kgr_max: Some(kgr.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            ..first.clone()
        })
    }

    pub fn is_aggregate(&self) -> bool {
        self.trial.is_none()
    }

    fn record(&self, timestamp: u64) -> Vec<String> {
        vec![
            self.point_id.to_string(),
            self.trial.map_or_else(|| AGGREGATE_TRIAL.to_string(), |t| t.to_string()),
            self.scheme.name().to_string(),
            self.key_len.to_string(),
            self.sigma2.to_string(),
            self.f_p_hz.to_string(),
            self.bmr.to_string(),
            self.kgr_keys_per_min.to_string(),
            self.entropy_mean.to_string(),
            self.secret_bit_rate.to_string(),
            self.blocks_attempted.to_string(),
            self.blocks_verified.to_string(),
            self.leaked_bits.to_string(),
            self.raw_bmr.to_string(),
            opt(self.bmr_std),
            opt(self.kgr_std),
            opt(self.kgr_min),
            opt(self.kgr_max),
            timestamp.to_string(),
        ]
    }

    fn parse(rec: &csv::StringRecord) -> Result<Self> {
        let scheme_raw = rec.get(2).unwrap_or("");
        Ok(Self {
            point_id: field(rec, 0)?,
            trial: match rec.get(1) {
                Some(AGGREGATE_TRIAL) => None,
                _ => Some(field(rec, 1)?),
            },
            scheme: Scheme::parse(scheme_raw)
                .ok_or_else(|| Error::Config(format!("unknown scheme '{scheme_raw}'")))?,
            key_len: field(rec, 3)?,
            sigma2: field(rec, 4)?,
            f_p_hz: field(rec, 5)?,
            bmr: field(rec, 6)?,
            kgr_keys_per_min: field(rec, 7)?,
            entropy_mean: field(rec, 8)?,
            secret_bit_rate: field(rec, 9)?,
            blocks_attempted: field(rec, 10)?,
            blocks_verified: field(rec, 11)?,
            leaked_bits: field(rec, 12)?,
            raw_bmr: field(rec, 13)?,
            bmr_std: opt_field(rec, 14)?,
            kgr_std: opt_field(rec, 15)?,
            kgr_min: opt_field(rec, 16)?,
            kgr_max: opt_field(rec, 17)?,
        })
    }
}

fn finite(xs: &[f64]) -> impl Iterator<Item = f64> + '_ {
    xs.iter().copied().filter(|x| !x.is_nan())
}

fn nan_mean(xs: &[f64]) -> f64 {
    let n = finite(xs).count();
    if n == 0 {
        f64::NAN
    } else {
        finite(xs).sum::<f64>() / n as f64
    }
}

fn nan_std(xs: &[f64]) -> f64 {
    let n = finite(xs).count();
    if n < 2 {
        return 0.0;
    }
    let m = nan_mean(xs);
    (finite(xs).map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs every trial at every grid point and writes trial and aggregate rows
/// to `out`.
///
/// The file is created before any simulation, and rows are flushed after
/// each noise level so an interrupted sweep leaves a readable prefix.
/// Trials run concurrently; rows are written in (point, trial) order so
/// the output does not depend on scheduling.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<CsvRow>> {
    cfg.validate()?;
    if cfg.sweep.sigma2.is_empty() || cfg.sweep.key_lens.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let mut w = csv::Writer::from_writer(File::create(out)?);
    w.write_record(CSV_HEADER)?;
    w.flush()?;

    let mut all = Vec::new();
    let key_lens = &cfg.sweep.key_lens;
    for (si, &sigma2) in cfg.sweep.sigma2.iter().enumerate() {
        let mut point = cfg.clone();
        point.nr_model.sigma2_true = sigma2;
        let outcomes = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| simulate_session(&point, t))
            .collect::<Result<Vec<SessionOutcome>>>()?;
        for (ki, &key_len) in key_lens.iter().enumerate() {
            let point_id = si * key_lens.len() + ki;
            let reports: Vec<Vec<SessionReport>> = outcomes.iter().map(|o| o.reports(key_len)).collect();
            let schemes: Vec<Scheme> = reports[0].iter().map(|r| r.scheme).collect();
            for scheme in schemes {
                let rows: Vec<CsvRow> = outcomes
                    .iter()
                    .zip(&reports)
                    .flat_map(|(o, rs)| {
                        rs.iter()
                            .filter(|r| r.scheme == scheme)
                            .map(|r| CsvRow::from_report(point_id, o.trial, r))
                    })
                    .collect();
                let agg = CsvRow::aggregate(&rows)?;
                let ts = unix_now();
                for row in rows.into_iter().chain(std::iter::once(agg)) {
                    w.write_record(row.record(ts))?;
                    all.push(row);
                }
            }
        }
        w.flush()?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))?.flush()?;
    Ok(all)
}

/// Reads a sweep CSV, checking the header.
pub fn read_rows(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if !header.iter().eq(CSV_HEADER.iter().copied()) {
        return Err(Error::Config(format!("{}: unexpected CSV header", path.display())));
    }
    r.records().map(|rec| CsvRow::parse(&rec?)).collect()
}

/// CSV text with the timestamp column dropped, for reproducibility checks.
pub fn strip_timestamps(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Writes rows as CSV with a zero timestamp.
pub fn write_rows<W: Write>(rows: &[CsvRow], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record(0))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: u64, bmr: f64, kgr: f64) -> CsvRow {
        CsvRow {
            point_id: 0,
            trial: Some(trial),
            scheme: Scheme::TurboNR,
            key_len: 128,
            sigma2: 0.01,
            f_p_hz: 1475.0,
            bmr,
            kgr_keys_per_min: kgr,
            entropy_mean: 0.99,
            secret_bit_rate: 700.0,
            blocks_attempted: 10,
            blocks_verified: 9,
            leaked_bits: 5000,
            raw_bmr: 0.03,
            bmr_std: None,
            kgr_std: None,
            kgr_min: None,
            kgr_max: None,
        }
    }

    #[test]
    fn aggregate_means_and_spread() {
        let agg = CsvRow::aggregate(&[row(0, 0.0, 30.0), row(1, f64::NAN, 34.0), row(2, 0.02, 38.0)]).unwrap();
        assert!(agg.is_aggregate());
        assert_eq!(agg.bmr, 0.01);
        assert_eq!(agg.kgr_keys_per_min, 34.0);
        assert_eq!(agg.kgr_std, Some(4.0));
        assert_eq!((agg.kgr_min, agg.kgr_max), (Some(30.0), Some(38.0)));
        assert_eq!(agg.blocks_attempted, 30);
        assert!(CsvRow::aggregate(&[]).is_err());
    }

    #[test]
    fn rows_survive_a_csv_round_trip() {
        let rows = vec![row(0, 0.0, 30.0), CsvRow::aggregate(&[row(0, 0.0, 30.0)]).unwrap()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        write_rows(&rows, File::create(&path).unwrap()).unwrap();
        assert_eq!(read_rows(&path).unwrap(), rows);
    }

    #[test]
    fn foreign_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_rows(&path), Err(Error::Config(_))));
    }

    #[test]
    fn timestamps_are_stripped() {
        assert_eq!(strip_timestamps("a,b,ts\n1,2,999\n"), "a,b\n1,2");
    }

    #[test]
    fn unwritable_path_fails_before_simulating() {
        let cfg = ExperimentConfig::default();
        let err = run_sweep(&cfg, Path::new("/nonexistent-dir/out.csv")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
