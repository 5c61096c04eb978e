//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on configuration or usage errors, 2 on I/O
//! errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::channel;
use crate::error::{Error, Result};
use crate::harness::{self, ExperimentConfig, SchemeSelection};
use crate::rng::{self, label};
use crate::turbo::{TurboCodec, TurboConfig};

#[derive(Debug, Parser)]
#[command(name = "v2vkey", version, about = "Vehicular physical-layer key generation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured sweep and write trial and aggregate rows as CSV.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// indexing, turbo or both; overrides `scheme`.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        /// Also draw BMR and KGR against sigma2 as SVG.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Emit one synthesized channel trace as CSV of index,re,im,envelope.
    Channel {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Overrides `channel.n_samples`.
        #[arg(long)]
        samples: Option<usize>,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turbo codec BER and FER against BSC crossover probability.
    TurboBench {
        /// Comma-separated crossover probabilities.
        #[arg(long, default_value = "0.01,0.02,0.04,0.06,0.08,0.1")]
        p_grid: String,
        #[arg(long, default_value_t = 512)]
        block_len: usize,
        #[arg(long, default_value_t = 8)]
        iterations: usize,
        #[arg(long, default_value_t = 100)]
        blocks: usize,
        /// none, half or period:N.
        #[arg(long, default_value = "none")]
        puncture: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare both schemes from one or more sweep CSVs.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Also write the comparison as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 2,
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => 2,
        _ => 1,
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { config, seed, trials, scheme, out, plot } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = scheme {
                cfg.scheme = SchemeSelection::parse(&s)
                    .ok_or_else(|| Error::Config(format!("--scheme: expected indexing, turbo or both, got '{s}'")))?;
            }
            let rows = harness::run_sweep(&cfg, &out)?;
            if let Some(p) = plot {
                std::fs::write(p, harness::plot_svg(&rows))?;
            }
            if cfg.scheme == SchemeSelection::Both {
                print!("{}", harness::emit_comparison(&rows)?.to_text());
            } else {
                for r in rows.iter().filter(|r| r.is_aggregate()) {
                    println!(
                        "{} key_len {} sigma2 {:e}: BMR {:.5}, KGR {:.2} keys/min",
                        r.scheme, r.key_len, r.sigma2, r.bmr, r.kgr_keys_per_min
                    );
                }
            }
            Ok(())
        }
        Command::Channel { config, seed, trial, samples, out } => {
            let cfg = load_config(config.as_deref())?;
            let mut params = cfg.channel;
            if let Some(n) = samples {
                params.n_samples = n;
            }
            let master = seed.unwrap_or(cfg.master_seed);
            let trace = channel::realize(&params, rng::derive_u64(master, &[trial, label::CHANNEL]))
                .map_err(|e| Error::Config(e.to_string()))?
                .trace;
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(["index", "re", "im", "envelope"])?;
            for (i, z) in trace.samples.iter().enumerate() {
                w.write_record([i.to_string(), z.re.to_string(), z.im.to_string(), z.norm().to_string()])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::TurboBench { p_grid, block_len, iterations, blocks, puncture, seed, out } => {
            let grid = p_grid
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("--p-grid: cannot parse '{s}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = TurboConfig {
                block_len,
                iterations,
                puncture: harness::parse_puncture("--puncture", &puncture)?,
                interleaver_seed: rng::derive_u64(seed, &[label::INTERLEAVER]),
                ..TurboConfig::default()
            };
            let codec = TurboCodec::new(cfg).map_err(|e| Error::Config(e.to_string()))?;
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(["p", "block_len", "iterations", "blocks", "ber", "fer", "mean_iterations"])?;
            for p in grid {
                let pt = harness::turbo_ber(&codec, p, blocks, seed).map_err(|e| Error::Config(e.to_string()))?;
                w.write_record([
                    p.to_string(),
                    block_len.to_string(),
                    iterations.to_string(),
                    blocks.to_string(),
                    pt.ber.to_string(),
                    pt.fer.to_string(),
                    pt.mean_iterations.to_string(),
                ])?;
                w.flush()?;
            }
            Ok(())
        }
        Command::Report { inputs, out } => {
            let mut rows = Vec::new();
            for p in &inputs {
                rows.extend(harness::read_rows(p)?);
            }
            let cmp = harness::emit_comparison(&rows)?;
            print!("{}", cmp.to_text());
            if let Some(p) = out {
                cmp.write_csv(File::create(p)?)?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(run(["v2vkey", "simulate", "--bogus"]), 1);
        assert_eq!(run(["v2vkey"]), 1);
        assert_eq!(run(["v2vkey", "--help"]), 0);
    }

    #[test]
    fn config_and_io_errors_are_distinguished() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, "nonsense.key = 3\n").unwrap();
        let bad = bad.to_str().unwrap();
        assert_eq!(run(["v2vkey", "simulate", "--config", bad]), 1);
        assert_eq!(run(["v2vkey", "simulate", "--scheme", "neither"]), 1);
        assert_eq!(run(["v2vkey", "simulate", "--out", "/nonexistent-dir/x.csv"]), 2);
        assert_eq!(run(["v2vkey", "report", "/nonexistent-dir/x.csv"]), 2);
    }

    #[test]
    fn channel_trace_csv() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("trace.csv");
        assert_eq!(run(["v2vkey", "channel", "--samples", "100", "--out", out.to_str().unwrap()]), 0);
        let text = std::fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,re,im,envelope");
        assert_eq!(lines.len(), 101);
        let f: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
        assert!((f[1].hypot(f[2]) - f[3]).abs() < 1e-12);
    }

    #[test]
    fn turbo_bench_rows() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("ber.csv");
        let args = ["v2vkey", "turbo-bench", "--p-grid", "0.01,0.3", "--block-len", "64", "--blocks", "5"];
        assert_eq!(run(args.into_iter().chain(["--out", out.to_str().unwrap()])), 0);
        assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 3);
        assert_eq!(run(["v2vkey", "turbo-bench", "--p-grid", "x"]), 1);
    }
}
