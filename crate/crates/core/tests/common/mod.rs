//! Shared helpers for the integration and acceptance targets.

#![allow(dead_code)]

use std::path::PathBuf;

use v2vkey::bits::BitString;
use v2vkey::channel::max_doppler;
use v2vkey::metrics::{entropy_per_bit, estimate_pe, mismatch_prob, secret_bit_rate};
use v2vkey::quantize::{doppler_correlation, DopplerSpectrum};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn rows(name: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(data_path(name))
        .expect("fixture exists")
        .records()
        .map(|r| r.expect("fixture parses"))
        .collect()
}

fn num(r: &csv::StringRecord, i: usize) -> f64 {
    r[i].parse().expect("numeric fixture field")
}

fn rel(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// Worst relative error of one closed form against its high-precision
/// fixture, with the number of cases checked.
#[derive(Debug, Clone, Copy)]
pub struct OracleCheck {
    pub name: &'static str,
    pub cases: usize,
    pub worst_rel: f64,
}

fn check(name: &'static str, file: &str, eval: impl Fn(&csv::StringRecord) -> Vec<(f64, f64)>) -> OracleCheck {
    let recs = rows(file);
    let worst_rel = recs
        .iter()
        .flat_map(|r| eval(r))
        .map(|(got, want)| rel(got, want))
        .fold(0.0, f64::max);
    OracleCheck { name, cases: recs.len(), worst_rel }
}

fn spectrum(field: &str) -> DopplerSpectrum {
    DopplerSpectrum {
        bins: field.split(';').map(|s| s.parse().expect("bin")).collect(),
        normalized: true,
    }
}

pub fn closed_form_checks() -> Vec<OracleCheck> {
    vec![
        check("max Doppler / coherence time", "doppler_bounds.csv", |r| {
            let u = max_doppler(num(r, 0), num(r, 1), num(r, 2), num(r, 3), num(r, 4));
            vec![(u, num(r, 5)), (1.0 / u, num(r, 6))]
        }),
        check("binary entropy", "entropy.csv", |r| {
            vec![(entropy_per_bit(num(r, 0)).unwrap(), num(r, 1))]
        }),
        check("secret bit rate", "secret_bit_rate.csv", |r| {
            vec![(secret_bit_rate(num(r, 0), num(r, 1)), num(r, 2))]
        }),
        check("block mismatch probability", "mismatch_prob.csv", |r| {
            vec![(mismatch_prob(num(r, 0), r[1].parse().unwrap()), num(r, 2))]
        }),
        check("single-bit error probability", "estimate_pe.csv", |r| {
            let bits = |s: &str| BitString::from_bits(s.bytes().map(|c| c - b'0'));
            vec![(estimate_pe(&bits(&r[0]), &bits(&r[1])).unwrap(), num(r, 2))]
        }),
        check("Doppler correlation", "doppler_correlation.csv", |r| {
            vec![(doppler_correlation(&spectrum(&r[0]), &spectrum(&r[1])).unwrap(), num(r, 2))]
        }),
    ]
}
