//! Closed-form and empirical key-generation metrics.
//!
//! Run with `cargo run --release --example metrics`.

use rand::Rng;
use v2vkey::bits::BitString;
use v2vkey::metrics::{empirical_entropy, entropy_per_bit, estimate_pe, measure_kgr, mismatch_prob, secret_bit_rate, KeyRecord};
use v2vkey::rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for p0 in [0.5, 0.3, 0.1] {
        println!("H({p0}) = {:.4} bits", entropy_per_bit(p0)?);
    }
    for p_e in [0.001, 0.01, 0.05] {
        println!("p_e {p_e}: P(128-bit key mismatch) = {:.4}", mismatch_prob(p_e, 128));
    }
    println!("f_P 2065 Hz, p_joint 0.2: {:.0} secret bits/s", secret_bit_rate(2065.0, 0.2));

    let mut r = rng::stream(5, &[]);
    let a: BitString = (0..10_000).map(|_| r.random_range(0..2u8)).collect();
    let b: BitString = a.iter().map(|x| x ^ u8::from(r.random_bool(0.02))).collect();
    println!("estimated p_e {:.4}, entropy {:.4}", estimate_pe(&a, &b)?, empirical_entropy(&a, 64)?.mean);

    let keys = vec![KeyRecord { len: 128, verified: true }; 25];
    println!("25 keys in 10 s: {:.0} keys/min", measure_kgr(&keys, 128, 10.0)?);
    Ok(())
}
