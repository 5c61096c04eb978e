//! One block of turbo reconciliation followed by privacy amplification.
//!
//! Run with `cargo run --release --example reconciliation`.

use rand::Rng;
use v2vkey::bits::BitString;
use v2vkey::reconcile::{alice_reconcile, bob_prepare, privacy_amplify, verify_keys, KeyMaterial};
use v2vkey::rng;
use v2vkey::turbo::{Puncture, TurboCodec, TurboConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let codec = TurboCodec::new(TurboConfig { block_len: 1024, puncture: Puncture::Period(4), interleaver_seed: 9, ..Default::default() })?;
    let mut r = rng::stream(9, &[]);
    let bob: BitString = (0..1024).map(|_| r.random_range(0..2u8)).collect();
    let p = 0.03;
    let alice: BitString = bob.iter().map(|b| b ^ u8::from(r.random_bool(p))).collect();
    println!("block of 1024 bits, {} disagreements", alice.hamming(&bob));

    let msg = bob_prepare(&codec, 0, &bob)?;
    println!("Bob publishes {} bytes", msg.to_bytes().len());
    let km = alice_reconcile(&codec, &alice, &msg, p)?;
    println!("Alice decoded, verified {}, leaked {} bits", km.verified, km.leaked_bits);

    let bob_km = KeyMaterial { bits: bob, leaked_bits: km.leaked_bits, verified: true };
    let out = 1024 - km.leaked_bits;
    let ka = privacy_amplify(&km, 42, out)?;
    let kb = privacy_amplify(&bob_km, 42, out)?;
    println!("amplified to {out} bits, keys agree: {}", verify_keys(&ka, &kb));
    Ok(())
}
