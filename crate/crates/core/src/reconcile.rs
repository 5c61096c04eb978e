//! Side-information reconciliation and privacy amplification.
//!
//! Bob turbo-encodes his block and publishes only the parity and tail bits
//! together with a 64-bit check value. Alice decodes using her own
//! correlated bits as the noisy systematic stream and accepts the result
//! when its check value matches. Every published bit is counted as leaked
//! and removed again by a Toeplitz hash.

use crate::bits::BitString;
use crate::error::{Error, ReconciliationFailed, Result};
use crate::rng::{self, label};
use crate::turbo::{bits_to_llr, TurboCodec, TurboLlrs, LLR_MAX};
use rand::Rng;

/// Width of the check value in bits.
pub const CHECK_BITS: usize = 64;

/// Public message from Bob for one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconciliationMessage {
    pub block_id: u32,
    pub interleaver_seed: u64,
    /// Punctured parity 1, punctured parity 2, then the tail.
    pub parity_payload: BitString,
    pub check_value: u64,
}

impl ReconciliationMessage {
    /// Big-endian layout: block id (4), seed (8), payload bit count (4),
    /// payload packed MSB-first, check value (8).
    pub fn to_bytes(&self) -> Vec<u8> {
        let packed = self.parity_payload.pack_msb_first();
        let mut out = Vec::with_capacity(24 + packed.len());
        out.extend_from_slice(&self.block_id.to_be_bytes());
        out.extend_from_slice(&self.interleaver_seed.to_be_bytes());
        out.extend_from_slice(&(self.parity_payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&packed);
        out.extend_from_slice(&self.check_value.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let malformed = |what: &str| Error::MalformedMessage(what.to_string());
        if bytes.len() < 24 {
            return Err(malformed("message shorter than its fixed fields"));
        }
        let block_id = u32::from_be_bytes(bytes[0..4].try_into().expect("4 bytes"));
        let interleaver_seed = u64::from_be_bytes(bytes[4..12].try_into().expect("8 bytes"));
        let bit_count = u32::from_be_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        let payload_bytes = bit_count.div_ceil(8);
        if bytes.len() != 24 + payload_bytes {
            return Err(malformed("length does not match payload bit count"));
        }
        let payload = &bytes[16..16 + payload_bytes];
        if bit_count % 8 != 0 && payload[payload_bytes - 1] & (0xff >> (bit_count % 8)) != 0 {
            return Err(malformed("non-zero padding bits"));
        }
        let check_value = u64::from_be_bytes(bytes[16 + payload_bytes..].try_into().expect("8 bytes"));
        Ok(Self {
            block_id,
            interleaver_seed,
            parity_payload: BitString::unpack_msb_first(payload, bit_count)?,
            check_value,
        })
    }
}

/// Reconciled bits with their public-disclosure tally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    pub bits: BitString,
    pub leaked_bits: usize,
    pub verified: bool,
}

/// Bob's side: encode and publish parity, tail and check value.
pub fn bob_prepare(codec: &TurboCodec, block_id: u32, bob_bits: &BitString) -> Result<ReconciliationMessage> {
    let cw = codec.encode(bob_bits)?;
    let mut payload = cw.parity1;
    payload.extend_from(&cw.parity2);
    payload.extend_from(&cw.tail);
    Ok(ReconciliationMessage {
        block_id,
        interleaver_seed: codec.config().interleaver_seed,
        parity_payload: payload,
        check_value: bob_bits.check_value(),
    })
}

/// Alice's side: decode towards Bob's block.
///
/// `p_hat` is the estimated crossover between the two strings. A check-value
/// mismatch is returned as [`Error::Reconciliation`] carrying the decoded
/// block.
pub fn alice_reconcile(
    codec: &TurboCodec,
    alice_bits: &BitString,
    msg: &ReconciliationMessage,
    p_hat: f64,
) -> Result<KeyMaterial> {
    let cfg = codec.config();
    Error::check_len(alice_bits.len(), cfg.block_len)?;
    if msg.interleaver_seed != cfg.interleaver_seed {
        return Err(Error::MalformedMessage("interleaver seed differs from the codec".into()));
    }
    if msg.parity_payload.len() != cfg.disclosed_len() {
        return Err(Error::MalformedMessage(format!(
            "payload has {} bits, expected {}",
            msg.parity_payload.len(),
            cfg.disclosed_len()
        )));
    }
    let known: Vec<f64> = msg
        .parity_payload
        .iter()
        .map(|b| if b == 0 { LLR_MAX } else { -LLR_MAX })
        .collect();
    let n1 = (0..cfg.block_len).filter(|&k| cfg.puncture.keeps(1, k)).count();
    let n2 = known.len() - cfg.tail_len() - n1;
    let llrs = TurboLlrs {
        systematic: bits_to_llr(alice_bits, p_hat)?,
        parity1: codec.depuncture(1, &known[..n1])?,
        parity2: codec.depuncture(2, &known[n1..n1 + n2])?,
        tail: known[n1 + n2..].to_vec(),
    };
    let decoded = codec.decode(&llrs)?;
    if decoded.bits.check_value() != msg.check_value {
        return Err(ReconciliationFailed {
            decoded: decoded.bits,
            iterations: decoded.iterations_used,
        }
        .into());
    }
    Ok(KeyMaterial {
        bits: decoded.bits,
        leaked_bits: msg.parity_payload.len() + CHECK_BITS,
        verified: true,
    })
}

/// Toeplitz hash of `km.bits` down to `out_len` bits. The matrix
/// `T[i][j] = r[i - j + n - 1]` is drawn from `seed`; at most
/// `|bits| - leaked_bits` bits may be requested.
pub fn privacy_amplify(km: &KeyMaterial, seed: u64, out_len: usize) -> Result<BitString> {
    if !km.verified {
        return Err(Error::invalid("key material is not verified"));
    }
    let n = km.bits.len();
    let available = n.saturating_sub(km.leaked_bits);
    if out_len > available {
        return Err(Error::InsufficientEntropy {
            requested: out_len,
            available,
        });
    }
    if out_len == 0 {
        return Ok(BitString::new());
    }
    let mut stream = rng::stream(seed, &[label::PRIVACY]);
    let r: Vec<u8> = (0..n + out_len - 1).map(|_| stream.random_range(0..2u8)).collect();
    // Row i of T, read left to right, is r[i + n - 1], r[i + n - 2], ...,
    // r[i]: a contiguous window of the reversed sequence.
    let rev: Vec<u8> = r.iter().rev().copied().collect();
    let x = km.bits.as_slice();
    Ok((0..out_len)
        .map(|i| {
            let row = &rev[out_len - 1 - i..out_len - 1 - i + n];
            row.iter().zip(x).fold(0u8, |acc, (a, b)| acc ^ (a & b))
        })
        .collect())
}

/// Equal length and content.
pub fn verify_keys(a: &BitString, b: &BitString) -> bool {
    a.as_slice() == b.as_slice()
}
