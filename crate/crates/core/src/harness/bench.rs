//! Turbo codec bit error rate over a binary symmetric channel.

use rand::Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::error::Result;
use crate::rng::{self, label, SimRng};
use crate::turbo::{TurboCodec, TurboCodeword};

/// Error rates at one crossover probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub p: f64,
    pub bit_errors: usize,
    pub block_errors: usize,
    pub blocks: usize,
    pub ber: f64,
    pub fer: f64,
    pub mean_iterations: f64,
}

fn bsc(bits: &BitString, p: f64, rng: &mut SimRng) -> BitString {
    bits.iter().map(|b| b ^ u8::from(rng.random_bool(p))).collect()
}

/// Encodes `blocks` random blocks, flips every transmitted bit with
/// probability `p` and decodes with the matching channel LLRs. Block `i`
/// draws from its own stream, so results do not depend on scheduling.
pub fn turbo_ber(codec: &TurboCodec, p: f64, blocks: usize, seed: u64) -> Result<BerPoint> {
    let k = codec.config().block_len;
    let per_block = (0..blocks)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize)> {
            let mut r = rng::stream(seed, &[label::BENCH, p.to_bits(), i as u64]);
            let info: BitString = (0..k).map(|_| r.random_range(0..2u8)).collect();
            let cw = codec.encode(&info)?;
            let noisy = TurboCodeword {
                systematic: bsc(&cw.systematic, p, &mut r),
                parity1: bsc(&cw.parity1, p, &mut r),
                parity2: bsc(&cw.parity2, p, &mut r),
                tail: bsc(&cw.tail, p, &mut r),
            };
            let out = codec.decode(&codec.llrs_from_codeword(&noisy, p)?)?;
            Ok((out.bits.hamming(&info), out.iterations_used))
        })
        .collect::<Result<Vec<_>>>()?;
    let bit_errors = per_block.iter().map(|e| e.0).sum();
    let block_errors = per_block.iter().filter(|e| e.0 > 0).count();
    let n = blocks.max(1) as f64;
    Ok(BerPoint {
        p,
        bit_errors,
        block_errors,
        blocks,
        ber: bit_errors as f64 / (n * k as f64),
        fer: block_errors as f64 / n,
        mean_iterations: per_block.iter().map(|e| e.1 as f64).sum::<f64>() / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turbo::TurboConfig;

    #[test]
    fn ber_grows_with_crossover() {
        let codec = TurboCodec::new(TurboConfig { block_len: 256, ..TurboConfig::default() }).unwrap();
        let low = turbo_ber(&codec, 0.02, 20, 3).unwrap();
        let high = turbo_ber(&codec, 0.2, 20, 3).unwrap();
        assert_eq!(low.bit_errors, 0);
        assert!(high.ber > 0.01);
        assert_eq!(turbo_ber(&codec, 0.2, 20, 3).unwrap(), high);
    }
}
