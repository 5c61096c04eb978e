//! Parallel-concatenated (turbo) code: two RSC encoders separated by an
//! interleaver, decoded iteratively by exchanging extrinsic LLRs.
//!
//! Encoder 1 is terminated and its tail is sent unpunctured; encoder 2 is
//! left open. LLRs are positive when bit 0 is the more likely value.

mod bcjr;
mod interleaver;
mod rsc;

pub use bcjr::{bcjr_decode, BcjrOutput};
pub use interleaver::{invert, make_interleaver, permute};
pub use rsc::{rsc_encode, RscOutput, RscSpec, Trellis};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Magnitude limit for every LLR the codec produces or accepts.
pub const LLR_MAX: f64 = 50.0;

/// Soft values, one per bit.
pub type LlrSeq = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    LogMap,
    MaxLogMap,
}

/// Which parity bits are transmitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Puncture {
    /// All parity bits (rate 1/3).
    None,
    /// Parity 1 at even positions, parity 2 at odd ones (rate 1/2).
    HalfRate,
    /// Parity 1 at positions `0 mod P`, parity 2 at `P/2 mod P`: `2K/P`
    /// parity bits. `Period(2)` is `HalfRate`.
    Period(usize),
}

impl Puncture {
    /// Whether parity stream `stream` (1 or 2) is kept at position `k`.
    pub fn keeps(&self, stream: u8, k: usize) -> bool {
        match *self {
            Puncture::None => true,
            Puncture::HalfRate => Puncture::Period(2).keeps(stream, k),
            Puncture::Period(p) => {
                let phase = if stream == 1 { 0 } else { p / 2 };
                k % p == phase
            }
        }
    }

    /// Parity bits sent for a block of `k` input bits, tail excluded.
    pub fn parity_len(&self, k: usize) -> usize {
        (0..k).filter(|&i| self.keeps(1, i)).count() + (0..k).filter(|&i| self.keeps(2, i)).count()
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Puncture::Period(p) if p < 2 => Err(Error::invalid("puncture period must be at least 2")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurboConfig {
    pub rsc: RscSpec,
    pub block_len: usize,
    pub interleaver_seed: u64,
    pub puncture: Puncture,
    pub iterations: usize,
    pub algorithm: Algorithm,
    /// Weight applied to extrinsic information passed between decoders.
    pub extrinsic_scale: f64,
}

impl Default for TurboConfig {
    fn default() -> Self {
        Self {
            rsc: RscSpec::default(),
            block_len: 512,
            interleaver_seed: 0,
            puncture: Puncture::None,
            iterations: 8,
            algorithm: Algorithm::LogMap,
            extrinsic_scale: 1.0,
        }
    }
}

impl TurboConfig {
    pub fn validate(&self) -> Result<()> {
        self.rsc.validate()?;
        self.puncture.validate()?;
        if self.block_len < self.rsc.constraint_length {
            return Err(Error::invalid("block length must be at least the constraint length"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("at least one decoding iteration is required"));
        }
        if !(self.extrinsic_scale > 0.0 && self.extrinsic_scale <= 1.0) {
            return Err(Error::invalid("extrinsic scale must be in (0, 1]"));
        }
        Ok(())
    }

    /// Encoder-1 spec, terminated.
    fn spec1(&self) -> RscSpec {
        RscSpec { terminated: true, ..self.rsc }
    }

    /// Encoder-2 spec, open.
    fn spec2(&self) -> RscSpec {
        RscSpec { terminated: false, ..self.rsc }
    }

    pub fn tail_len(&self) -> usize {
        self.spec1().tail_len()
    }

    /// Parity plus tail bits sent per block.
    pub fn disclosed_len(&self) -> usize {
        self.puncture.parity_len(self.block_len) + self.tail_len()
    }
}

/// Encoder output after puncturing. Parity streams hold only kept bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurboCodeword {
    pub systematic: BitString,
    pub parity1: BitString,
    pub parity2: BitString,
    /// Encoder-1 termination, input/parity pairs.
    pub tail: BitString,
}

/// Channel LLRs for one block. Parity vectors have length `K` with zeros at
/// punctured positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TurboLlrs {
    pub systematic: LlrSeq,
    pub parity1: LlrSeq,
    pub parity2: LlrSeq,
    pub tail: LlrSeq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboDecoded {
    pub bits: BitString,
    pub posterior: LlrSeq,
    pub iterations_used: usize,
    /// Hard decisions were identical over the last two iterations.
    pub converged: bool,
}

/// Turbo codec with its interleaver built once.
#[derive(Debug, Clone)]
pub struct TurboCodec {
    cfg: TurboConfig,
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl TurboCodec {
    pub fn new(cfg: TurboConfig) -> Result<Self> {
        cfg.validate()?;
        let perm = make_interleaver(cfg.block_len, cfg.interleaver_seed)?;
        let inv = invert(&perm);
        Ok(Self { cfg, perm, inv })
    }

    pub fn config(&self) -> &TurboConfig {
        &self.cfg
    }

    pub fn interleaver(&self) -> &[usize] {
        &self.perm
    }

    pub fn encode(&self, bits: &BitString) -> Result<TurboCodeword> {
        Error::check_len(bits.len(), self.cfg.block_len)?;
        let e1 = rsc_encode(&self.cfg.spec1(), bits)?;
        let shuffled = BitString::from_bits(permute(bits.as_slice(), &self.perm));
        let e2 = rsc_encode(&self.cfg.spec2(), &shuffled)?;
        let keep = |stream: u8, parity: &BitString| -> BitString {
            parity
                .iter()
                .enumerate()
                .filter(|&(k, _)| self.cfg.puncture.keeps(stream, k))
                .map(|(_, b)| b)
                .collect()
        };
        Ok(TurboCodeword {
            systematic: e1.systematic,
            parity1: keep(1, &e1.parity),
            parity2: keep(2, &e2.parity),
            tail: e1.tail,
        })
    }

    /// Expands LLRs of kept parity bits to a full-length stream.
    pub fn depuncture(&self, stream: u8, kept: &[f64]) -> Result<LlrSeq> {
        let k = self.cfg.block_len;
        let mut it = kept.iter();
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            out.push(if self.cfg.puncture.keeps(stream, i) {
                *it.next().ok_or_else(|| Error::invalid("too few parity LLRs"))?
            } else {
                0.0
            });
        }
        if it.next().is_some() {
            return Err(Error::invalid("too many parity LLRs"));
        }
        Ok(out)
    }

    /// LLRs for a codeword received over a BSC with crossover `p` on every
    /// bit; `p = 0` gives saturated LLRs.
    pub fn llrs_from_codeword(&self, cw: &TurboCodeword, p: f64) -> Result<TurboLlrs> {
        let soft = |b: &BitString| -> Result<LlrSeq> {
            if p == 0.0 {
                Ok(b.iter().map(|x| if x == 0 { LLR_MAX } else { -LLR_MAX }).collect())
            } else {
                bits_to_llr(b, p)
            }
        };
        Ok(TurboLlrs {
            systematic: soft(&cw.systematic)?,
            parity1: self.depuncture(1, &soft(&cw.parity1)?)?,
            parity2: self.depuncture(2, &soft(&cw.parity2)?)?,
            tail: soft(&cw.tail)?,
        })
    }

    pub fn decode(&self, llrs: &TurboLlrs) -> Result<TurboDecoded> {
        let cfg = &self.cfg;
        let k = cfg.block_len;
        let m = cfg.rsc.memory();
        Error::check_len(llrs.systematic.len(), k)?;
        Error::check_len(llrs.parity1.len(), k)?;
        Error::check_len(llrs.parity2.len(), k)?;
        Error::check_len(llrs.tail.len(), cfg.tail_len())?;

        let mut sys1 = llrs.systematic.clone();
        let mut par1 = llrs.parity1.clone();
        for j in 0..m {
            sys1.push(llrs.tail[2 * j]);
            par1.push(llrs.tail[2 * j + 1]);
        }
        let sys2 = permute(&llrs.systematic, &self.perm);
        let (spec1, spec2) = (cfg.spec1(), cfg.spec2());

        let mut apriori1 = vec![0.0; k + m];
        let mut previous: Option<Vec<u8>> = None;
        let mut posterior = vec![0.0; k];
        let mut bits = Vec::new();
        let mut converged = false;
        let mut used = 0;
        for it in 1..=cfg.iterations {
            used = it;
            let d1 = bcjr_decode(&spec1, &sys1, &par1, &apriori1, cfg.algorithm)?;
            let ext1: Vec<f64> = d1.extrinsic[..k].iter().map(|e| e * cfg.extrinsic_scale).collect();
            let apriori2 = permute(&ext1, &self.perm);
            let d2 = bcjr_decode(&spec2, &sys2, &llrs.parity2, &apriori2, cfg.algorithm)?;
            let ext2: Vec<f64> = d2.extrinsic.iter().map(|e| e * cfg.extrinsic_scale).collect();
            apriori1[..k].copy_from_slice(&permute(&ext2, &self.inv));
            posterior = permute(&d2.posterior, &self.inv);
            bits = posterior.iter().map(|&l| u8::from(l < 0.0)).collect();
            if previous.as_ref() == Some(&bits) {
                converged = true;
                break;
            }
            previous = Some(bits.clone());
        }
        Ok(TurboDecoded {
            bits: BitString::from_bits(bits),
            posterior,
            iterations_used: used,
            converged,
        })
    }
}

/// Encodes one block of `cfg.block_len` bits.
pub fn turbo_encode(cfg: &TurboConfig, bits: &BitString) -> Result<TurboCodeword> {
    TurboCodec::new(*cfg)?.encode(bits)
}

/// Iteratively decodes one block.
pub fn turbo_decode(cfg: &TurboConfig, llrs: &TurboLlrs) -> Result<TurboDecoded> {
    TurboCodec::new(*cfg)?.decode(llrs)
}

/// BSC soft mapping: `0 -> +ln((1-p)/p)`, `1 -> -ln((1-p)/p)`.
pub fn bits_to_llr(bits: &BitString, crossover_p: f64) -> Result<LlrSeq> {
    if !(crossover_p > 0.0 && crossover_p < 0.5) {
        return Err(Error::invalid("crossover probability must be in (0, 0.5)"));
    }
    let mag = ((1.0 - crossover_p) / crossover_p).ln().min(LLR_MAX);
    Ok(bits.iter().map(|b| if b == 0 { mag } else { -mag }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_bits(rng: &mut impl Rng, n: usize) -> BitString {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    fn flip(bits: &BitString, p: f64, rng: &mut impl Rng) -> BitString {
        bits.iter().map(|b| b ^ u8::from(rng.random_bool(p))).collect()
    }

    #[test]
    fn llr_mapping() {
        let l = bits_to_llr(&BitString::from_bits([0, 1]), 0.1).unwrap();
        assert!((l[0] - 0.9f64.ln() + 0.1f64.ln()).abs() < 1e-15);
        assert!((l[0] - 2.1972).abs() < 1e-4);
        assert_eq!(l[1], -l[0]);
        assert!(bits_to_llr(&BitString::from_bits([0]), 0.4999999).unwrap()[0] < 1e-5);
        assert!(bits_to_llr(&BitString::from_bits([0]), 0.5).is_err());
        assert!(bits_to_llr(&BitString::from_bits([0]), 0.0).is_err());
    }

    #[test]
    fn zero_block_and_rate() {
        let cfg = TurboConfig { block_len: 64, ..Default::default() };
        let cw = turbo_encode(&cfg, &BitString::zeros(64)).unwrap();
        let total = cw.systematic.len() + cw.parity1.len() + cw.parity2.len() + cw.tail.len();
        assert_eq!(total, 3 * 64 + 4);
        assert_eq!(cw.parity1.count_ones() + cw.parity2.count_ones() + cw.tail.count_ones(), 0);
        assert!(turbo_encode(&cfg, &BitString::zeros(63)).is_err());
    }

    #[test]
    fn puncturing_patterns() {
        assert_eq!(Puncture::None.parity_len(512), 1024);
        assert_eq!(Puncture::HalfRate.parity_len(512), 512);
        assert_eq!(Puncture::Period(4).parity_len(512), 256);
        assert!(Puncture::HalfRate.keeps(1, 0) && !Puncture::HalfRate.keeps(2, 0));
        assert!(Puncture::HalfRate.keeps(2, 1) && !Puncture::HalfRate.keeps(1, 1));
        let cfg = TurboConfig { puncture: Puncture::Period(1), ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn noiseless_round_trip() {
        let mut r = rng::stream(21, &[]);
        for puncture in [Puncture::None, Puncture::HalfRate, Puncture::Period(4)] {
            let codec = TurboCodec::new(TurboConfig { block_len: 256, puncture, ..Default::default() }).unwrap();
            for _ in 0..20 {
                let u = random_bits(&mut r, 256);
                let cw = codec.encode(&u).unwrap();
                let dec = codec.decode(&codec.llrs_from_codeword(&cw, 0.0).unwrap()).unwrap();
                assert_eq!(dec.bits, u);
                assert!(dec.converged && dec.iterations_used <= 2);
            }
        }
    }

    #[test]
    fn corrects_a_noisy_channel() {
        let codec = TurboCodec::new(TurboConfig { block_len: 512, ..Default::default() }).unwrap();
        let mut r = rng::stream(22, &[]);
        let mut errors = 0;
        for _ in 0..20 {
            let u = random_bits(&mut r, 512);
            let cw = codec.encode(&u).unwrap();
            let noisy = TurboCodeword {
                systematic: flip(&cw.systematic, 0.03, &mut r),
                parity1: flip(&cw.parity1, 0.03, &mut r),
                parity2: flip(&cw.parity2, 0.03, &mut r),
                tail: flip(&cw.tail, 0.03, &mut r),
            };
            let dec = codec.decode(&codec.llrs_from_codeword(&noisy, 0.03).unwrap()).unwrap();
            errors += dec.bits.hamming(&u);
        }
        assert!(errors as f64 / (20.0 * 512.0) < 1e-3, "{errors}");
    }

    #[test]
    fn free_functions_match_codec() {
        let cfg = TurboConfig { block_len: 32, interleaver_seed: 9, ..Default::default() };
        let u = random_bits(&mut rng::stream(23, &[]), 32);
        let codec = TurboCodec::new(cfg).unwrap();
        let cw = turbo_encode(&cfg, &u).unwrap();
        assert_eq!(cw, codec.encode(&u).unwrap());
        let llrs = codec.llrs_from_codeword(&cw, 0.1).unwrap();
        assert_eq!(turbo_decode(&cfg, &llrs).unwrap(), codec.decode(&llrs).unwrap());
    }
}
