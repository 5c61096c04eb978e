//! Binary sequences exchanged between Alice and Bob.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Ordered binary sequence. Each element is `0` or `1`.
///
/// `source_indices` records which trace sample produced each bit; it is
/// dropped once bits are decoded or hashed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitString {
    bits: Vec<u8>,
    source_indices: Option<Vec<usize>>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from raw bit values. Any non-zero byte is read as `1`.
    pub fn from_bits(bits: impl IntoIterator<Item = u8>) -> Self {
        Self {
            bits: bits.into_iter().map(|b| (b != 0) as u8).collect(),
            source_indices: None,
        }
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        Self::from_bits(bits.into_iter().map(u8::from))
    }

    pub fn zeros(len: usize) -> Self {
        Self::from_bits(vec![0; len])
    }

    /// Attaches per-bit provenance.
    pub fn with_sources(mut self, sources: Vec<usize>) -> Result<Self> {
        Error::check_len(self.bits.len(), sources.len())?;
        self.source_indices = Some(sources);
        Ok(self)
    }

    pub fn without_sources(mut self) -> Self {
        self.source_indices = None;
        self
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn source_indices(&self) -> Option<&[usize]> {
        self.source_indices.as_deref()
    }

    pub fn get(&self, i: usize) -> Option<u8> {
        self.bits.get(i).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.bits.iter().copied()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Number of differing positions over the common prefix.
    pub fn hamming(&self, other: &BitString) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Copy of `[start, end)`; provenance is sliced alongside.
    pub fn slice(&self, start: usize, end: usize) -> BitString {
        BitString {
            bits: self.bits[start..end].to_vec(),
            source_indices: self
                .source_indices
                .as_ref()
                .map(|s| s[start..end].to_vec()),
        }
    }

    pub fn push(&mut self, bit: u8) {
        self.bits.push((bit != 0) as u8);
        self.source_indices = None;
    }

    /// Appends `other`. Provenance survives only if both sides carry it.
    pub fn extend_from(&mut self, other: &BitString) {
        self.source_indices = match (self.source_indices.take(), &other.source_indices) {
            (Some(mut a), Some(b)) => {
                a.extend_from_slice(b);
                Some(a)
            }
            (None, Some(_)) if self.bits.is_empty() => other.source_indices.clone(),
            _ => None,
        };
        self.bits.extend_from_slice(&other.bits);
    }

    /// Packs MSB-first into bytes; the final byte is zero-padded.
    pub fn pack_msb_first(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)))
            })
            .collect()
    }

    /// Inverse of [`pack_msb_first`](Self::pack_msb_first).
    pub fn unpack_msb_first(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() * 8 < len {
            return Err(Error::MalformedMessage(format!(
                "{} bytes cannot hold {len} bits",
                bytes.len()
            )));
        }
        Ok(Self::from_bits(
            (0..len).map(|i| (bytes[i / 8] >> (7 - (i % 8))) & 1),
        ))
    }

    /// Fixed 64-bit digest of the bit content (length-prefixed SHA-256,
    /// truncated). Used as a verification tag, not as a security primitive.
    pub fn check_value(&self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update((self.bits.len() as u64).to_be_bytes());
        hasher.update(self.pack_msb_first());
        let out = hasher.finalize();
        u64::from_be_bytes(out[..8].try_into().expect("sha256 is 32 bytes"))
    }
}

impl FromIterator<u8> for BitString {
    fn from_iter<T: IntoIterator<Item = u8>>(iter: T) -> Self {
        Self::from_bits(iter)
    }
}

impl From<Vec<u8>> for BitString {
    fn from(bits: Vec<u8>) -> Self {
        Self::from_bits(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pack_is_msb_first() {
        let b = BitString::from_bits([1, 0, 1, 1, 0, 0, 0, 0, 1]);
        assert_eq!(b.pack_msb_first(), vec![0b1011_0000, 0b1000_0000]);
    }

    #[test]
    fn provenance_must_match_length() {
        assert!(BitString::from_bits([1, 0]).with_sources(vec![3]).is_err());
    }

    #[test]
    fn check_value_depends_on_length() {
        // Same packed bytes, different lengths.
        let a = BitString::from_bits([1, 0, 0]);
        let b = BitString::from_bits([1, 0, 0, 0]);
        assert_ne!(a.check_value(), b.check_value());
    }

    proptest! {
        #[test]
        fn pack_unpack_roundtrip(bits in proptest::collection::vec(0u8..2, 0..200)) {
            let b = BitString::from_bits(bits.clone());
            let back = BitString::unpack_msb_first(&b.pack_msb_first(), bits.len()).unwrap();
            prop_assert_eq!(back.as_slice(), &bits[..]);
        }
    }
}
