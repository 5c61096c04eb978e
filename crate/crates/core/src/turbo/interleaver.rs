//! Pseudo-random block interleaver.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, label};

/// Fisher–Yates permutation of `0..k` drawn from a stream seeded by `seed`.
/// Interleaving maps `x` to `y[i] = x[perm[i]]`.
pub fn make_interleaver(k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::invalid("interleaver length must be positive"));
    }
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(&mut rng::stream(seed, &[label::INTERLEAVER]));
    Ok(perm)
}

/// Inverse permutation, so that `y[inv[j]] = x[j]`.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

pub fn permute<T: Copy>(x: &[T], perm: &[usize]) -> Vec<T> {
    perm.iter().map(|&p| x[p]).collect()
}
