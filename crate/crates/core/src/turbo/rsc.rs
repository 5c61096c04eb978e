//! Recursive systematic convolutional encoder and its trellis.

use crate::bits::BitString;
use crate::error::{Error, Result};

/// RSC code description. Polynomials are written in octal with the most
/// significant bit as the `D^0` coefficient, so `0o7` is `1 + D + D^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RscSpec {
    pub constraint_length: usize,
    pub feedback_poly: u32,
    pub feedforward_poly: u32,
    /// Append tail bits that return the register to the zero state.
    pub terminated: bool,
}

impl Default for RscSpec {
    fn default() -> Self {
        Self {
            constraint_length: 3,
            feedback_poly: 0o7,
            feedforward_poly: 0o5,
            terminated: true,
        }
    }
}

impl RscSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.constraint_length;
        if !(2..=16).contains(&k) {
            return Err(Error::invalid("constraint length must be in 2..=16"));
        }
        let limit = 1u32 << k;
        if self.feedback_poly >= limit || self.feedforward_poly >= limit {
            return Err(Error::invalid("polynomial degree must be below the constraint length"));
        }
        if self.feedback_poly >> (k - 1) != 1 {
            return Err(Error::invalid("feedback polynomial must have leading coefficient 1"));
        }
        Ok(())
    }

    /// Register length `m = constraint_length - 1`.
    pub fn memory(&self) -> usize {
        self.constraint_length - 1
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory()
    }

    /// Number of tail bits (input/parity pairs) when terminated.
    pub fn tail_len(&self) -> usize {
        if self.terminated {
            2 * self.memory()
        } else {
            0
        }
    }

    pub fn trellis(&self) -> Trellis {
        Trellis::new(self)
    }
}

/// State-transition table. State bit `m - j` holds the register value
/// delayed by `j` steps.
#[derive(Debug, Clone)]
pub struct Trellis {
    pub num_states: usize,
    /// `next[s][u]`.
    pub next: Vec<[usize; 2]>,
    /// `parity[s][u]`.
    pub parity: Vec<[u8; 2]>,
    /// Input that drives state `s` towards zero.
    pub terminating_input: Vec<u8>,
}

fn parity_of(x: u32) -> u8 {
    (x.count_ones() & 1) as u8
}

impl Trellis {
    fn new(spec: &RscSpec) -> Self {
        let m = spec.memory();
        let mask = (1u32 << m) - 1;
        let ff_now = ((spec.feedforward_poly >> m) & 1) as u8;
        let n = spec.num_states();
        let mut next = Vec::with_capacity(n);
        let mut parity = Vec::with_capacity(n);
        let mut terminating_input = Vec::with_capacity(n);
        for s in 0..n as u32 {
            let fb = parity_of(spec.feedback_poly & mask & s);
            let ff = parity_of(spec.feedforward_poly & mask & s);
            let mut nx = [0; 2];
            let mut px = [0; 2];
            for u in 0..2u8 {
                let a = u ^ fb;
                nx[u as usize] = ((u32::from(a) << (m - 1)) | (s >> 1)) as usize;
                px[u as usize] = (ff_now & a) ^ ff;
            }
            next.push(nx);
            parity.push(px);
            terminating_input.push(fb);
        }
        Self {
            num_states: n,
            next,
            parity,
            terminating_input,
        }
    }
}

/// Output of [`rsc_encode`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RscOutput {
    pub systematic: BitString,
    pub parity: BitString,
    /// Input/parity pairs of the termination steps, `2m` bits or empty.
    pub tail: BitString,
}

/// Encodes `bits` from the zero state.
pub fn rsc_encode(spec: &RscSpec, bits: &BitString) -> Result<RscOutput> {
    spec.validate()?;
    if bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    let t = spec.trellis();
    let mut s = 0;
    let mut parity = Vec::with_capacity(bits.len());
    for u in bits.iter() {
        parity.push(t.parity[s][u as usize]);
        s = t.next[s][u as usize];
    }
    let mut tail = Vec::with_capacity(spec.tail_len());
    if spec.terminated {
        for _ in 0..spec.memory() {
            let u = t.terminating_input[s];
            tail.push(u);
            tail.push(t.parity[s][u as usize]);
            s = t.next[s][u as usize];
        }
        debug_assert_eq!(s, 0);
    }
    Ok(RscOutput {
        systematic: bits.clone().without_sources(),
        parity: BitString::from_bits(parity),
        tail: BitString::from_bits(tail),
    })
}
