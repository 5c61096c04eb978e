//! Log-domain forward–backward decoding of one RSC code.

use super::rsc::RscSpec;
use super::{Algorithm, LLR_MAX};
use crate::error::{Error, Result};

fn clamp(x: f64) -> f64 {
    x.clamp(-LLR_MAX, LLR_MAX)
}

/// Jacobian logarithm `ln(e^a + e^b)`, or its max approximation.
fn max_star(alg: Algorithm, a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    match alg {
        Algorithm::LogMap => m + (-(a - b).abs()).exp().ln_1p(),
        Algorithm::MaxLogMap => m,
    }
}

fn sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Soft output of [`bcjr_decode`].
#[derive(Debug, Clone, PartialEq)]
pub struct BcjrOutput {
    pub posterior: Vec<f64>,
    pub extrinsic: Vec<f64>,
}

/// A-posteriori LLRs of the input bits of one RSC trellis.
///
/// All three sequences cover the whole trellis, tail steps included when
/// `spec.terminated` (the trellis then ends in the zero state). Positive
/// LLRs favour bit 0. Inputs and outputs are clamped to `±LLR_MAX`.
pub fn bcjr_decode(
    spec: &RscSpec,
    sys: &[f64],
    parity: &[f64],
    apriori: &[f64],
    alg: Algorithm,
) -> Result<BcjrOutput> {
    spec.validate()?;
    Error::check_len(sys.len(), parity.len())?;
    Error::check_len(sys.len(), apriori.len())?;
    let n = sys.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let t = spec.trellis();
    let ns = t.num_states;
    let ninf = f64::NEG_INFINITY;

    // gamma[k][s][u], halved LLR convention: ln P(c) = s(c) L / 2 + const.
    let gamma: Vec<[f64; 2]> = (0..n)
        .flat_map(|k| {
            let lu = clamp(sys[k]) + clamp(apriori[k]);
            let lp = clamp(parity[k]);
            let t = &t;
            (0..ns).map(move |s| {
                let g = |u: u8| 0.5 * (sign(u) * lu + sign(t.parity[s][u as usize]) * lp);
                [g(0), g(1)]
            })
        })
        .collect();

    let mut alpha = vec![ninf; (n + 1) * ns];
    alpha[0] = 0.0;
    for k in 0..n {
        let (cur, next) = alpha.split_at_mut((k + 1) * ns);
        let cur = &cur[k * ns..];
        let next = &mut next[..ns];
        for s in 0..ns {
            if cur[s] == ninf {
                continue;
            }
            for u in 0..2 {
                let to = t.next[s][u];
                next[to] = max_star(alg, next[to], cur[s] + gamma[k * ns + s][u]);
            }
        }
        let m = next.iter().copied().fold(ninf, f64::max);
        next.iter_mut().for_each(|a| *a -= m);
    }

    let mut beta = vec![ninf; (n + 1) * ns];
    if spec.terminated {
        beta[n * ns] = 0.0;
    } else {
        beta[n * ns..].iter_mut().for_each(|b| *b = 0.0);
    }
    for k in (0..n).rev() {
        let mut m = ninf;
        for s in 0..ns {
            let mut b = ninf;
            for u in 0..2 {
                let to = t.next[s][u];
                b = max_star(alg, b, beta[(k + 1) * ns + to] + gamma[k * ns + s][u]);
            }
            beta[k * ns + s] = b;
            m = m.max(b);
        }
        beta[k * ns..(k + 1) * ns].iter_mut().for_each(|b| *b -= m);
    }

    let mut posterior = Vec::with_capacity(n);
    let mut extrinsic = Vec::with_capacity(n);
    for k in 0..n {
        let mut l = [ninf; 2];
        for s in 0..ns {
            for u in 0..2 {
                let to = t.next[s][u];
                let v = alpha[k * ns + s] + gamma[k * ns + s][u] + beta[(k + 1) * ns + to];
                l[u] = max_star(alg, l[u], v);
            }
        }
        let post = clamp(l[0] - l[1]);
        posterior.push(post);
        extrinsic.push(clamp(post - clamp(sys[k]) - clamp(apriori[k])));
    }
    Ok(BcjrOutput { posterior, extrinsic })
}
