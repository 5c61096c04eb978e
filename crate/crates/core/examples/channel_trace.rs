//! Synthesize one V2V fading trace and check its first-order statistics.
//!
//! Run with `cargo run --release --example channel_trace`.

use v2vkey::channel::{self, doppler_bounds, V2VChannelParams};
use v2vkey::stats;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = V2VChannelParams::default();
    let b = doppler_bounds(&params)?;
    println!(
        "u_max {:.1} Hz, T_c,min {:.3} ms, f_P {:.1} Hz, scatterer cap {:.2} m/s",
        b.u_max,
        1e3 * b.t_c_min,
        b.f_p,
        params.scatterer_speed_max
    );
    let real = channel::realize(&params, 7)?;
    let power: f64 = real.components.iter().map(|c| c.amplitude * c.amplitude).sum();
    println!("{} paths, component power {power:.3}, trace power {:.3}", real.components.len(), real.trace.mean_power());
    for c in real.components.iter().take(5) {
        println!("  path Doppler {:+8.1} Hz, phase {:+.3} rad", c.doppler(), c.phase);
    }
    let env = channel::envelope(&real.trace);
    let d = stats::ks_statistic(&env, |x| stats::rayleigh_cdf(x, power));
    println!("envelope vs Rayleigh: KS D = {d:.4} over {} probes", env.len());
    let x = &real.trace.samples;
    let lag1 = x.windows(2).map(|w| w[0] * w[1].conj()).sum::<num_complex::Complex64>().norm()
        / x.iter().map(|z| z.norm_sqr()).sum::<f64>();
    println!("lag-1 autocorrelation |r(1)| = {lag1:.3}");
    Ok(())
}
