use num_complex::Complex64;

use v2vkey::channel::doppler_bounds;
use v2vkey::harness::{
    read_rows, run_session, run_sweep, simulate_session, strip_timestamps, ExperimentConfig, RatePolicy,
    SchemeSelection,
};
use v2vkey::metrics::Scheme;
use v2vkey::reconcile::CHECK_BITS;
use v2vkey::turbo::Puncture;

fn short(minutes: f64) -> ExperimentConfig {
    ExperimentConfig { simulated_minutes: minutes, ..ExperimentConfig::default() }
}

#[test]
fn sessions_are_deterministic() {
    let cfg = short(0.5);
    // Debug text compares NaN fields bit-for-bit where PartialEq would not.
    let text = |t| format!("{:?}", run_session(&cfg, t).unwrap());
    assert_eq!(text(2), text(2));
    assert_ne!(
        run_session(&cfg, 2).unwrap()[0].trace_digest,
        run_session(&cfg, 3).unwrap()[0].trace_digest
    );
}

#[test]
fn both_schemes_consume_identical_traces() {
    let both = run_session(&short(0.5), 1).unwrap();
    assert_eq!(both.len(), 2);
    assert_eq!(both[0].trace_digest, both[1].trace_digest);
    for (sel, scheme) in [(SchemeSelection::Indexing, Scheme::Indexing), (SchemeSelection::TurboNR, Scheme::TurboNR)] {
        let single = run_session(&ExperimentConfig { scheme: sel, ..short(0.5) }, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].scheme, scheme);
        assert_eq!(single[0].trace_digest, both[0].trace_digest);
    }
}

#[test]
fn noiseless_channel_reaches_the_ceiling() {
    let mut cfg = short(1.0);
    cfg.scheme = SchemeSelection::TurboNR;
    cfg.nr_model.sigma2_true = 0.0;
    cfg.nr_model.mu_true = Complex64::new(0.0, 0.0);
    cfg.rate_policy = RatePolicy::Fixed(Puncture::Period(4));
    let r = &run_session(&cfg, 0).unwrap()[0];

    let f_p = doppler_bounds(&cfg.channel).unwrap().f_p;
    let n = (60.0 * f_p).round() as usize;
    let k = cfg.turbo.block_len;
    let leak = k / 2 + 4 + CHECK_BITS;
    let blocks = (n - cfg.quant.calibration_len) / k;
    let keys = blocks * (k - leak) / cfg.key_len;
    assert_eq!(r.bmr, 0.0);
    assert_eq!(r.raw_bmr, 0.0);
    assert_eq!((r.blocks_attempted, r.blocks_verified), (blocks, blocks));
    assert_eq!(r.leaked_bits_total, blocks * leak);
    let ceiling = keys as f64 * 60.0 * f_p / n as f64;
    assert!((r.kgr_keys_per_min - ceiling).abs() <= 1e-12 * ceiling, "{} vs {ceiling}", r.kgr_keys_per_min);
}

#[test]
fn leakage_ledger_sums_disclosures() {
    let mut cfg = short(0.5);
    cfg.nr_model.sigma2_true = 0.08;
    let outcome = simulate_session(&cfg, 4).unwrap();
    let turbo = outcome.runs.iter().find(|r| r.scheme == Scheme::TurboNR).unwrap();
    let p_hat = turbo.p_hat.unwrap();
    let codec_cfg = v2vkey::turbo::TurboConfig { puncture: cfg.rate_policy.select(p_hat), ..cfg.turbo };
    assert_eq!(turbo.leaked_bits, turbo.blocks_attempted * (codec_cfg.disclosed_len() + CHECK_BITS));
}

#[test]
fn sweep_rows_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short(0.25);
    cfg.scheme = SchemeSelection::TurboNR;
    cfg.sweep.sigma2 = vec![0.01];
    cfg.sweep.key_lens = vec![128];
    let a = dir.path().join("a.csv");
    let rows = run_sweep(&cfg, &a).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().filter(|r| r.is_aggregate()).count(), 1);
    assert_eq!(read_rows(&a).unwrap().len(), 4);

    cfg.scheme = SchemeSelection::Both;
    cfg.sweep.sigma2 = vec![1e-3, 1e-2];
    cfg.sweep.key_lens = vec![128, 256];
    cfg.trials = 2;
    let (b, c) = (dir.path().join("b.csv"), dir.path().join("c.csv"));
    let rows = run_sweep(&cfg, &b).unwrap();
    // 2 noise levels x 2 key lengths x 2 schemes x (2 trials + 1 aggregate)
    assert_eq!(rows.len(), 24);
    run_sweep(&cfg, &c).unwrap();
    let text = |p: &std::path::Path| strip_timestamps(&std::fs::read_to_string(p).unwrap());
    assert_eq!(text(&b), text(&c));
}
