//! Bootstrap the empirical privacy lower bound over resamples of the
//! propensity-training data, reporting the conservative lower quantile and
//! the overall confidence 1 − p − p′.
//!
//!     cargo run --example bootstrap_ci [K]

use zraudit::audit::{AuditMode, AuditRecord};
use zraudit::bootstrap::{bootstrap_bound, BootstrapAuditSpec, QuantileDirection};
use zraudit::mia::{default_threshold, make_guesses, score_inner_product, AbstentionMode};
use zraudit::synth::{generate, SynthConfig};

fn main() {
    let k: usize = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(100);

    // Audit pool and a separate propensity-training pool from identical
    // isotropic populations (gamma = 0: no shift), so every bit of attack
    // signal is genuine leakage. High dimension and a small noise scale
    // (sigma = 0.5, i.e. a 2-GDP release) keep each record's own
    // contribution visible in the noisy sum.
    let audit_cfg = SynthConfig {
        n: 800,
        d: 256,
        gamma_base: 0.0,
        rho: 1.0,
        sigma: 0.5,
        seed: 5,
    };
    let train_cfg = SynthConfig { seed: 6, ..audit_cfg };
    let audit_ds = generate(&audit_cfg).unwrap();
    let train_ds = generate(&train_cfg).unwrap();

    let features = audit_ds.all_features();
    let scores = score_inner_product(&audit_ds.released, &features).unwrap();
    let threshold = default_threshold(&scores).unwrap();
    let r = 400;
    let guesses = make_guesses(&scores, threshold, r, AbstentionMode::Plain, None).unwrap();
    let records: Vec<AuditRecord> = audit_ds
        .memberships()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rec = AuditRecord::new(i.to_string(), s);
            rec.score = Some(scores[i]);
            rec.guess = guesses.guesses[i];
            rec
        })
        .collect();

    let spec = BootstrapAuditSpec {
        records,
        audit_features: features,
        r,
        p: 0.025,
        mode: AuditMode::ZrCondFdp,
        l2_lambda: 0.05,
        bracket: (0.0, 20.0),
        tol: 1e-3,
        seed: 1234,
    };
    let train_x = train_ds.all_features();
    let train_y = train_ds.memberships();
    let summary = bootstrap_bound(
        Some((&train_x, &train_y)),
        &spec,
        k,
        0.025,
        QuantileDirection::Lower,
    )
    .unwrap();

    println!("replicates: K = {}", summary.k);
    println!("full-data bound (center): {:.4}", summary.center);
    let (lo, hi) = summary
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    println!("recentered replicate range: [{lo:.4}, {hi:.4}]");
    println!(
        "reported bound: {:.4} at the p' = {} lower quantile",
        summary.result, summary.quantile_level
    );
    println!(
        "overall confidence: {:.3}",
        summary.confidence.unwrap_or(f64::NAN)
    );
    if let Some(w) = &summary.warning {
        println!("warning: {w}");
    }
}
