//! Monte Carlo validity check: the false-rejection rate of a true hypothesis
//! stays within the audit's error budget, reported with Wilson intervals.
//!
//!     cargo run --example validity_experiment [trials]

use zraudit::audit::AuditMode;
use zraudit::harness::{run_validity, Adversary, ExperimentKind, ExperimentPlan};
use zraudit::synth::SynthConfig;

fn main() {
    let trials: usize = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(100);

    let plan = ExperimentPlan {
        kind: ExperimentKind::Validity,
        trials,
        synth: SynthConfig { n: 1000, d: 32, gamma_base: 2.0, rho: 1.0, sigma: 1.0 / 0.66, seed: 0 },
        modes: vec![AuditMode::OneRunFdp, AuditMode::ZrCondFdp],
        abstention_grid: vec![1000],
        adversary: Adversary::Plain,
        p: 0.025,
        p_prime: 0.025,
        master_seed: 7,
        hypothesis_mu: Some(0.66), // the mechanism's exact GDP level
        delta_ds: 0.05,
        l2_lambda: 0.01,
        oracle_propensity: None,
        mu_bracket_hi: 20.0,
    };
    let result = run_validity(&plan).expect("experiment failed");
    println!(
        "testing the TRUE hypothesis mu = 0.66 over {trials} trials at p = {}",
        plan.p
    );
    for mr in &result.mode_results {
        let rate = mr.rejection.as_ref().unwrap();
        println!(
            "  {:?}: rate {:.4} ({} rejections), wilson 95% [{:.4}, {:.4}]",
            mr.mode, rate.rate, rate.rejections, rate.wilson_low, rate.wilson_high
        );
    }
    println!("a valid audit keeps these rates at or below p = {}", plan.p);
}
