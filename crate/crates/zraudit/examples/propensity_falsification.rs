//! Falsify an under-penalizing propensity model: claiming "no shift"
//! (π̂ ≡ 0.5) on strongly shifted pools lets the ε = 0 tampered audit catch
//! the lie. An honest cross-fitted model, pessimized per the one-sided
//! safety requirement, passes the same test.
//!
//! The mechanism here is drowned in noise (σ = 20, i.e. 0.05-GDP), so the
//! attack signal the test sees is distribution shift, not leakage.
//!
//!     cargo run --example propensity_falsification

use zraudit::audit::{audit_pure_tampered, tamper, AuditInput, AuditRecord, Decision};
use zraudit::mia::{default_threshold, make_guesses, score_inner_product, AbstentionMode};
use zraudit::propensity::{crossfit, pessimize};
use zraudit::synth::{generate, SynthConfig};

fn main() {
    let config = SynthConfig {
        n: 600,
        d: 64,
        gamma_base: 2.0,
        rho: 0.5,
        sigma: 20.0,
        seed: 21,
    };
    let ds = generate(&config).unwrap();
    let features = ds.all_features();
    let memberships = ds.memberships();
    let scores = score_inner_product(&ds.released, &features).unwrap();
    let threshold = default_threshold(&scores).unwrap();
    let r = 150;
    let guesses = make_guesses(&scores, threshold, r, AbstentionMode::Plain, None).unwrap();

    let build = |pi: &dyn Fn(usize) -> f64| -> AuditInput {
        let records: Vec<AuditRecord> = memberships
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut rec = AuditRecord::new(i.to_string(), s);
                rec.guess = guesses.guesses[i];
                rec.pi_hat = Some(pi(i));
                rec
            })
            .collect();
        AuditInput::new(records, r, 0.05, 33).unwrap()
    };
    let falsify = |mut input: AuditInput| -> (Decision, f64) {
        tamper(&mut input.records, Some(0.0), 33).unwrap();
        let report = audit_pure_tampered(&input, 0.0).unwrap();
        (report.decision, report.threshold)
    };

    // Claimed model: no shift anywhere.
    let (decision, p_value) = falsify(build(&|_| 0.5));
    println!(
        "claimed pi = 0.5 under rho = {}: {decision:?} (p-value {p_value:.3e})",
        config.rho
    );
    assert_eq!(decision, Decision::Reject);
    println!("  -> the data contradict the claimed propensity bounds\n");

    // Honest model: cross-fitted scores, pessimized by a 0.05 balance margin
    // (underestimating overlap is the safe direction).
    let fitted = crossfit(&features, &memberships, 0.01, 55).unwrap();
    let (decision, p_value) = falsify(build(&|i| pessimize(fitted[i], 0.05)));
    println!("pessimized cross-fitted model: {decision:?} (p-value {p_value:.3e})");
    match decision {
        Decision::NoReject => println!("  -> no contradiction found for the honest model"),
        Decision::Reject => println!("  -> even the fitted model under-penalizes this shift"),
    }
}
