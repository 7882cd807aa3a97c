//! Temporary probe for bootstrap replicate variation.

use zraudit::audit::{empirical_mu, AuditInput, AuditMode, AuditRecord};
use zraudit::mia::{default_threshold, make_guesses, score_inner_product, AbstentionMode};
use zraudit::propensity::fit;
use zraudit::rng::derive_seed;
use zraudit::synth::{generate, SynthConfig};

fn main() {
    let audit_cfg = SynthConfig {
        n: 800,
        d: 256,
        gamma_base: 0.0,
        rho: 1.0,
        sigma: 1.0 / 0.66,
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
    let raw_correct = guesses
        .guesses
        .iter()
        .zip(audit_ds.memberships())
        .filter(|(&g, s)| g != 0 && g == *s)
        .count();
    println!("raw correct among active: {raw_correct}/{r}");

    let model = fit(&train_ds.all_features(), &train_ds.memberships(), 0.05, 1).unwrap();
    let pi: Vec<f64> = features.iter().map(|x| model.predict(x)).collect();
    let (lo, hi) = pi
        .iter()
        .fold((1.0_f64, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    println!("pi span from full train fit: [{lo:.4}, {hi:.4}]");

    for k in 0..5u64 {
        let records: Vec<AuditRecord> = audit_ds
            .memberships()
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut rec = AuditRecord::new(i.to_string(), s);
                rec.guess = guesses.guesses[i];
                rec.pi_hat = Some(pi[i]);
                rec
            })
            .collect();
        let input = AuditInput {
            records,
            r,
            p: 0.025,
            seed: derive_seed(1234, "replicate", k + 1),
        };
        let mut tampered = input.clone();
        zraudit::audit::tamper(&mut tampered.records, None, tampered.seed).unwrap();
        let c = tampered
            .records
            .iter()
            .filter(|rec| rec.retained == Some(true) && rec.guess != 0 && rec.guess == rec.membership)
            .count();
        let bound = empirical_mu(&input, AuditMode::ZrCondFdp, None, (0.0, 20.0), 1e-3).unwrap();
        println!("k = {k}: tampered c = {c}, mu_hat = {bound:.4}");
    }

    // Now through bootstrap_bound itself.
    let records: Vec<AuditRecord> = audit_ds
        .memberships()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rec = AuditRecord::new(i.to_string(), s);
            rec.guess = guesses.guesses[i];
            rec
        })
        .collect();
    let spec = zraudit::bootstrap::BootstrapAuditSpec {
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
    let tx = train_ds.all_features();
    let ty = train_ds.memberships();
    let summary = zraudit::bootstrap::bootstrap_bound(
        Some((&tx, &ty)),
        &spec,
        6,
        0.1,
        zraudit::bootstrap::QuantileDirection::Lower,
    )
    .unwrap();
    println!("bootstrap raw: {:?}", summary.raw);
    println!("bootstrap center: {:.4}", summary.center);
}
