//! Empirical accuracy of the inner-product attack across shift strengths,
//! full-population and on abstained top-r sets.
//!
//!     cargo run --example attack_accuracy [m] [gamma] [rho]

use zraudit::mia::{default_threshold, make_guesses, score_inner_product, AbstentionMode};
use zraudit::synth::{generate, SynthConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().and_then(|v| v.parse().ok()).unwrap_or(2000);
    let gamma: f64 = args.next().and_then(|v| v.parse().ok()).unwrap_or(10.0);
    let rho: f64 = args.next().and_then(|v| v.parse().ok()).unwrap_or(0.8);

    let mut accs = vec![0.0; 4];
    let fracs = [0.25, 0.5, 0.75, 1.0];
    let trials = 10;
    for seed in 0..trials {
        let cfg = SynthConfig { n: m, d: 64, gamma_base: gamma, rho, sigma: 1.0 / 0.66, seed };
        let ds = generate(&cfg).unwrap();
        let feats = ds.all_features();
        let members = ds.memberships();
        let scores = score_inner_product(&ds.released, &feats).unwrap();
        let t = default_threshold(&scores).unwrap();
        for (fi, frac) in fracs.iter().enumerate() {
            let r = ((m as f64) * frac) as usize;
            let g = make_guesses(&scores, t, r, AbstentionMode::Plain, None).unwrap();
            let correct = g
                .guesses
                .iter()
                .zip(&members)
                .filter(|(&g, &s)| g != 0 && g == s)
                .count();
            accs[fi] += correct as f64 / r as f64 / trials as f64;
        }
    }
    println!("m={m} gamma={gamma} rho={rho}");
    for (fi, frac) in fracs.iter().enumerate() {
        println!("  r = {:>5.2}m: accuracy {:.4}", frac, accs[fi]);
    }
}
