//! Closed-form trade-off calculus: evaluation, complements and inverses,
//! compositions, and the worst-case shift summary.
//!
//!     cargo run --example tradeoff_curves

use zraudit::tradeoff::{shift_summary, TradeoffCurve};

fn main() {
    let gdp = TradeoffCurve::gaussian(0.66).unwrap();
    let eps_delta = TradeoffCurve::eps_delta(1.0, 0.05).unwrap();

    println!("{:>6} {:>12} {:>12}", "alpha", "G_0.66", "f_{1,0.05}");
    for i in 0..=10 {
        let alpha = i as f64 / 10.0;
        println!(
            "{alpha:>6.2} {:>12.5} {:>12.5}",
            gdp.eval(alpha).unwrap(),
            eps_delta.eval(alpha).unwrap()
        );
    }

    // Compositions stay in closed form.
    let g3 = TradeoffCurve::gaussian(3.0).unwrap();
    let g4 = TradeoffCurve::gaussian(4.0).unwrap();
    println!("\nG_3 ⊗ G_4       = {:?}", g3.compose(&g4).unwrap());
    let a = TradeoffCurve::eps_delta(1.0, 0.1).unwrap();
    let b = TradeoffCurve::eps_delta(2.0, 0.2).unwrap();
    println!("f_1,0.1 ⊗ f_2,0.2 = {:?}", a.compose(&b).unwrap());
    let f0d = TradeoffCurve::eps_delta(0.0, 0.05).unwrap();
    println!("G_3 ⊗ f_0,0.05   = {:?}", g3.compose(&f0d).unwrap());

    // The complement inverse drives the success-count recursion.
    for t in [0.1, 0.5, 0.9] {
        let v = gdp.complement_inverse(t);
        println!(
            "complement_inverse({t}) = {v:.6}   (f̄(v) = {:.6})",
            gdp.complement(v).unwrap()
        );
    }

    // Overlap level -> worst-case shift parameters.
    println!("\n{:>6} {:>12} {:>12}", "eta", "eps_bar_ds", "mu_bar_ds");
    for eta in [0.45, 0.4, 0.3, 0.25, 0.1] {
        let (e, m) = shift_summary(eta).unwrap();
        println!("{eta:>6.2} {e:>12.5} {m:>12.5}");
    }
}
