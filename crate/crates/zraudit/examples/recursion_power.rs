//! Power profile of the f-DP success-count recursion: for fixed m and p,
//! the largest μ rejected as a function of guesses r and accuracy c/r.
//!
//!     cargo run --example recursion_power [m] [p]

use zraudit::audit::fdp_success_counts;
use zraudit::tradeoff::TradeoffCurve;

fn main() {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().and_then(|v| v.parse().ok()).unwrap_or(2000);
    let p: f64 = args.next().and_then(|v| v.parse().ok()).unwrap_or(0.025);

    println!("largest rejected mu at m = {m}, p = {p}");
    print!("{:>8}", "r\\acc");
    let accs = [0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0];
    for a in accs {
        print!("{a:>7.2}");
    }
    println!();
    for frac in [0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
        let r = ((m as f64) * frac) as usize;
        print!("{r:>8}");
        for acc in accs {
            let c = ((r as f64) * acc).round() as usize;
            let mut best = 0.0_f64;
            let mut mu = 0.0_f64;
            while mu <= 6.0 {
                let curve = TradeoffCurve::gaussian(mu).unwrap();
                let (_, reject) = fdp_success_counts(p, &curve, r, c, m).unwrap();
                if reject {
                    best = mu;
                } else {
                    break;
                }
                mu += 0.01;
            }
            print!("{best:>7.2}");
        }
        println!();
    }
}
