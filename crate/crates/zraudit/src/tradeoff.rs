//! Closed-form trade-off function families and their calculus.
//!
//! A trade-off function f maps a false-positive rate α to a lower bound on
//! the false-negative rate of any test distinguishing a record's presence.
//! Three closed-form families are supported:
//!
//! - `EpsDelta(ε, δ)`:  f(p) = max(0, 1 − e^ε p − δ, e^{−ε}(1 − δ − p))
//! - `Gaussian(μ)`:     G_μ(p) = Φ(Φ⁻¹(1 − p) − μ)
//! - `GPrime(μ, δ_DS)`: (1 − δ_DS)·G_μ(p / (1 − δ_DS)) for p ≤ 1 − δ_DS, else 0
//!
//! Composition is restricted to the closed-form pairs the audits need; a
//! generic numeric tensor product is deliberately not provided.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{norm_cdf, norm_ppf};

/// Absolute tolerance for the bisection fallback in [`TradeoffCurve::complement_inverse`].
const INVERT_TOL: f64 = 1e-12;
/// Iteration cap for that bisection.
const INVERT_MAX_ITER: usize = 200;

/// A symmetric trade-off function from one of the closed-form families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TradeoffCurve {
    EpsDelta { eps: f64, delta: f64 },
    #[serde(rename = "gdp")]
    Gaussian { mu: f64 },
    #[serde(rename = "gprime")]
    GPrime { mu: f64, delta_ds: f64 },
}

impl TradeoffCurve {
    /// (ε, δ)-DP family. Requires ε ≥ 0 and δ ∈ [0, 1].
    pub fn eps_delta(eps: f64, delta: f64) -> Result<Self> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::Domain(format!("eps must be finite and >= 0, got {eps}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Domain(format!("delta must lie in [0,1], got {delta}")));
        }
        Ok(Self::EpsDelta { eps, delta })
    }

    /// μ-GDP family. Requires μ ≥ 0 (infinite μ denotes the vacuous hypothesis).
    pub fn gaussian(mu: f64) -> Result<Self> {
        if mu.is_nan() || mu < 0.0 {
            return Err(Error::Domain(format!("mu must be >= 0, got {mu}")));
        }
        Ok(Self::Gaussian { mu })
    }

    /// G′ family: G_μ composed with f_{0,δ_DS}.
    pub fn gprime(mu: f64, delta_ds: f64) -> Result<Self> {
        if mu.is_nan() || mu < 0.0 {
            return Err(Error::Domain(format!("mu must be >= 0, got {mu}")));
        }
        if !(0.0..=1.0).contains(&delta_ds) {
            return Err(Error::Domain(format!("delta_ds must lie in [0,1], got {delta_ds}")));
        }
        Ok(Self::GPrime { mu, delta_ds })
    }

    /// Evaluate f(alpha) exactly from the closed form.
    pub fn eval(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0,1], got {alpha}")));
        }
        Ok(match *self {
            Self::EpsDelta { eps, delta } => {
                let a = 1.0 - eps.exp() * alpha - delta;
                let b = (-eps).exp() * (1.0 - delta - alpha);
                a.max(b).max(0.0)
            }
            Self::Gaussian { mu } => gaussian_eval(mu, alpha),
            Self::GPrime { mu, delta_ds } => {
                if delta_ds >= 1.0 {
                    0.0
                } else if alpha <= 1.0 - delta_ds {
                    (1.0 - delta_ds) * gaussian_eval(mu, alpha / (1.0 - delta_ds))
                } else {
                    0.0
                }
            }
        })
    }

    /// Complement f̄(alpha) = 1 − f(alpha).
    pub fn complement(&self, alpha: f64) -> Result<f64> {
        Ok(1.0 - self.eval(alpha)?)
    }

    /// Generalized inverse of the complement: sup{α : f̄(α) ≤ t}.
    ///
    /// Values of `t` outside [0, 1] are clamped. Gaussian and G′ use closed
    /// forms; (ε, δ) falls back to monotone bisection at 1e-12 absolute.
    pub fn complement_inverse(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match *self {
            Self::Gaussian { mu } => {
                if mu.is_infinite() {
                    // G_∞ ≡ 0, so f̄ ≡ 1: only t = 1 is attained.
                    return if t >= 1.0 { 1.0 } else { 0.0 };
                }
                // Solve 1 - G_mu(a) = t  =>  a = 1 - Φ(Φ⁻¹(1 − t) + μ).
                let a = 1.0 - norm_cdf(norm_ppf(1.0 - t) + mu);
                a.clamp(0.0, 1.0)
            }
            Self::GPrime { mu, delta_ds } => {
                if delta_ds >= 1.0 {
                    // f ≡ 0, f̄ ≡ 1: only t = 1 is attained.
                    return if t >= 1.0 { 1.0 } else { 0.0 };
                }
                if t >= 1.0 {
                    return 1.0;
                }
                if t < delta_ds {
                    // f̄ never dips below δ_DS.
                    return 0.0;
                }
                // Solve (1-δ)·G_mu(a/(1-δ)) = 1 - t, using that G_mu is an involution.
                let q = gaussian_eval(mu, ((1.0 - t) / (1.0 - delta_ds)).clamp(0.0, 1.0));
                ((1.0 - delta_ds) * q).clamp(0.0, 1.0)
            }
            Self::EpsDelta { .. } => self.complement_inverse_bisect(t),
        }
    }

    fn complement_inverse_bisect(&self, t: f64) -> f64 {
        let fbar = |a: f64| 1.0 - self.eval(a).expect("alpha in range");
        if fbar(1.0) <= t {
            return 1.0;
        }
        if fbar(0.0) > t {
            return 0.0;
        }
        // Invariant: f̄(lo) <= t < f̄(hi).
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..INVERT_MAX_ITER {
            if hi - lo <= INVERT_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if fbar(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Closed-form tensor product for the supported pairs.
    ///
    /// Supported: (EpsDelta, EpsDelta), (Gaussian, Gaussian) and
    /// (Gaussian, EpsDelta(0, δ)) in either order. Anything else errors.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        match (*self, *other) {
            (Self::EpsDelta { eps: e1, delta: d1 }, Self::EpsDelta { eps: e2, delta: d2 }) => {
                Self::eps_delta(e1 + e2, 1.0 - (1.0 - d1) * (1.0 - d2))
            }
            (Self::Gaussian { mu: m1 }, Self::Gaussian { mu: m2 }) => {
                Self::gaussian(m1.hypot(m2))
            }
            (Self::Gaussian { mu }, Self::EpsDelta { eps, delta })
            | (Self::EpsDelta { eps, delta }, Self::Gaussian { mu })
                if eps == 0.0 =>
            {
                if delta == 0.0 {
                    Self::gaussian(mu)
                } else {
                    Self::gprime(mu, delta)
                }
            }
            (a, b) => Err(Error::UnsupportedPair(format!("{a:?} with {b:?}"))),
        }
    }
}

fn gaussian_eval(mu: f64, alpha: f64) -> f64 {
    if mu.is_infinite() {
        // Vacuous hypothesis: any distinguisher is compatible with μ = ∞.
        return 0.0;
    }
    norm_cdf(norm_ppf(1.0 - alpha) - mu)
}

/// Worst-case distribution-shift parameters (ε̄_DS, μ̄_DS) implied by the
/// overlap level η.
///
/// ε̄_DS = log((1−η)/η) and μ̄_DS = Φ⁻¹(e^ε̄/(1+e^ε̄)) − Φ⁻¹(1/(1+e^ε̄)).
/// Accepts η ∈ (0, 1/2]; η = 1/2 yields exactly (0, 0).
pub fn shift_summary(eta: f64) -> Result<(f64, f64)> {
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(Error::Domain(format!("eta must lie in (0, 1/2], got {eta}")));
    }
    let eps_bar = ((1.0 - eta) / eta).ln();
    let hi = eps_bar.exp() / (1.0 + eps_bar.exp());
    let lo = 1.0 / (1.0 + eps_bar.exp());
    let mu_bar = norm_ppf(hi) - norm_ppf(lo);
    Ok((eps_bar, mu_bar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GRID: usize = 1001;

    fn grid() -> impl Iterator<Item = f64> {
        (0..GRID).map(|i| i as f64 / (GRID - 1) as f64)
    }

    #[test]
    fn eval_identity_mechanism() {
        let c = TradeoffCurve::eps_delta(0.0, 0.0).unwrap();
        assert!((c.eval(0.3).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn eval_eps_delta_three_branch() {
        // Direct evaluation of max(0, 1 - 2·0.2 - 0.1, 0.5·(1 - 0.1 - 0.2)).
        let c = TradeoffCurve::eps_delta(2.0_f64.ln(), 0.1).unwrap();
        assert!((c.eval(0.2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_gaussian_symmetry_fixed_point() {
        for mu in [0.3, 0.66, 1.0, 2.5] {
            let c = TradeoffCurve::gaussian(mu).unwrap();
            let fix = norm_cdf(-mu / 2.0);
            assert!((c.eval(fix).unwrap() - fix).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_gprime_boundary() {
        let c = TradeoffCurve::gprime(0.8, 0.05).unwrap();
        assert!(c.eval(0.95).unwrap().abs() < 1e-12);
        assert_eq!(c.eval(0.96).unwrap(), 0.0);
    }

    #[test]
    fn eval_rejects_out_of_range_alpha() {
        let c = TradeoffCurve::gaussian(1.0).unwrap();
        assert!(c.eval(-0.01).is_err());
        assert!(c.eval(1.01).is_err());
    }

    #[test]
    fn complement_inverse_identity_cases() {
        let g0 = TradeoffCurve::gaussian(0.0).unwrap();
        assert!((g0.complement_inverse(0.37) - 0.37).abs() < 1e-12);
        let id = TradeoffCurve::eps_delta(0.0, 0.0).unwrap();
        assert!((id.complement_inverse(0.8) - 0.8).abs() < 1e-10);
    }

    #[test]
    fn complement_inverse_bisection_matches_closed_form() {
        // Gaussian closed form against the generic bisection route.
        let c = TradeoffCurve::gaussian(1.0).unwrap();
        for t in [0.01, 0.1, 0.33, 0.5, 0.77, 0.99] {
            let closed = c.complement_inverse(t);
            let bisect = c.complement_inverse_bisect(t);
            assert!(
                (closed - bisect).abs() < 1e-9,
                "t={t}: closed={closed} bisect={bisect}"
            );
            if closed > 0.0 && closed < 1.0 {
                assert!((c.complement(closed).unwrap() - t).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn complement_inverse_is_right_inverse_on_grid() {
        let curves = [
            TradeoffCurve::eps_delta(1.0, 0.05).unwrap(),
            TradeoffCurve::gaussian(0.66).unwrap(),
            TradeoffCurve::gprime(1.2, 0.1).unwrap(),
        ];
        for c in curves {
            let lo = c.complement(0.0).unwrap();
            let hi = c.complement(1.0).unwrap();
            for t in grid() {
                if t < lo || t > hi {
                    continue;
                }
                let v = c.complement_inverse(t);
                let back = c.complement(v).unwrap();
                assert!(
                    back <= t + 1e-12 && back >= t - 1e-9,
                    "{c:?} t={t} v={v} back={back}"
                );
            }
        }
    }

    #[test]
    fn compose_closed_forms() {
        let a = TradeoffCurve::eps_delta(1.0, 0.1).unwrap();
        let b = TradeoffCurve::eps_delta(2.0, 0.2).unwrap();
        match a.compose(&b).unwrap() {
            TradeoffCurve::EpsDelta { eps, delta } => {
                assert_eq!(eps, 3.0);
                assert!((delta - 0.28).abs() < 1e-15);
            }
            other => panic!("wrong family: {other:?}"),
        }

        let g3 = TradeoffCurve::gaussian(3.0).unwrap();
        let g4 = TradeoffCurve::gaussian(4.0).unwrap();
        assert_eq!(g3.compose(&g4).unwrap(), TradeoffCurve::Gaussian { mu: 5.0 });

        // Identity element keeps the Gaussian family.
        let id = TradeoffCurve::eps_delta(0.0, 0.0).unwrap();
        assert_eq!(g3.compose(&id).unwrap(), TradeoffCurve::Gaussian { mu: 3.0 });

        // Gaussian with f_{0,δ} gives G′ in either order.
        let f0d = TradeoffCurve::eps_delta(0.0, 0.1).unwrap();
        assert_eq!(
            g3.compose(&f0d).unwrap(),
            TradeoffCurve::GPrime { mu: 3.0, delta_ds: 0.1 }
        );
        assert_eq!(f0d.compose(&g3).unwrap(), g3.compose(&f0d).unwrap());

        // Unsupported pairs are rejected rather than approximated.
        assert!(g3.compose(&TradeoffCurve::eps_delta(1.0, 0.1).unwrap()).is_err());
        assert!(g3
            .compose(&TradeoffCurve::gprime(1.0, 0.1).unwrap())
            .is_err());
    }

    #[test]
    fn compose_identities_pointwise_on_grid() {
        // Both sides evaluated independently from their own closed forms.
        let g3 = TradeoffCurve::gaussian(3.0).unwrap();
        let g4 = TradeoffCurve::gaussian(4.0).unwrap();
        let g5 = TradeoffCurve::gaussian(5.0).unwrap();
        let comp = g3.compose(&g4).unwrap();
        for a in grid() {
            assert!((comp.eval(a).unwrap() - g5.eval(a).unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn shift_summary_values() {
        let (e, m) = shift_summary(0.25).unwrap();
        assert!((e - 3.0_f64.ln()).abs() < 1e-12);
        assert!((m - 1.3489795003921634).abs() < 1e-9);

        let (e, m) = shift_summary(0.1).unwrap();
        assert!((e - 9.0_f64.ln()).abs() < 1e-12);
        assert!((m - (norm_ppf(0.9) - norm_ppf(0.1))).abs() < 1e-12);

        // No shift at the boundary.
        let (e, m) = shift_summary(0.5).unwrap();
        assert_eq!(e, 0.0);
        assert!(m.abs() < 1e-12);
        // Approaching from below is continuous.
        let (e, m) = shift_summary(0.5 - 1e-9).unwrap();
        assert!(e < 1e-8 && m.abs() < 1e-7);

        assert!(shift_summary(0.0).is_err());
        assert!(shift_summary(0.6).is_err());
        assert!(shift_summary(-0.1).is_err());
    }

    #[test]
    fn grid_shape_invariants_all_families() {
        let curves = [
            TradeoffCurve::eps_delta(0.0, 0.0).unwrap(),
            TradeoffCurve::eps_delta(1.5, 0.02).unwrap(),
            TradeoffCurve::gaussian(0.0).unwrap(),
            TradeoffCurve::gaussian(0.66).unwrap(),
            TradeoffCurve::gaussian(3.0).unwrap(),
            TradeoffCurve::gprime(1.0, 0.05).unwrap(),
        ];
        for c in curves {
            let vals: Vec<f64> = grid().map(|a| c.eval(a).unwrap()).collect();
            assert!(vals[0] <= 1.0 + 1e-12);
            assert!(vals[GRID - 1].abs() < 1e-12, "{c:?} f(1) = {}", vals[GRID - 1]);
            for (i, a) in grid().enumerate() {
                assert!(vals[i] <= 1.0 - a + 1e-12, "{c:?} above 1 - t at {a}");
                if i > 0 {
                    assert!(vals[i] <= vals[i - 1] + 1e-12, "{c:?} not nonincreasing");
                }
                if i > 1 {
                    let second = vals[i] - 2.0 * vals[i - 1] + vals[i - 2];
                    assert!(second >= -1e-9, "{c:?} not convex at {a}: {second}");
                }
            }
        }
    }

    #[test]
    fn gaussian_self_inverse_on_grid() {
        for mu in [0.25, 0.66, 1.0, 2.0] {
            let c = TradeoffCurve::gaussian(mu).unwrap();
            for a in grid() {
                if a == 0.0 || a == 1.0 {
                    continue;
                }
                let twice = c.eval(c.eval(a).unwrap()).unwrap();
                assert!((twice - a).abs() <= 1e-9, "mu={mu} a={a} got {twice}");
            }
        }
    }

    #[test]
    fn serde_tagged_families() {
        let c = TradeoffCurve::gaussian(0.66).unwrap();
        let js = serde_json::to_string(&c).unwrap();
        assert_eq!(js, r#"{"family":"gdp","mu":0.66}"#);
        let back: TradeoffCurve = serde_json::from_str(&js).unwrap();
        assert_eq!(back, c);

        let c = TradeoffCurve::eps_delta(1.0, 0.1).unwrap();
        assert_eq!(
            serde_json::to_string(&c).unwrap(),
            r#"{"family":"eps_delta","eps":1.0,"delta":0.1}"#
        );
        let c = TradeoffCurve::gprime(2.0, 0.05).unwrap();
        let back: TradeoffCurve =
            serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    proptest! {
        #[test]
        fn prop_eval_within_unit_box(mu in 0.0_f64..6.0, a in 0.0_f64..=1.0) {
            let c = TradeoffCurve::gaussian(mu).unwrap();
            let v = c.eval(a).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(v <= 1.0 - a + 1e-12);
        }

        #[test]
        fn prop_complement_inverse_right_inverse(
            eps in 0.0_f64..3.0,
            delta in 0.0_f64..0.5,
            t in 0.0_f64..=1.0,
        ) {
            let c = TradeoffCurve::eps_delta(eps, delta).unwrap();
            let v = c.complement_inverse(t);
            prop_assert!((0.0..=1.0).contains(&v));
            // Generalized inverse: f̄ at the sup never exceeds t (up to tol)
            // whenever t is in the range of f̄; below the range it clamps to 0.
            if t >= c.complement(0.0).unwrap() {
                let back = c.complement(v).unwrap();
                prop_assert!(back <= t + 1e-9);
            } else {
                prop_assert_eq!(v, 0.0);
            }
        }
    }
}
