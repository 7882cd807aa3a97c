//! Hypothesis tests for privacy auditing.
//!
//! Covers the one-run baselines, the shift-corrected zero-run audits
//! (compositional and conditional), pure-DP audits with and without
//! tampering, and empirical-parameter extraction by monotone bisection.
//! All tail probabilities are exact (log-space binomial sums, dynamic-
//! programming Poisson-binomial convolution); thresholds are integers found
//! by exhaustive scan rather than analytic inversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::tradeoff::{shift_summary, TradeoffCurve};
use rand::Rng;

/// One audited example.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditRecord {
    pub id: String,
    /// True membership S ∈ {−1, +1}.
    pub membership: i8,
    /// Attack score Y (higher means "more likely member").
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    /// Guess T ∈ {−1, 0, +1}; 0 is abstention.
    #[serde(default)]
    pub guess: i8,
    /// Estimated propensity π̂ ∈ [0, 1].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
    /// Tampering parameter b ∈ [0, 1], filled by [`tamper`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tamper_b: Option<f64>,
    /// Retained bit B ∈ {0, 1}, filled by [`tamper`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retained: Option<bool>,
}

impl AuditRecord {
    pub fn new(id: impl Into<String>, membership: i8) -> Self {
        Self {
            id: id.into(),
            membership,
            score: None,
            guess: 0,
            pi_hat: None,
            features: None,
            tamper_b: None,
            retained: None,
        }
    }
}

/// Everything one audit run needs.
#[derive(Debug, Clone)]
pub struct AuditInput {
    pub records: Vec<AuditRecord>,
    /// Maximum number of active guesses.
    pub r: usize,
    /// Audit error budget p ∈ (0, 1).
    pub p: f64,
    pub seed: u64,
}

impl AuditInput {
    pub fn new(records: Vec<AuditRecord>, r: usize, p: f64, seed: u64) -> Result<Self> {
        let input = Self { records, r, p, seed };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidInput(format!("p must lie in (0,1), got {}", self.p)));
        }
        if self.r > self.records.len() {
            return Err(Error::InvalidInput(format!(
                "r = {} exceeds record count m = {}",
                self.r,
                self.records.len()
            )));
        }
        let mut active = 0usize;
        for rec in &self.records {
            if rec.membership != 1 && rec.membership != -1 {
                return Err(Error::InvalidInput(format!(
                    "record {}: membership must be ±1",
                    rec.id
                )));
            }
            if ![-1, 0, 1].contains(&rec.guess) {
                return Err(Error::InvalidInput(format!(
                    "record {}: guess must be in {{-1,0,1}}",
                    rec.id
                )));
            }
            if let Some(pi) = rec.pi_hat {
                if !(0.0..=1.0).contains(&pi) {
                    return Err(Error::InvalidInput(format!(
                        "record {}: pi_hat must lie in [0,1]",
                        rec.id
                    )));
                }
            }
            if rec.guess != 0 {
                active += 1;
            }
        }
        if active > self.r {
            return Err(Error::InvalidInput(format!(
                "{active} active guesses exceed r = {}",
                self.r
            )));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.records.len()
    }

    pub fn active_count(&self) -> usize {
        self.records.iter().filter(|r| r.guess != 0).count()
    }
}

/// The privacy claim under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PrivacyHypothesis {
    EpsDelta { eps: f64, delta: f64 },
    Gdp { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "REJECT")]
    Reject,
    #[serde(rename = "NO_REJECT")]
    NoReject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditMode {
    OneRunEpsDelta,
    OneRunFdp,
    ZrCompEpsDelta,
    ZrCompGdpStrict,
    ZrCompGdpRelaxed,
    ZrCondEpsDelta,
    ZrCondFdp,
    PureDpTampered,
    PureDpUntampered,
    PropensityFalsify,
}

impl AuditMode {
    /// Modes whose correct counts come from tampered (retained) guesses.
    pub fn needs_tampering(self) -> bool {
        matches!(
            self,
            Self::ZrCondEpsDelta | Self::ZrCondFdp | Self::PureDpTampered | Self::PropensityFalsify
        )
    }

    /// Modes that need propensity scores on the records.
    pub fn needs_propensity(self) -> bool {
        self.needs_tampering() || matches!(self, Self::PureDpUntampered)
    }
}

/// Outcome of one audit. `threshold` carries the mode's test statistic: the
/// integer rejection threshold v for threshold tests, r[0] + h[0] for the
/// trade-off recursion, or the exact p-value for the pure-DP tails.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: String,
    pub mode: AuditMode,
    pub hypothesis: PrivacyHypothesis,
    pub decision: Decision,
    pub m: usize,
    pub r: usize,
    pub c: usize,
    pub threshold: f64,
    pub p: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_ds: Option<f64>,
    /// Total error budget actually spent (p, or p + δ_DS for the relaxed GDP audit).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_bound: Option<f64>,
    /// Retained bits B as a '0'/'1' string, recorded for reproducibility.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tampering_draw_recorded: Option<String>,
}

impl AuditReport {
    fn new(
        mode: AuditMode,
        hypothesis: PrivacyHypothesis,
        decision: Decision,
        input: &AuditInput,
        c: usize,
        threshold: f64,
    ) -> Self {
        Self {
            schema_version: "1".to_string(),
            mode,
            hypothesis,
            decision,
            m: input.m(),
            r: input.r,
            c,
            threshold,
            p: input.p,
            seed: input.seed,
            eta: None,
            delta_ds: None,
            effective_error: None,
            empirical_bound: None,
            tampering_draw_recorded: tampering_bits(&input.records),
        }
    }
}

fn tampering_bits(records: &[AuditRecord]) -> Option<String> {
    if records.iter().all(|r| r.retained.is_none()) {
        return None;
    }
    Some(
        records
            .iter()
            .map(|r| if r.retained == Some(true) { '1' } else { '0' })
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Exact tails
// ---------------------------------------------------------------------------

/// P(Binom(n, q) ≥ v), exact to ~1e-14 relative for n ≤ 1e5.
///
/// `v ≤ 0` returns 1 and `v > n` returns 0.
pub fn binom_tail(n: usize, q: f64, v: i64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&q));
    if v <= 0 {
        return 1.0;
    }
    if v > n as i64 {
        return 0.0;
    }
    if q == 0.0 {
        return 0.0; // v >= 1 correct draws are impossible
    }
    if q == 1.0 {
        return 1.0; // all n draws succeed and v <= n
    }
    let v = v as usize;
    let lnf = ln_factorials(n);
    let ln_pmf = |k: usize| -> f64 {
        lnf[n] - lnf[k] - lnf[n - k] + k as f64 * q.ln() + (n - k) as f64 * (-q).ln_1p()
    };
    let mode = (q * n as f64) as usize;
    if v > mode {
        // Terms decay away from the mode: sum ascending magnitude, from n down.
        let mut acc = 0.0;
        for k in (v..=n).rev() {
            acc += ln_pmf(k).exp();
        }
        acc.min(1.0)
    } else {
        let mut acc = 0.0;
        for k in 0..v {
            acc += ln_pmf(k).exp();
        }
        (1.0 - acc).clamp(0.0, 1.0)
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 1..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// The correction weight α_{r,ε}(v) = Σ_{i∈[v]} P(Z = v − i) / i with
/// Z ~ Binom(r, e^ε/(1+e^ε)).
pub fn alpha_term(r: usize, eps: f64, v: i64) -> f64 {
    if v <= 0 {
        return 0.0;
    }
    let q = logistic(eps);
    let lnf = ln_factorials(r);
    let ln_q = q.ln();
    let ln_1q = (-q).ln_1p();
    let mut acc = 0.0;
    for i in 1..=v {
        let k = v - i;
        if k > r as i64 {
            continue;
        }
        let k = k as usize;
        let ln_pmf = lnf[r] - lnf[k] - lnf[r - k] + k as f64 * ln_q + (r - k) as f64 * ln_1q;
        acc += ln_pmf.exp() / i as f64;
    }
    acc
}

/// Upper tail P(Σ ξ_i ≥ v) of a Poisson-binomial with success probabilities
/// `probs`, by exact dynamic-programming convolution.
pub fn poisson_binomial_tail(probs: &[f64], v: i64) -> f64 {
    let n = probs.len();
    if v <= 0 {
        return 1.0;
    }
    if v > n as i64 {
        return 0.0;
    }
    let mut pmf = vec![0.0_f64; n + 1];
    pmf[0] = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        debug_assert!((0.0..=1.0).contains(&p));
        for j in (1..=i + 1).rev() {
            pmf[j] = pmf[j] * (1.0 - p) + pmf[j - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    let v = v as usize;
    let mut acc = 0.0;
    for k in (v..=n).rev() {
        acc += pmf[k];
    }
    acc.min(1.0)
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
// Tampering
// ---------------------------------------------------------------------------

/// Maximal admissible tampering parameter for a record with propensity `pi`.
///
/// `eps = Some(ε)` uses the (ε, δ)-DP rule b = (1 + e^{−ε−ε_DS}) / (1 + e^{−ε});
/// `eps = None` uses the f-DP rule b = e^{−ε_DS}. Degenerate propensities
/// (π̂ ∈ {0, 1}) drop the guess outright (b = 0), the conservative direction.
pub fn tamper_b(pi: f64, eps: Option<f64>) -> f64 {
    debug_assert!((0.0..=1.0).contains(&pi));
    if pi <= 0.0 || pi >= 1.0 {
        return 0.0;
    }
    let eps_ds = crate::propensity::local_shift(pi);
    match eps {
        Some(e) => (1.0 + (-e - eps_ds).exp()) / (1.0 + (-e).exp()),
        None => (-eps_ds).exp(),
    }
}

/// Fill each record's tampering parameter and draw its retained bit.
///
/// One uniform draw is consumed per record in index order regardless of its
/// guess, so the realization depends only on `(records' propensities, eps,
/// seed)`.
pub fn tamper(records: &mut [AuditRecord], eps: Option<f64>, seed: u64) -> Result<()> {
    let mut rng = stream(seed, "tamper", 0);
    for rec in records.iter_mut() {
        let pi = rec.pi_hat.ok_or_else(|| {
            Error::InvalidInput(format!("record {}: tampering requires pi_hat", rec.id))
        })?;
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::InvalidInput(format!(
                "record {}: pi_hat must lie in [0,1]",
                rec.id
            )));
        }
        let b = tamper_b(pi, eps);
        let u: f64 = rng.gen();
        rec.tamper_b = Some(b);
        rec.retained = Some(u < b);
    }
    Ok(())
}

fn raw_correct_count(records: &[AuditRecord]) -> usize {
    records
        .iter()
        .filter(|r| r.guess != 0 && r.guess == r.membership)
        .count()
}

fn tampered_correct_count(records: &[AuditRecord]) -> Result<usize> {
    let mut c = 0;
    for r in records {
        let retained = r.retained.ok_or_else(|| {
            Error::InvalidInput(format!("record {}: audit requires tampering first", r.id))
        })?;
        if retained && r.guess != 0 && r.guess == r.membership {
            c += 1;
        }
    }
    Ok(c)
}

// ---------------------------------------------------------------------------
// (ε, δ) threshold tests
// ---------------------------------------------------------------------------

// Smallest v ∈ [0, r + 1] with
//   P(Binom(r, e^ε/(1+e^ε)) ≥ v) + α_{r,ε}(v)·m·δ·(1 + e^{−ε}) ≤ p,
// or r + 1 when no v qualifies. Exhaustive for desk-scale r; descending
// early-stop scan beyond that (choosing a larger v is always conservative).
fn eps_delta_threshold(r: usize, m: usize, eps: f64, delta: f64, p: f64) -> usize {
    let q = logistic(eps);
    let bound = |v: i64| -> f64 {
        binom_tail(r, q, v) + alpha_term(r, eps, v) * m as f64 * delta * (1.0 + (-eps).exp())
    };
    if r <= 4096 {
        for v in 0..=(r as i64 + 1) {
            if bound(v) <= p {
                return v as usize;
            }
        }
        r + 1
    } else {
        let mut best = r + 2;
        for v in (0..=(r as i64 + 1)).rev() {
            if bound(v) <= p {
                best = v as usize;
            } else {
                break;
            }
        }
        if best > r + 1 {
            r + 1
        } else {
            best
        }
    }
}

fn eps_delta_decision(
    input: &AuditInput,
    mode: AuditMode,
    eps: f64,
    delta: f64,
    c: usize,
) -> AuditReport {
    let v = eps_delta_threshold(input.r, input.m(), eps, delta, input.p);
    let decision = if c >= v { Decision::Reject } else { Decision::NoReject };
    AuditReport::new(
        mode,
        PrivacyHypothesis::EpsDelta { eps, delta },
        decision,
        input,
        c,
        v as f64,
    )
}

/// One-run (ε, δ) audit: untampered correct count against the binomial
/// benchmark. Valid when memberships were randomized (no shift).
pub fn one_run_eps_delta(input: &AuditInput, eps: f64, delta: f64) -> Result<AuditReport> {
    input.validate()?;
    let c = raw_correct_count(&input.records);
    Ok(eps_delta_decision(input, AuditMode::OneRunEpsDelta, eps, delta, c))
}

/// Conditional zero-run (ε, δ) audit on tampered guesses.
///
/// Requires [`tamper`] to have been applied with the same ε (the (ε, δ) rule).
pub fn audit_cond_eps_delta(input: &AuditInput, eps: f64, delta: f64) -> Result<AuditReport> {
    input.validate()?;
    let c = tampered_correct_count(&input.records)?;
    Ok(eps_delta_decision(input, AuditMode::ZrCondEpsDelta, eps, delta, c))
}

// ---------------------------------------------------------------------------
// f-DP success-count recursion
// ---------------------------------------------------------------------------

/// The success-count recursion deciding an f-DP hypothesis from `c` correct
/// guesses out of `r` active on `m` records.
///
/// Starting from r[c] = pc/m and h[c] = p(r−c)/m, iterate for k = c−1 … 0:
/// h[k] = f̄⁻¹(r[k+1]), r[k] = r[k+1] + k·(h[k] − h[k+1])/(r − k). Returns
/// (r[0] + h[0], reject) with rejection iff r[0] + h[0] ≥ r/m.
pub fn fdp_success_counts(
    p: f64,
    curve: &TradeoffCurve,
    r: usize,
    c: usize,
    m: usize,
) -> Result<(f64, bool)> {
    if m == 0 || c > r || r > m {
        return Err(Error::InvalidInput(format!(
            "need 0 <= c <= r <= m, got c={c} r={r} m={m}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("p must lie in (0,1), got {p}")));
    }
    let mf = m as f64;
    let mut r_next = p * c as f64 / mf;
    let mut h_next = p * (r - c) as f64 / mf;
    for k in (0..c).rev() {
        let h_k = curve.complement_inverse(r_next);
        let r_k = r_next + k as f64 * (h_k - h_next) / (r - k) as f64;
        r_next = r_k;
        h_next = h_k;
    }
    let stat = r_next + h_next;
    Ok((stat, stat >= r as f64 / mf))
}

fn fdp_decision(
    input: &AuditInput,
    mode: AuditMode,
    curve: &TradeoffCurve,
    c: usize,
) -> Result<AuditReport> {
    let (stat, reject) = fdp_success_counts(input.p, curve, input.r, c, input.m())?;
    let decision = if reject { Decision::Reject } else { Decision::NoReject };
    let hypothesis = match *curve {
        TradeoffCurve::Gaussian { mu } => PrivacyHypothesis::Gdp { mu },
        TradeoffCurve::GPrime { mu, .. } => PrivacyHypothesis::Gdp { mu },
        TradeoffCurve::EpsDelta { eps, delta } => PrivacyHypothesis::EpsDelta { eps, delta },
    };
    Ok(AuditReport::new(mode, hypothesis, decision, input, c, stat))
}

/// One-run f-DP audit from untampered correct counts.
pub fn one_run_fdp(input: &AuditInput, curve: &TradeoffCurve) -> Result<AuditReport> {
    input.validate()?;
    let c = raw_correct_count(&input.records);
    fdp_decision(input, AuditMode::OneRunFdp, curve, c)
}

/// Conditional zero-run f-DP audit on tampered guesses.
///
/// Requires [`tamper`] with the f-DP rule (`eps = None`).
pub fn audit_cond_fdp(input: &AuditInput, curve: &TradeoffCurve) -> Result<AuditReport> {
    input.validate()?;
    let c = tampered_correct_count(&input.records)?;
    fdp_decision(input, AuditMode::ZrCondFdp, curve, c)
}

// ---------------------------------------------------------------------------
// Compositional (worst-case shift) audits
// ---------------------------------------------------------------------------

fn require_exact_guess_count(input: &AuditInput) -> Result<()> {
    let active = input.active_count();
    if active != input.r {
        return Err(Error::Config(format!(
            "compositional audits require exactly r = {} active guesses, found {active} \
             (use balanced abstention)",
            input.r
        )));
    }
    Ok(())
}

/// Compositional zero-run (ε, δ) audit under worst-case shift (η, δ_DS).
///
/// Tests the deflated hypothesis (ε + ε̄_DS, 1 − (1−δ)(1−δ_DS)) with the
/// inflated Bernoulli rate, at the smallest integer v̂ such that
/// g(v̂) + 2m(δ + δ_DS − δδ_DS)·max_i (g(v̂−i) − g(v̂))/i ≤ p, where
/// g(u) = P(Binom(r, e^{ε+ε̄_DS}/(1+e^{ε+ε̄_DS})) ≥ u) and g(u) = 1 for u ≤ 0.
pub fn audit_comp_eps_delta(
    input: &AuditInput,
    eps: f64,
    delta: f64,
    eta: f64,
    delta_ds: f64,
) -> Result<AuditReport> {
    input.validate()?;
    require_exact_guess_count(input)?;
    if !(0.0..=1.0).contains(&delta_ds) {
        return Err(Error::Domain(format!("delta_ds must lie in [0,1], got {delta_ds}")));
    }
    let (eps_bar, _) = shift_summary(eta)?;
    let r = input.r;
    let m = input.m();
    let q = logistic(eps + eps_bar);

    // Precompute g(u) for u in 0..=r+1 (g(u) = 1 for u <= 0).
    let tails: Vec<f64> = (0..=r as i64 + 1).map(|u| binom_tail(r, q, u)).collect();
    let g = |u: i64| -> f64 {
        if u <= 0 {
            1.0
        } else {
            tails[u as usize]
        }
    };
    let mult = 2.0 * m as f64 * (delta + delta_ds - delta * delta_ds);
    let bound = |v: i64| -> f64 {
        // Terms with i > v are dominated by i = v since g is 1 at u <= 0.
        let mut worst = 0.0_f64;
        for i in 1..=v {
            worst = worst.max((g(v - i) - g(v)) / i as f64);
        }
        g(v) + mult * worst
    };
    let mut v_hat = r + 1;
    for v in 0..=(r as i64 + 1) {
        if bound(v) <= input.p {
            v_hat = v as usize;
            break;
        }
    }

    let w = raw_correct_count(&input.records);
    let decision = if w >= v_hat { Decision::Reject } else { Decision::NoReject };
    let mut report = AuditReport::new(
        AuditMode::ZrCompEpsDelta,
        PrivacyHypothesis::EpsDelta { eps, delta },
        decision,
        input,
        w,
        v_hat as f64,
    );
    report.eta = Some(eta);
    report.delta_ds = Some(delta_ds);
    report.effective_error = Some(input.p);
    Ok(report)
}

/// Which worst-case GDP correction to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GdpVariant {
    /// Success-count recursion against G′ = G_{√(μ²+μ̄_DS²)} ⊗ f_{0,δ_DS}; p-valid.
    Strict,
    /// Recursion against plain G_{√(μ²+μ̄_DS²)}; (p + δ_DS)-valid, so the
    /// caller must have pre-deducted δ_DS from its total budget.
    Relaxed,
}

/// Compositional zero-run μ-GDP audit under worst-case shift (η, δ_DS).
pub fn audit_comp_gdp(
    input: &AuditInput,
    mu: f64,
    eta: f64,
    delta_ds: f64,
    variant: GdpVariant,
) -> Result<AuditReport> {
    input.validate()?;
    require_exact_guess_count(input)?;
    if !(0.0..=1.0).contains(&delta_ds) {
        return Err(Error::Domain(format!("delta_ds must lie in [0,1], got {delta_ds}")));
    }
    let (_, mu_bar) = shift_summary(eta)?;
    let mu_comp = mu.hypot(mu_bar);
    let (curve, mode, effective) = match variant {
        GdpVariant::Strict => {
            let curve = if delta_ds == 0.0 {
                TradeoffCurve::gaussian(mu_comp)?
            } else {
                TradeoffCurve::gprime(mu_comp, delta_ds)?
            };
            (curve, AuditMode::ZrCompGdpStrict, input.p)
        }
        GdpVariant::Relaxed => {
            if input.p + delta_ds >= 1.0 {
                return Err(Error::Config(format!(
                    "relaxed GDP audit spends p + delta_ds = {} which is not a valid \
                     error probability",
                    input.p + delta_ds
                )));
            }
            (
                TradeoffCurve::gaussian(mu_comp)?,
                AuditMode::ZrCompGdpRelaxed,
                input.p + delta_ds,
            )
        }
    };
    let w = raw_correct_count(&input.records);
    let (stat, reject) = fdp_success_counts(input.p, &curve, input.r, w, input.m())?;
    let decision = if reject { Decision::Reject } else { Decision::NoReject };
    let mut report = AuditReport::new(
        mode,
        PrivacyHypothesis::Gdp { mu },
        decision,
        input,
        w,
        stat,
    );
    report.eta = Some(eta);
    report.delta_ds = Some(delta_ds);
    report.effective_error = Some(effective);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Pure-DP audits
// ---------------------------------------------------------------------------

/// Tampered pure-DP audit: rejects iff the exact binomial p-value of the
/// retained correct count is at most p.
///
/// Requires [`tamper`] with the (ε, δ = 0) rule. With ε = 0 this doubles as
/// the propensity-model falsification test: a claimed π̂ that under-penalizes
/// shift lets too many guesses through, and the fair-coin null rejects it.
pub fn audit_pure_tampered(input: &AuditInput, eps: f64) -> Result<AuditReport> {
    input.validate()?;
    let c = tampered_correct_count(&input.records)?;
    let active = input.active_count();
    let p_value = binom_tail(active, logistic(eps), c as i64);
    let decision = if p_value <= input.p { Decision::Reject } else { Decision::NoReject };
    let mode = if eps == 0.0 { AuditMode::PropensityFalsify } else { AuditMode::PureDpTampered };
    Ok(AuditReport::new(
        mode,
        PrivacyHypothesis::EpsDelta { eps, delta: 0.0 },
        decision,
        input,
        c,
        p_value,
    ))
}

/// Untampered pure-DP audit via Poisson-binomial dominance: the untampered
/// correct count is dominated by Σ ξ_i over active records with
/// ξ_i ~ Bernoulli(e^{ε+ε_DS(X_i)} / (1 + e^{ε+ε_DS(X_i)})).
pub fn audit_pure_untampered(input: &AuditInput, eps: f64) -> Result<AuditReport> {
    input.validate()?;
    let mut probs = Vec::new();
    for rec in &input.records {
        if rec.guess == 0 {
            continue;
        }
        let pi = rec.pi_hat.ok_or_else(|| {
            Error::InvalidInput(format!("record {}: untampered audit requires pi_hat", rec.id))
        })?;
        let eps_ds = crate::propensity::local_shift(pi);
        probs.push(if eps_ds.is_infinite() { 1.0 } else { logistic(eps + eps_ds) });
    }
    let c = raw_correct_count(&input.records);
    let p_value = poisson_binomial_tail(&probs, c as i64);
    let decision = if p_value <= input.p { Decision::Reject } else { Decision::NoReject };
    Ok(AuditReport::new(
        AuditMode::PureDpUntampered,
        PrivacyHypothesis::EpsDelta { eps, delta: 0.0 },
        decision,
        input,
        c,
        p_value,
    ))
}

// ---------------------------------------------------------------------------
// Empirical-parameter extraction
// ---------------------------------------------------------------------------

/// Supremum of rejected parameter values, by bisection on a monotone audit.
///
/// `audit(x)` must return whether the hypothesis indexed by `x` is rejected,
/// with rejection monotone (rejecting x implies rejecting every x' ≤ x).
/// Returns `lo` when even `lo` is not rejected (callers use lo = 0), `hi`
/// when the whole bracket rejects, and otherwise a rejected value within
/// `tol` of the supremum. Rejection at `hi` without rejection at `lo` is a
/// monotonicity violation and errors.
pub fn extract_empirical(
    mut audit: impl FnMut(f64) -> Result<bool>,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(hi > lo) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "bad bracket/tolerance: [{lo}, {hi}], tol {tol}"
        )));
    }
    if audit(hi)? {
        if !audit(lo)? {
            return Err(Error::NonMonotone { lo, hi });
        }
        return Ok(hi);
    }
    if !audit(lo)? {
        return Ok(lo);
    }
    // Invariant: lo rejected, hi not.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if audit(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Default search bracket for μ-GDP bounds.
pub const MU_BRACKET: (f64, f64) = (0.0, 20.0);
/// Default search bracket for ε bounds.
pub const EPS_BRACKET: (f64, f64) = (0.0, 10.0);
/// Default absolute tolerance for empirical-bound searches.
pub const SEARCH_TOL: f64 = 1e-3;

/// Empirical μ-GDP lower bound for the mode, with the seed policy each mode
/// requires: the conditional route tampers once with the f-DP rule and reuses
/// the realization across the search; the others are deterministic given the
/// guesses.
pub fn empirical_mu(
    input: &AuditInput,
    mode: AuditMode,
    shift: Option<(f64, f64)>,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    match mode {
        AuditMode::OneRunFdp => extract_empirical(
            |mu| Ok(one_run_fdp(input, &TradeoffCurve::gaussian(mu)?)?.decision == Decision::Reject),
            bracket,
            tol,
        ),
        AuditMode::ZrCondFdp => {
            let mut tampered = input.clone();
            tamper(&mut tampered.records, None, tampered.seed)?;
            extract_empirical(
                |mu| {
                    Ok(audit_cond_fdp(&tampered, &TradeoffCurve::gaussian(mu)?)?.decision
                        == Decision::Reject)
                },
                bracket,
                tol,
            )
        }
        AuditMode::ZrCompGdpStrict | AuditMode::ZrCompGdpRelaxed => {
            let (eta, delta_ds) = shift.ok_or_else(|| {
                Error::Config("compositional GDP search requires (eta, delta_ds)".into())
            })?;
            let variant = if mode == AuditMode::ZrCompGdpStrict {
                GdpVariant::Strict
            } else {
                GdpVariant::Relaxed
            };
            extract_empirical(
                |mu| {
                    Ok(audit_comp_gdp(input, mu, eta, delta_ds, variant)?.decision
                        == Decision::Reject)
                },
                bracket,
                tol,
            )
        }
        other => Err(Error::Config(format!("{other:?} is not a GDP-searchable mode"))),
    }
}

/// Empirical pure-DP ε lower bound. The (ε, δ) tampering rule depends on ε,
/// so the conditional and tampered-pure routes redraw the retained bits per
/// candidate ε with a seed derived from (master seed, ε bits).
pub fn empirical_eps(
    input: &AuditInput,
    mode: AuditMode,
    delta: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let tampered_decision = |eps: f64, pure: bool| -> Result<bool> {
        let mut work = input.clone();
        let seed = derive_seed(input.seed, "eps", eps.to_bits());
        tamper(&mut work.records, Some(eps), seed)?;
        let report = if pure {
            audit_pure_tampered(&work, eps)?
        } else {
            audit_cond_eps_delta(&work, eps, delta)?
        };
        Ok(report.decision == Decision::Reject)
    };
    match mode {
        AuditMode::OneRunEpsDelta => extract_empirical(
            |eps| Ok(one_run_eps_delta(input, eps, delta)?.decision == Decision::Reject),
            bracket,
            tol,
        ),
        AuditMode::ZrCondEpsDelta => {
            extract_empirical(|eps| tampered_decision(eps, false), bracket, tol)
        }
        AuditMode::PureDpTampered => {
            extract_empirical(|eps| tampered_decision(eps, true), bracket, tol)
        }
        AuditMode::PureDpUntampered => extract_empirical(
            |eps| Ok(audit_pure_untampered(input, eps)?.decision == Decision::Reject),
            bracket,
            tol,
        ),
        other => Err(Error::Config(format!("{other:?} is not an eps-searchable mode"))),
    }
}
