//! Monte Carlo experiments: audit validity, shift-robustness comparisons and
//! the abstention sweep.
//!
//! Every trial derives its own seeds from the plan's master seed, trials run
//! in parallel, and results merge in trial order, so a plan always produces
//! the same output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{
    audit_comp_gdp, audit_cond_fdp, audit_pure_tampered, empirical_mu, one_run_fdp, tamper,
    tamper_b, AuditInput, AuditMode, AuditRecord, Decision, GdpVariant, MU_BRACKET, SEARCH_TOL,
};
use crate::error::{Error, Result};
use crate::mia::{default_threshold, make_guesses, make_guesses_balanced, score_inner_product, AbstentionMode};
use crate::propensity::{crossfit, estimate_overlap};
use crate::rng::derive_seed;
use crate::synth::{generate, SynthConfig};
use crate::tradeoff::TradeoffCurve;

/// Which adversary ranks the abstention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adversary {
    Plain,
    PropensityAware,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// False-rejection rate of a true hypothesis.
    Validity,
    /// Per-r empirical bounds plus the best over the abstention grid.
    Sweep,
    /// Paired per-trial bounds across audit modes on identical data.
    Compare,
}

/// A full experiment description, readable from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub trials: usize,
    /// Per-trial generator template; its seed field is replaced by a
    /// trial-derived seed.
    pub synth: SynthConfig,
    pub modes: Vec<AuditMode>,
    /// Active-guess counts r to sweep.
    pub abstention_grid: Vec<usize>,
    pub adversary: Adversary,
    /// Audit error budget.
    pub p: f64,
    /// Bootstrap budget, carried for overall-confidence accounting.
    pub p_prime: f64,
    pub master_seed: u64,
    /// Hypothesis μ tested by validity experiments.
    #[serde(default)]
    pub hypothesis_mu: Option<f64>,
    /// Overlap slack fed to `estimate_overlap` for compositional modes.
    #[serde(default = "default_delta_ds")]
    pub delta_ds: f64,
    #[serde(default = "default_l2")]
    pub l2_lambda: f64,
    /// Fixed propensity value in place of fitting (oracle runs).
    #[serde(default)]
    pub oracle_propensity: Option<f64>,
    #[serde(default = "default_bracket_hi")]
    pub mu_bracket_hi: f64,
}

fn default_delta_ds() -> f64 {
    0.05
}
fn default_l2() -> f64 {
    0.01
}
fn default_bracket_hi() -> f64 {
    20.0
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be positive".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidInput("modes list is empty".into()));
        }
        if self.abstention_grid.is_empty() {
            return Err(Error::InvalidInput("abstention grid is empty".into()));
        }
        for &r in &self.abstention_grid {
            if r == 0 || r > self.synth.n {
                return Err(Error::InvalidInput(format!(
                    "abstention entry {r} outside [1, m = {}]",
                    self.synth.n
                )));
            }
        }
        if !(self.p > 0.0 && self.p_prime >= 0.0 && self.p + self.p_prime < 1.0) {
            return Err(Error::InvalidInput(format!(
                "budget p + p' must stay below 1, got {} + {}",
                self.p, self.p_prime
            )));
        }
        if self.kind == ExperimentKind::Validity && self.hypothesis_mu.is_none() {
            return Err(Error::InvalidInput(
                "validity experiments need hypothesis_mu".into(),
            ));
        }
        Ok(())
    }
}

/// Rejection-rate estimate with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rejections: usize,
    pub trials: usize,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    if trials == 0 {
        return (0.0, 1.0);
    }
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = phat + z2 / (2.0 * n);
    let margin = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((centre - margin) / denom).max(0.0),
        ((centre + margin) / denom).min(1.0),
    )
}

/// Per-r bounds for one mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub r: usize,
    /// Per-trial empirical bounds, in trial order.
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: AuditMode,
    pub per_r: Vec<SweepPoint>,
    /// Per-trial max over the abstention grid (the sweep's reported bound).
    pub best_bounds: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<RateEstimate>,
}

/// Fraction of trials where mode_a's bound is ≤ mode_b's.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseLeq {
    pub mode_a: AuditMode,
    pub mode_b: AuditMode,
    pub fraction_a_leq_b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub master_seed: u64,
    /// Overall confidence 1 − p − p′ of the reported bounds.
    pub confidence: f64,
    pub mode_results: Vec<ModeResult>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub pairwise_leq: Vec<PairwiseLeq>,
}

// Data shared by every mode within one trial.
struct TrialData {
    records: Vec<AuditRecord>, // membership + score + pi_hat, guesses unset
    scores: Vec<f64>,
    threshold: f64,
    tamper_seed: u64,
}

fn run_trial_data(plan: &ExperimentPlan, trial: usize) -> Result<TrialData> {
    let mut cfg = plan.synth;
    cfg.seed = derive_seed(plan.master_seed, "trial", trial as u64);
    let ds = generate(&cfg)?;
    let features = ds.all_features();
    let memberships = ds.memberships();
    let scores = score_inner_product(&ds.released, &features)?;
    let pi = match plan.oracle_propensity {
        Some(v) => vec![v; features.len()],
        None => crossfit(
            &features,
            &memberships,
            plan.l2_lambda,
            derive_seed(plan.master_seed, "propensity", trial as u64),
        )?,
    };
    let threshold = default_threshold(&scores)?;
    let records = memberships
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rec = AuditRecord::new(i.to_string(), s);
            rec.score = Some(scores[i]);
            rec.pi_hat = Some(pi[i]);
            rec
        })
        .collect();
    Ok(TrialData {
        records,
        scores,
        threshold,
        tamper_seed: derive_seed(plan.master_seed, "tamper", trial as u64),
    })
}

// Guesses for one (mode, r). Compositional modes need exactly r active
// guesses (balanced), one-run baselines are shift-ignorant by definition
// (plain abstention), and the plan's adversary setting varies the
// conditional modes, where the b-weighted keying belongs.
fn guesses_for(
    plan: &ExperimentPlan,
    data: &TrialData,
    mode: AuditMode,
    r: usize,
) -> Result<Vec<i8>> {
    let comp = matches!(
        mode,
        AuditMode::ZrCompEpsDelta | AuditMode::ZrCompGdpStrict | AuditMode::ZrCompGdpRelaxed
    );
    if comp {
        return Ok(make_guesses_balanced(&data.scores, r)?.guesses);
    }
    let adversary = match mode {
        AuditMode::OneRunEpsDelta | AuditMode::OneRunFdp => Adversary::Plain,
        _ => plan.adversary,
    };
    let gv = match adversary {
        Adversary::Plain => {
            make_guesses(&data.scores, data.threshold, r, AbstentionMode::Plain, None)?
        }
        Adversary::PropensityAware => {
            let b: Vec<f64> = data
                .records
                .iter()
                .map(|rec| tamper_b(rec.pi_hat.unwrap_or(0.5), None))
                .collect();
            make_guesses(
                &data.scores,
                data.threshold,
                r,
                AbstentionMode::PropensityAware,
                Some(&b),
            )?
        }
    };
    Ok(gv.guesses)
}

fn input_for(plan: &ExperimentPlan, data: &TrialData, guesses: Vec<i8>, r: usize) -> AuditInput {
    let mut records = data.records.clone();
    for (rec, g) in records.iter_mut().zip(guesses) {
        rec.guess = g;
    }
    AuditInput { records, r, p: plan.p, seed: data.tamper_seed }
}

fn overlap_for(plan: &ExperimentPlan, data: &TrialData) -> Result<(f64, f64)> {
    let pi: Vec<f64> = data.records.iter().map(|r| r.pi_hat.unwrap_or(0.5)).collect();
    let labels: Vec<i8> = data.records.iter().map(|r| r.membership).collect();
    let est = estimate_overlap(&pi, &labels, plan.delta_ds)?;
    Ok((est.eta, est.delta_ds))
}

// Empirical μ lower bound for one (mode, r) on one trial.
fn mode_bound(
    plan: &ExperimentPlan,
    data: &TrialData,
    mode: AuditMode,
    r: usize,
) -> Result<f64> {
    let input = input_for(plan, data, guesses_for(plan, data, mode, r)?, r);
    let bracket = (MU_BRACKET.0, plan.mu_bracket_hi);
    match mode {
        AuditMode::OneRunFdp | AuditMode::ZrCondFdp => {
            empirical_mu(&input, mode, None, bracket, SEARCH_TOL)
        }
        AuditMode::ZrCompGdpStrict | AuditMode::ZrCompGdpRelaxed => {
            let shift = overlap_for(plan, data)?;
            empirical_mu(&input, mode, Some(shift), bracket, SEARCH_TOL)
        }
        other => Err(Error::Config(format!(
            "{other:?} does not produce a μ bound in experiments"
        ))),
    }
}

// REJECT/NO_REJECT of the plan's hypothesis for one (mode, r) on one trial.
fn mode_decision(
    plan: &ExperimentPlan,
    data: &TrialData,
    mode: AuditMode,
    r: usize,
) -> Result<bool> {
    let mu = plan.hypothesis_mu.expect("validated");
    let mut input = input_for(plan, data, guesses_for(plan, data, mode, r)?, r);
    let decision = match mode {
        AuditMode::OneRunFdp => one_run_fdp(&input, &TradeoffCurve::gaussian(mu)?)?.decision,
        AuditMode::ZrCondFdp => {
            tamper(&mut input.records, None, input.seed)?;
            audit_cond_fdp(&input, &TradeoffCurve::gaussian(mu)?)?.decision
        }
        AuditMode::ZrCompGdpStrict | AuditMode::ZrCompGdpRelaxed => {
            let (eta, dds) = overlap_for(plan, data)?;
            let variant = if mode == AuditMode::ZrCompGdpStrict {
                GdpVariant::Strict
            } else {
                GdpVariant::Relaxed
            };
            audit_comp_gdp(&input, mu, eta, dds, variant)?.decision
        }
        AuditMode::PropensityFalsify => {
            tamper(&mut input.records, Some(0.0), input.seed)?;
            audit_pure_tampered(&input, 0.0)?.decision
        }
        other => {
            return Err(Error::Config(format!(
                "{other:?} is not supported in validity experiments"
            )))
        }
    };
    Ok(decision == Decision::Reject)
}

/// False-rejection rates of the plan's (true) hypothesis, one per mode.
pub fn run_validity(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let r = plan.abstention_grid[0];
    let per_trial: Vec<Vec<bool>> = (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let data = run_trial_data(plan, t)?;
            plan.modes
                .iter()
                .map(|&mode| mode_decision(plan, &data, mode, r))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mode_results = plan
        .modes
        .iter()
        .enumerate()
        .map(|(mi, &mode)| {
            let rejections = per_trial.iter().filter(|row| row[mi]).count();
            let (lo, hi) = wilson_interval(rejections, plan.trials);
            ModeResult {
                mode,
                per_r: Vec::new(),
                best_bounds: Vec::new(),
                rejection: Some(RateEstimate {
                    rejections,
                    trials: plan.trials,
                    rate: rejections as f64 / plan.trials as f64,
                    wilson_low: lo,
                    wilson_high: hi,
                }),
            }
        })
        .collect();
    Ok(ExperimentResult {
        kind: plan.kind,
        trials: plan.trials,
        master_seed: plan.master_seed,
        confidence: 1.0 - plan.p - plan.p_prime,
        mode_results,
        pairwise_leq: Vec::new(),
    })
}

// Per-trial bounds for every (mode, r) in the plan, in trial order.
fn sweep_bounds(plan: &ExperimentPlan) -> Result<Vec<Vec<Vec<f64>>>> {
    // trials × modes × grid
    (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let data = run_trial_data(plan, t)?;
            plan.modes
                .iter()
                .map(|&mode| {
                    plan.abstention_grid
                        .iter()
                        .map(|&r| mode_bound(plan, &data, mode, r))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

fn collect_mode_results(plan: &ExperimentPlan, raw: &[Vec<Vec<f64>>]) -> Vec<ModeResult> {
    plan.modes
        .iter()
        .enumerate()
        .map(|(mi, &mode)| {
            let per_r = plan
                .abstention_grid
                .iter()
                .enumerate()
                .map(|(ri, &r)| SweepPoint {
                    r,
                    bounds: raw.iter().map(|t| t[mi][ri]).collect(),
                })
                .collect();
            let best_bounds = raw
                .iter()
                .map(|t| t[mi].iter().cloned().fold(f64::NEG_INFINITY, f64::max))
                .collect();
            ModeResult { mode, per_r, best_bounds, rejection: None }
        })
        .collect()
}

/// Abstention sweep: per-r bounds and the per-trial max over the grid.
/// The max is part of the audit protocol, not a corrected statistic; both
/// views are reported.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let raw = sweep_bounds(plan)?;
    Ok(ExperimentResult {
        kind: plan.kind,
        trials: plan.trials,
        master_seed: plan.master_seed,
        confidence: 1.0 - plan.p - plan.p_prime,
        mode_results: collect_mode_results(plan, &raw),
        pairwise_leq: Vec::new(),
    })
}

/// Paired comparison: identical data and seeds per trial across modes, with
/// pairwise fractions of trials where one mode's bound stays below another's.
pub fn compare_modes(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let raw = sweep_bounds(plan)?;
    let mode_results = collect_mode_results(plan, &raw);
    let mut pairwise = Vec::new();
    for a in 0..plan.modes.len() {
        for b in 0..plan.modes.len() {
            if a == b {
                continue;
            }
            let leq = mode_results[a]
                .best_bounds
                .iter()
                .zip(&mode_results[b].best_bounds)
                .filter(|(x, y)| x <= y)
                .count();
            pairwise.push(PairwiseLeq {
                mode_a: plan.modes[a],
                mode_b: plan.modes[b],
                fraction_a_leq_b: leq as f64 / plan.trials as f64,
            });
        }
    }
    Ok(ExperimentResult {
        kind: plan.kind,
        trials: plan.trials,
        master_seed: plan.master_seed,
        confidence: 1.0 - plan.p - plan.p_prime,
        mode_results,
        pairwise_leq: pairwise,
    })
}

/// Run the plan's kind.
pub fn run(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    match plan.kind {
        ExperimentKind::Validity => run_validity(plan),
        ExperimentKind::Sweep => run_sweep(plan),
        ExperimentKind::Compare => compare_modes(plan),
    }
}
