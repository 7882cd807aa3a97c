//! Bootstrap uncertainty quantification for empirical privacy bounds.
//!
//! The empirical bound is a function of the estimated propensity scores with
//! everything else (guesses, memberships, the released model) held fixed.
//! Resampling the propensity-training data with replacement, refitting, and
//! re-extracting the bound propagates estimation uncertainty into a
//! conservative quantile. Replicates are recentered around the full-data
//! bound before the quantile is taken.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{empirical_mu, AuditInput, AuditMode, AuditRecord};
use crate::error::{Error, Result};
use crate::propensity;
use crate::rng::{derive_seed, stream};
use rand::Rng;

/// Which side of the replicate distribution the reported quantile guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileDirection {
    /// ⌈level·K⌉-th smallest — the default for privacy LOWER bounds.
    Lower,
    /// ⌈level·K⌉-th largest.
    Upper,
}

/// Bootstrap replicates and the reported quantile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapSummary {
    /// Raw replicate bounds ṽ_k.
    pub raw: Vec<f64>,
    /// Recentered bounds v̂_k = ṽ_k + ṽ − median(ṽ).
    pub values: Vec<f64>,
    /// Full-data bound ṽ.
    pub center: f64,
    pub k: usize,
    pub quantile_level: f64,
    pub direction: QuantileDirection,
    pub result: f64,
    /// Overall confidence 1 − p − p′ when the audit budget is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Order-statistic quantile: `Lower` takes the ⌈level·K⌉-th smallest value,
/// `Upper` the ⌈level·K⌉-th largest.
pub fn empirical_quantile(values: &[f64], level: f64, direction: QuantileDirection) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty sample for quantile".into()));
    }
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::Domain(format!("quantile level must lie in [0,1], got {level}")));
    }
    let k = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let rank = ((level * k as f64).ceil() as usize).clamp(1, k);
    Ok(match direction {
        QuantileDirection::Lower => sorted[rank - 1],
        QuantileDirection::Upper => sorted[k - rank],
    })
}

/// Generic bootstrap runner: `eval(Some(k))` produces replicate k's bound,
/// `eval(None)` the full-data center. Replicates run in parallel and merge
/// in index order, so results are deterministic for any thread count.
pub fn bootstrap_core(
    k: usize,
    p_prime: f64,
    direction: QuantileDirection,
    eval: impl Fn(Option<usize>) -> Result<f64> + Sync,
) -> Result<BootstrapSummary> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 replicates, got {k}")));
    }
    if !(p_prime > 0.0 && p_prime < 1.0) {
        return Err(Error::InvalidInput(format!("p_prime must lie in (0,1), got {p_prime}")));
    }
    let raw: Vec<f64> = (0..k)
        .into_par_iter()
        .map(|i| eval(Some(i)))
        .collect::<Result<Vec<_>>>()?;
    let center = eval(None)?;

    let med = {
        let mut s = raw.clone();
        s.sort_by(|a, b| a.total_cmp(b));
        if k % 2 == 1 {
            s[k / 2]
        } else {
            0.5 * (s[k / 2 - 1] + s[k / 2])
        }
    };
    let values: Vec<f64> = raw.iter().map(|v| v + center - med).collect();
    let result = empirical_quantile(&values, p_prime, direction)?;
    let warning = if k < 50 {
        Some(format!("K = {k} is below the production floor of 50 replicates"))
    } else {
        None
    };
    Ok(BootstrapSummary {
        raw,
        values,
        center,
        k,
        quantile_level: p_prime,
        direction,
        result,
        confidence: None,
        warning,
    })
}

/// The audit whose bound gets bootstrapped: guesses, memberships and budget
/// are fixed; only the propensity column varies across replicates.
#[derive(Debug, Clone)]
pub struct BootstrapAuditSpec {
    /// Audit records with guesses already made; `pi_hat` is overwritten
    /// per replicate.
    pub records: Vec<AuditRecord>,
    /// Feature rows for the audit records, used to score fitted models.
    pub audit_features: Vec<Vec<f64>>,
    pub r: usize,
    /// Audit error budget p.
    pub p: f64,
    /// GDP-searchable audit mode (conditional or one-run).
    pub mode: AuditMode,
    pub l2_lambda: f64,
    pub bracket: (f64, f64),
    pub tol: f64,
    pub seed: u64,
}

/// Bootstrap the empirical privacy lower bound over resamples of the
/// propensity-training dataset.
///
/// With a separate training set, each replicate refits on a resample of it
/// and scores the audit features. Without one, the audit records themselves
/// are split once into two fixed halves and each replicate resamples within
/// each half, fitting on one half's resample and scoring the other half —
/// so no record is ever scored by a model that saw it. Degenerate
/// single-class resamples are redrawn up to 10 times.
pub fn bootstrap_bound(
    train: Option<(&[Vec<f64>], &[i8])>,
    spec: &BootstrapAuditSpec,
    k: usize,
    p_prime: f64,
    direction: QuantileDirection,
) -> Result<BootstrapSummary> {
    let m = spec.records.len();
    if spec.audit_features.len() != m {
        return Err(Error::InvalidInput(
            "audit_features length does not match records".into(),
        ));
    }
    let memberships: Vec<i8> = spec.records.iter().map(|r| r.membership).collect();

    // Fixed halves for the cross-fitting fallback.
    let halves: Option<(Vec<usize>, Vec<usize>)> = if train.is_none() {
        let mut perm: Vec<usize> = (0..m).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut stream(spec.seed, "halves", 0));
        Some((perm[..m / 2].to_vec(), perm[m / 2..].to_vec()))
    } else {
        None
    };

    let pi_for = |replicate: Option<usize>| -> Result<Vec<f64>> {
        match (train, replicate) {
            (Some((tx, ty)), Some(kk)) => {
                let (rx, ry) = resample_both_classes(tx, ty, spec.seed, kk as u64)?;
                let model = propensity::fit(
                    &rx,
                    &ry,
                    spec.l2_lambda,
                    derive_seed(spec.seed, "fit", kk as u64),
                )?;
                Ok(spec.audit_features.iter().map(|x| model.predict(x)).collect())
            }
            (Some((tx, ty)), None) => {
                let model =
                    propensity::fit(tx, ty, spec.l2_lambda, derive_seed(spec.seed, "fit-center", 0))?;
                Ok(spec.audit_features.iter().map(|x| model.predict(x)).collect())
            }
            (None, Some(kk)) => {
                let (h1, h2) = halves.as_ref().unwrap();
                let mut pi = vec![0.5; m];
                for (fit_half, score_half, tag) in
                    [(h1, h2, "half1"), (h2, h1, "half2")]
                {
                    let fx: Vec<Vec<f64>> =
                        fit_half.iter().map(|&i| spec.audit_features[i].clone()).collect();
                    let fy: Vec<i8> = fit_half.iter().map(|&i| memberships[i]).collect();
                    let (rx, ry) = resample_both_classes(
                        &fx,
                        &fy,
                        derive_seed(spec.seed, tag, 0),
                        kk as u64,
                    )?;
                    let model = propensity::fit(
                        &rx,
                        &ry,
                        spec.l2_lambda,
                        derive_seed(spec.seed, tag, kk as u64 + 1),
                    )?;
                    for &i in score_half.iter() {
                        pi[i] = model.predict(&spec.audit_features[i]);
                    }
                }
                Ok(pi)
            }
            (None, None) => propensity::crossfit(
                &spec.audit_features,
                &memberships,
                spec.l2_lambda,
                derive_seed(spec.seed, "crossfit-center", 0),
            ),
        }
    };

    let eval = |replicate: Option<usize>| -> Result<f64> {
        let pi = pi_for(replicate)?;
        let mut records = spec.records.clone();
        for (rec, &p) in records.iter_mut().zip(&pi) {
            rec.pi_hat = Some(p);
        }
        let tamper_seed = derive_seed(
            spec.seed,
            "replicate",
            replicate.map(|kk| kk as u64 + 1).unwrap_or(0),
        );
        let input = AuditInput { records, r: spec.r, p: spec.p, seed: tamper_seed };
        empirical_mu(&input, spec.mode, None, spec.bracket, spec.tol)
    };

    let mut summary = bootstrap_core(k, p_prime, direction, eval)?;
    summary.confidence = Some(1.0 - spec.p - p_prime);
    Ok(summary)
}

// Seeded resample with replacement that keeps both classes present,
// redrawing up to 10 times before giving up.
fn resample_both_classes(
    features: &[Vec<f64>],
    labels: &[i8],
    seed: u64,
    replicate: u64,
) -> Result<(Vec<Vec<f64>>, Vec<i8>)> {
    let n = features.len();
    for attempt in 0..10u64 {
        let mut rng = stream(derive_seed(seed, "resample", replicate), "attempt", attempt);
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let ry: Vec<i8> = idx.iter().map(|&i| labels[i]).collect();
        if ry.contains(&1) && ry.contains(&-1) {
            let rx = idx.iter().map(|&i| features[i].clone()).collect();
            return Ok((rx, ry));
        }
    }
    Err(Error::SingleClass(format!(
        "replicate {replicate}: resample stayed single-class after 10 attempts"
    )))
}
