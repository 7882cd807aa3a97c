//! Membership-inference scoring, guessing and abstention.
//!
//! Scores come either from files or from the white-box inner-product
//! statistic; guesses threshold the scores and abstain down to the r most
//! confident records. The propensity-aware variant keys confidence by
//! b·|margin|, so structurally shifted records are abstained on first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Guesses plus the ranking statistic that chose the active set.
#[derive(Debug, Clone, PartialEq)]
pub struct GuessVector {
    /// Per-record guess in {−1, 0, +1}.
    pub guesses: Vec<i8>,
    /// Number of nonzero guesses.
    pub active_count: usize,
    /// Median/MAD-standardized selection key used for abstention.
    pub selection_key: Vec<f64>,
}

/// How abstention ranks records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbstentionMode {
    /// Key = |score − threshold| (standardized).
    Plain,
    /// Key = b·|score − threshold| (standardized); requires tampering
    /// parameters b.
    PropensityAware,
}

/// Per-record inner products ⟨x, θ⟩.
pub fn score_inner_product(theta: &[f64], features: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut scores = Vec::with_capacity(features.len());
    for (i, row) in features.iter().enumerate() {
        if row.len() != theta.len() {
            return Err(Error::InvalidInput(format!(
                "record {i}: feature dimension {} does not match theta dimension {}",
                row.len(),
                theta.len()
            )));
        }
        scores.push(row.iter().zip(theta).map(|(a, b)| a * b).sum());
    }
    Ok(scores)
}

/// Median score; balanced guessing under symmetric classes.
pub fn default_threshold(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no scores".into()));
    }
    Ok(median(scores))
}

/// Threshold the scores and keep the top-r records by selection key.
///
/// Guess sign is +1 for score strictly above the threshold, −1 otherwise.
/// Keys are |score − threshold| scaled by the scores' MAD (so b-weighting in
/// the propensity-aware mode is scale-free); ties break by ascending record
/// index.
pub fn make_guesses(
    scores: &[f64],
    threshold: f64,
    r: usize,
    mode: AbstentionMode,
    b: Option<&[f64]>,
) -> Result<GuessVector> {
    let m = scores.len();
    if r > m {
        return Err(Error::InvalidInput(format!("r = {r} exceeds m = {m}")));
    }
    let weights = match mode {
        AbstentionMode::Plain => None,
        AbstentionMode::PropensityAware => {
            let b = b.ok_or_else(|| {
                Error::InvalidInput("propensity-aware abstention requires b".into())
            })?;
            if b.len() != m {
                return Err(Error::InvalidInput("b length does not match scores".into()));
            }
            Some(b)
        }
    };

    let med = median(scores);
    let mad = {
        let devs: Vec<f64> = scores.iter().map(|s| (s - med).abs()).collect();
        let v = median(&devs);
        if v > 0.0 {
            v
        } else {
            1.0
        }
    };
    let selection_key: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let margin = (s - threshold).abs() / mad;
            match weights {
                Some(b) => b[i] * margin,
                None => margin,
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| selection_key[b].total_cmp(&selection_key[a]).then(a.cmp(&b)));

    let mut guesses = vec![0i8; m];
    for &i in order.iter().take(r) {
        guesses[i] = if scores[i] > threshold { 1 } else { -1 };
    }
    let active_count = guesses.iter().filter(|&&g| g != 0).count();
    Ok(GuessVector { guesses, active_count, selection_key })
}

/// Balanced guesses with exactly r active: +1 on the ⌈r/2⌉ largest scores,
/// −1 on the ⌊r/2⌋ smallest (the assignment maximizing Σ Yᵢ·Tᵢ at fixed
/// counts). Compositional audits require this exact-count mode.
pub fn make_guesses_balanced(scores: &[f64], r: usize) -> Result<GuessVector> {
    let m = scores.len();
    if r > m {
        return Err(Error::InvalidInput(format!("r = {r} exceeds m = {m}")));
    }
    let k_plus = r - r / 2;
    let k_minus = r / 2;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut guesses = vec![0i8; m];
    for &i in order.iter().take(k_plus) {
        guesses[i] = 1;
    }
    for &i in order.iter().rev().take(k_minus) {
        if guesses[i] != 0 {
            return Err(Error::InvalidInput(format!(
                "r = {r} leaves the +1 and -1 halves overlapping"
            )));
        }
        guesses[i] = -1;
    }
    let med = median(scores);
    let selection_key: Vec<f64> = scores.iter().map(|s| (s - med).abs()).collect();
    Ok(GuessVector { guesses, active_count: r, selection_key })
}

fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
