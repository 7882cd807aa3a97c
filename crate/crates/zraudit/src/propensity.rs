//! Propensity-score estimation and overlap diagnostics.
//!
//! The propensity π(x) = P(S = 1 | X = x) quantifies how much membership
//! signal the raw features carry. It is estimated with an L2-regularized
//! linear-logistic model (full-batch gradient descent with Armijo
//! backtracking; deterministic and dependency-free), Platt-calibrated on a
//! held-out 20% split, optionally after a PCA reduction. Cross-fitting keeps
//! each audit record's score independent of its own label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use rand::seq::SliceRandom;

/// Gradient-norm stopping criterion for the optimizer.
const GRAD_TOL: f64 = 1e-6;
/// Iteration cap for the optimizer.
const MAX_ITER: usize = 5000;
/// Fraction of records held out for Platt calibration.
const CALIBRATION_FRACTION: f64 = 0.2;

/// A fitted propensity model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropensityModel {
    /// `[intercept, w_1, ..., w_k]` over the kept, standardized features.
    pub weights: Vec<f64>,
    /// Platt calibration pair (a, b): calibrated score = σ(a·z + b).
    pub platt: (f64, f64),
    /// Per-kept-feature (mean, stddev); stddevs are strictly positive.
    pub standardizer: Vec<(f64, f64)>,
    /// Indices of the input features that were kept (constants dropped).
    pub kept: Vec<usize>,
    /// Optional PCA applied before standardization/fitting.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<PcaProjection>,
}

impl PropensityModel {
    /// Linear logit of the (projected,) standardized features.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let projected;
        let x = match &self.projection {
            Some(p) => {
                projected = p.transform(x);
                projected.as_slice()
            }
            None => x,
        };
        let mut z = self.weights[0];
        for (j, &idx) in self.kept.iter().enumerate() {
            let (mean, std) = self.standardizer[j];
            z += self.weights[j + 1] * (x[idx] - mean) / std;
        }
        z
    }

    /// Uncalibrated sigmoid of the logit.
    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Platt-calibrated propensity estimate.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let (a, b) = self.platt;
        sigmoid(a * self.logit(x) + b)
    }
}

/// Overlap parameters (η, δ_DS) backing the worst-case shift corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapEstimate {
    /// Largest η such that each class keeps at most a δ_DS fraction of
    /// records with min(π̂, 1−π̂) < η.
    pub eta: f64,
    pub delta_ds: f64,
}

/// Fit the regularized logistic model with Platt calibration.
///
/// Labels are ±1. The mean logistic loss plus (λ/2)·‖w‖² over the
/// non-intercept weights is minimized on a seeded 80% split to gradient norm
/// ≤ 1e-6; the Platt pair is fit on the held-out 20%. The split is stratified
/// per class with a shared positional shuffle, so label-symmetric datasets
/// stay symmetric inside the training portion.
pub fn fit(
    features: &[Vec<f64>],
    labels: &[i8],
    l2_lambda: f64,
    seed: u64,
) -> Result<PropensityModel> {
    validate_training_data(features, labels)?;
    if features.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "propensity fit needs at least 10 records, got {}",
            features.len()
        )));
    }
    if !(l2_lambda > 0.0) {
        return Err(Error::InvalidInput(format!("l2_lambda must be > 0, got {l2_lambda}")));
    }

    let d = features[0].len();
    let (means, stds): (Vec<f64>, Vec<f64>) = column_moments(features);
    let kept: Vec<usize> = (0..d).filter(|&j| stds[j] > 0.0).collect();
    let standardizer: Vec<(f64, f64)> = kept.iter().map(|&j| (means[j], stds[j])).collect();

    let standardized: Vec<Vec<f64>> = features
        .iter()
        .map(|row| {
            kept.iter()
                .map(|&j| (row[j] - means[j]) / stds[j])
                .collect()
        })
        .collect();

    let (train_idx, calib_idx) = stratified_split(labels, CALIBRATION_FRACTION, seed);
    let train_x: Vec<&[f64]> = train_idx.iter().map(|&i| standardized[i].as_slice()).collect();
    let train_y: Vec<i8> = train_idx.iter().map(|&i| labels[i]).collect();
    let weights = optimize_logistic(&train_x, &train_y, l2_lambda);

    // Platt pair on held-out raw logits; identity when the calibration split
    // is degenerate.
    let mut platt = (1.0, 0.0);
    let calib_y: Vec<i8> = calib_idx.iter().map(|&i| labels[i]).collect();
    if calib_y.contains(&1) && calib_y.contains(&-1) {
        let logits: Vec<Vec<f64>> = calib_idx
            .iter()
            .map(|&i| vec![linear_logit(&weights, &standardized[i])])
            .collect();
        let logit_refs: Vec<&[f64]> = logits.iter().map(|v| v.as_slice()).collect();
        let w = optimize_logistic(&logit_refs, &calib_y, 1e-6);
        platt = (w[1], w[0]);
    }

    Ok(PropensityModel {
        weights,
        platt,
        standardizer,
        kept,
        projection: None,
    })
}

/// Cross-fitted propensity scores: two seeded folds, each scored by the
/// model fit on the other fold.
///
/// The fold assignment depends only on (m, seed) — never on labels — so
/// flipping one record's label cannot change that record's own score.
pub fn crossfit(
    features: &[Vec<f64>],
    labels: &[i8],
    l2_lambda: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    validate_training_data(features, labels)?;
    let m = features.len();
    if m < 20 {
        return Err(Error::InvalidInput(format!(
            "cross-fitting needs at least 20 records, got {m}"
        )));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut stream(seed, "crossfit-split", 0));
    let fold1: Vec<usize> = perm[..m / 2].to_vec();
    let fold2: Vec<usize> = perm[m / 2..].to_vec();

    let subset = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<i8>) {
        (
            idx.iter().map(|&i| features[i].clone()).collect(),
            idx.iter().map(|&i| labels[i]).collect(),
        )
    };
    let (x1, y1) = subset(&fold1);
    let (x2, y2) = subset(&fold2);
    let model1 = fit(&x1, &y1, l2_lambda, crate::rng::derive_seed(seed, "fold", 1))?;
    let model2 = fit(&x2, &y2, l2_lambda, crate::rng::derive_seed(seed, "fold", 2))?;

    let mut pi = vec![0.0; m];
    for &i in &fold1 {
        pi[i] = model2.predict(&features[i]);
    }
    for &i in &fold2 {
        pi[i] = model1.predict(&features[i]);
    }
    Ok(pi)
}

/// Local distribution-shift leakage ε_DS = |log(π̂ / (1 − π̂))|.
///
/// Degenerate propensities (π̂ ∈ {0, 1}) carry infinite shift.
pub fn local_shift(pi_hat: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&pi_hat));
    if pi_hat <= 0.0 || pi_hat >= 1.0 {
        return f64::INFINITY;
    }
    (pi_hat / (1.0 - pi_hat)).ln().abs()
}

/// Largest η ≤ 1/2 such that, within each class separately, the fraction of
/// records with min(π̂, 1−π̂) < η is at most δ_DS.
pub fn estimate_overlap(pi_hat: &[f64], labels: &[i8], delta_ds: f64) -> Result<OverlapEstimate> {
    if pi_hat.len() != labels.len() {
        return Err(Error::InvalidInput("pi_hat and labels lengths differ".into()));
    }
    if !(0.0..=1.0).contains(&delta_ds) {
        return Err(Error::Domain(format!("delta_ds must lie in [0,1], got {delta_ds}")));
    }
    let mut eta = 0.5_f64;
    for class in [1i8, -1i8] {
        let mut balances: Vec<f64> = pi_hat
            .iter()
            .zip(labels)
            .filter(|(_, &s)| s == class)
            .map(|(&pi, _)| pi.min(1.0 - pi))
            .collect();
        if balances.is_empty() {
            return Err(Error::SingleClass(format!("no records with label {class}")));
        }
        balances.sort_by(|a, b| a.total_cmp(b));
        let allowed = (delta_ds * balances.len() as f64).floor() as usize;
        let class_eta = if allowed >= balances.len() { 0.5 } else { balances[allowed] };
        eta = eta.min(class_eta);
    }
    Ok(OverlapEstimate { eta, delta_ds })
}

/// Shrink the balance min(π̂, 1−π̂) by κ toward the extremes (floored at 0),
/// staying on the same side of 1/2. Downstream audits can only become more
/// conservative under this move.
pub fn pessimize(pi_hat: f64, kappa: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&pi_hat));
    let kappa = kappa.clamp(0.0, 0.5);
    let balance = (pi_hat.min(1.0 - pi_hat) - kappa).max(0.0);
    if pi_hat >= 0.5 {
        1.0 - balance
    } else {
        balance
    }
}

/// PCA projection onto the top-k principal directions of the standardized
/// features, with the sign convention that each component's
/// largest-magnitude coordinate is positive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaProjection {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// k rows of length d, orthonormal.
    pub components: Vec<Vec<f64>>,
    /// Explained-variance ratio per component.
    pub explained: Vec<f64>,
}

impl PcaProjection {
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect();
        self.components
            .iter()
            .map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Project the features onto their top-k principal directions.
pub fn reduce_dims(features: &[Vec<f64>], k: usize) -> Result<(Vec<Vec<f64>>, PcaProjection)> {
    let m = features.len();
    if m < 2 {
        return Err(Error::InvalidInput("PCA needs at least 2 records".into()));
    }
    let d = features[0].len();
    if k == 0 || k > d.min(m) {
        return Err(Error::InvalidInput(format!(
            "k must lie in [1, min(m, d)] = [1, {}], got {k}",
            d.min(m)
        )));
    }
    for row in features {
        if row.len() != d {
            return Err(Error::InvalidInput("ragged feature matrix".into()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
    }
    let (means, mut stds): (Vec<f64>, Vec<f64>) = column_moments(features);
    for s in stds.iter_mut() {
        if *s == 0.0 {
            *s = 1.0; // constant features contribute zero variance
        }
    }
    let z: Vec<Vec<f64>> = features
        .iter()
        .map(|row| (0..d).map(|j| (row[j] - means[j]) / stds[j]).collect())
        .collect();

    // Sample covariance of the standardized data.
    let mut cov = vec![vec![0.0_f64; d]; d];
    for row in &z {
        for a in 0..d {
            for b in a..d {
                cov[a][b] += row[a] * row[b];
            }
        }
    }
    let denom = (m - 1) as f64;
    for a in 0..d {
        for b in a..d {
            cov[a][b] /= denom;
            cov[b][a] = cov[a][b];
        }
    }

    let (eigvals, eigvecs) = jacobi_eigh(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigvals[b].total_cmp(&eigvals[a]));
    let total: f64 = eigvals.iter().map(|v| v.max(0.0)).sum();

    let mut components = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut comp: Vec<f64> = (0..d).map(|row| eigvecs[row][idx]).collect();
        // Deterministic sign: largest-magnitude coordinate positive.
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if comp[lead] < 0.0 {
            for v in comp.iter_mut() {
                *v = -*v;
            }
        }
        components.push(comp);
        explained.push(if total > 0.0 { eigvals[idx].max(0.0) / total } else { 0.0 });
    }

    let projection = PcaProjection { means, stds, components, explained };
    let transformed = z
        .iter()
        .map(|row| {
            projection
                .components
                .iter()
                .map(|c| c.iter().zip(row).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    Ok((transformed, projection))
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

pub(crate) fn sigmoid(z: f64) -> f64 {
    crate::audit::logistic(z)
}

fn linear_logit(weights: &[f64], x: &[f64]) -> f64 {
    let mut z = weights[0];
    for (w, v) in weights[1..].iter().zip(x) {
        z += w * v;
    }
    z
}

// log(1 + exp(-u)) without overflow.
fn log1p_exp_neg(u: f64) -> f64 {
    if u > 0.0 {
        (-u).exp().ln_1p()
    } else {
        -u + u.exp().ln_1p()
    }
}

// Full-batch gradient descent with Armijo backtracking on the mean logistic
// loss plus (λ/2)·Σ_{j>=1} w_j² (intercept unpenalized). Deterministic.
pub(crate) fn optimize_logistic(x: &[&[f64]], y: &[i8], l2_lambda: f64) -> Vec<f64> {
    let n = x.len();
    let k = x[0].len();
    let nf = n as f64;
    let mut w = vec![0.0_f64; k + 1];
    // Intercept starts at the prior log-odds; with heavy regularization this
    // is already the optimum, and elsewhere it shortens the descent.
    let pos = y.iter().filter(|&&v| v == 1).count().max(1) as f64;
    let neg = (n - pos as usize).max(1) as f64;
    w[0] = (pos / neg).ln();
    let loss = |w: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            acc += log1p_exp_neg(yi as f64 * linear_logit(w, xi));
        }
        let reg: f64 = w[1..].iter().map(|v| v * v).sum();
        acc / nf + 0.5 * l2_lambda * reg
    };
    let grad = |w: &[f64], g: &mut [f64]| {
        g.iter_mut().for_each(|v| *v = 0.0);
        for (xi, &yi) in x.iter().zip(y) {
            let yi = yi as f64;
            // d/dz log(1+exp(-y z)) = -y σ(-y z)
            let coeff = -yi * sigmoid(-yi * linear_logit(w, xi)) / nf;
            g[0] += coeff;
            for (gj, &xj) in g[1..].iter_mut().zip(xi.iter()) {
                *gj += coeff * xj;
            }
        }
        for (gj, &wj) in g[1..].iter_mut().zip(&w[1..]) {
            *gj += l2_lambda * wj;
        }
    };

    let mut g = vec![0.0_f64; k + 1];
    let mut step = 1.0_f64;
    let mut current = loss(&w);
    for _ in 0..MAX_ITER {
        grad(&w, &mut g);
        let g_norm_sq: f64 = g.iter().map(|v| v * v).sum();
        if g_norm_sq.sqrt() <= GRAD_TOL {
            break;
        }
        step = (step * 2.0).min(1e4);
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect();
            let trial_loss = loss(&trial);
            if trial_loss <= current - 1e-4 * step * g_norm_sq {
                w = trial;
                current = trial_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // step underflow: no descent direction left at fp precision
        }
    }
    w
}

// Analytic gradient used by the optimality tests.
#[cfg(test)]
pub(crate) fn logistic_gradient(x: &[&[f64]], y: &[i8], l2_lambda: f64, w: &[f64]) -> Vec<f64> {
    let nf = x.len() as f64;
    let mut g = vec![0.0_f64; w.len()];
    for (xi, &yi) in x.iter().zip(y) {
        let yi = yi as f64;
        let coeff = -yi * sigmoid(-yi * linear_logit(w, xi)) / nf;
        g[0] += coeff;
        for (gj, &xj) in g[1..].iter_mut().zip(xi.iter()) {
            *gj += coeff * xj;
        }
    }
    for (gj, &wj) in g[1..].iter_mut().zip(&w[1..]) {
        *gj += l2_lambda * wj;
    }
    g
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn validate_training_data(features: &[Vec<f64>], labels: &[i8]) -> Result<()> {
    if features.len() != labels.len() {
        return Err(Error::InvalidInput("features and labels lengths differ".into()));
    }
    if features.is_empty() {
        return Err(Error::InvalidInput("empty training data".into()));
    }
    let d = features[0].len();
    for row in features {
        if row.len() != d {
            return Err(Error::InvalidInput("ragged feature matrix".into()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.iter().filter(|&&y| y == -1).count();
    if pos + neg != labels.len() {
        return Err(Error::InvalidInput("labels must be ±1".into()));
    }
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass(format!("{pos} positive / {neg} negative records")));
    }
    Ok(())
}

fn column_moments(features: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = features.len() as f64;
    let d = features[0].len();
    let mut means = vec![0.0_f64; d];
    for row in features {
        for (mj, &v) in means.iter_mut().zip(row) {
            *mj += v;
        }
    }
    means.iter_mut().for_each(|v| *v /= m);
    let mut vars = vec![0.0_f64; d];
    for row in features {
        for j in 0..d {
            let dv = row[j] - means[j];
            vars[j] += dv * dv;
        }
    }
    let stds = vars.iter().map(|v| (v / m).sqrt()).collect();
    (means, stds)
}

// Stratified train/calibration split using one shared positional key stream
// per within-class position. Identical class sizes therefore split on
// identical position sets, which keeps pairwise-symmetric datasets symmetric.
fn stratified_split(labels: &[i8], calib_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::Rng;
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == -1).collect();
    let max_len = pos.len().max(neg.len());
    let mut rng = stream(seed, "platt-split", 0);
    let keys: Vec<f64> = (0..max_len).map(|_| rng.gen()).collect();

    let mut train = Vec::new();
    let mut calib = Vec::new();
    for class in [&pos, &neg] {
        let mut positions: Vec<usize> = (0..class.len()).collect();
        positions.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
        let n_train = ((1.0 - calib_fraction) * class.len() as f64).ceil() as usize;
        for (rank, &pos_idx) in positions.iter().enumerate() {
            if rank < n_train {
                train.push(class[pos_idx]);
            } else {
                calib.push(class[pos_idx]);
            }
        }
    }
    train.sort_unstable();
    calib.sort_unstable();
    (train, calib)
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// (eigenvalues, eigenvectors-as-columns).
fn jacobi_eigh(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut v = vec![vec![0.0_f64; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a
        .iter()
        .flat_map(|r| r.iter().map(|x| x * x))
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eig = (0..d).map(|i| a[i][i]).collect();
    (eig, v)
}
