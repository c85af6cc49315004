//! Conditional maximum entropy (L2-regularized multinomial logistic
//! regression) over domain labels.
//!
//! The model scores domain `k` at `x` as `w · Φ(x, k)`, where `Φ(x, k)`
//! places a base feature vector `ψ(x)` in the k-th block of an
//! `N = p · dim(ψ)` vector. Training minimizes
//!
//! ```text
//! μ‖w‖² − (1/m) Σ_i log p_w[k_i | x_i]
//! ```
//!
//! with a deterministic L-BFGS and backtracking line search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::numeric::{dot, log_sum_exp, norm2, softmax};
use crate::renyi::FiniteDistribution;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_MU_GRID: [f64; 6] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0];

/// Base feature map `ψ`; the per-class map `Φ(x, k)` is `ψ(x)` placed in
/// block `k`.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    /// `ψ(x) = (x, 1)`.
    PerClassLinear { d: usize },
    /// `ψ(x) = (√(2/W) cos(ω_j·x + b_j))_j ⊕ 1` with `ω_j ~ N(0, σ⁻² I)`,
    /// `b_j ~ U[0, 2π)`: random features of a Gaussian kernel.
    RandomFourier {
        d: usize,
        width: usize,
        bandwidth: f64,
        seed: u64,
        omega: Vec<Vec<f64>>,
        phase: Vec<f64>,
    },
}

impl FeatureMap {
    pub fn per_class_linear(d: usize) -> Self {
        FeatureMap::PerClassLinear { d }
    }

    pub fn random_fourier(d: usize, width: usize, bandwidth: f64, seed: u64) -> Result<Self> {
        if width == 0 || !(bandwidth > 0.0) {
            return Err(invalid("random features need width ≥ 1 and bandwidth > 0"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / bandwidth).map_err(|e| invalid(e.to_string()))?;
        let uniform =
            Uniform::new(0.0, 2.0 * std::f64::consts::PI).map_err(|e| invalid(e.to_string()))?;
        let omega = (0..width)
            .map(|_| (0..d).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let phase = (0..width).map(|_| uniform.sample(&mut rng)).collect();
        Ok(FeatureMap::RandomFourier {
            d,
            width,
            bandwidth,
            seed,
            omega,
            phase,
        })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::PerClassLinear { d } | FeatureMap::RandomFourier { d, .. } => *d,
        }
    }

    /// Length of one block, `dim ψ`.
    pub fn block_dim(&self) -> usize {
        match self {
            FeatureMap::PerClassLinear { d } => d + 1,
            FeatureMap::RandomFourier { width, .. } => width + 1,
        }
    }

    /// Output dimension `N` for `p` classes.
    pub fn output_dim(&self, p: usize) -> usize {
        p * self.block_dim()
    }

    pub fn base_features(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::PerClassLinear { .. } => {
                let mut f = Vec::with_capacity(x.len() + 1);
                f.extend_from_slice(x);
                f.push(1.0);
                f
            }
            FeatureMap::RandomFourier {
                width, omega, phase, ..
            } => {
                let scale = (2.0 / *width as f64).sqrt();
                let mut f: Vec<f64> = omega
                    .iter()
                    .zip(phase)
                    .map(|(w, b)| scale * (dot(w, x) + b).cos())
                    .collect();
                f.push(1.0);
                f
            }
        }
    }

    /// Full per-class feature vector `Φ(x, k)` of length `N`.
    pub fn class_features(&self, x: &[f64], k: usize, p: usize) -> Vec<f64> {
        let b = self.block_dim();
        let mut out = vec![0.0; p * b];
        out[k * b..(k + 1) * b].copy_from_slice(&self.base_features(x));
        out
    }

    fn kind_name(&self) -> &'static str {
        match self {
            FeatureMap::PerClassLinear { .. } => "per_class_linear",
            FeatureMap::RandomFourier { .. } => "random_fourier",
        }
    }
}

/// Domain-labeled training data with base features precomputed.
struct Design {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    p: usize,
    block: usize,
}

impl Design {
    fn new(data: &Dataset, map: &FeatureMap) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::NoSamples);
        }
        data.require_domains()?;
        if data.dim() != map.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: map.input_dim(),
                got: data.dim(),
            });
        }
        let features = data.iter().map(|s| map.base_features(&s.x)).collect();
        let labels = data.iter().map(|s| s.domain.unwrap_or_default()).collect();
        Ok(Self {
            features,
            labels,
            p: data.num_domains(),
            block: map.block_dim(),
        })
    }

    fn n_params(&self) -> usize {
        self.p * self.block
    }

    fn logits(&self, w: &[f64], f: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|k| dot(&w[k * self.block..(k + 1) * self.block], f))
            .collect()
    }

    fn objective(&self, w: &[f64], mu: f64) -> f64 {
        let mut nll = 0.0;
        for (f, &k) in self.features.iter().zip(&self.labels) {
            let z = self.logits(w, f);
            nll += log_sum_exp(&z) - z[k];
        }
        mu * dot(w, w) + nll / self.features.len() as f64
    }

    fn objective_and_gradient(&self, w: &[f64], mu: f64) -> (f64, Vec<f64>) {
        let m = self.features.len() as f64;
        let mut grad = vec![0.0; w.len()];
        let mut nll = 0.0;
        for (f, &label) in self.features.iter().zip(&self.labels) {
            let z = self.logits(w, f);
            let lse = log_sum_exp(&z);
            nll += lse - z[label];
            for k in 0..self.p {
                let coef = (z[k] - lse).exp() - if k == label { 1.0 } else { 0.0 };
                let block = &mut grad[k * self.block..(k + 1) * self.block];
                for (g, fj) in block.iter_mut().zip(f) {
                    *g += coef * fj;
                }
            }
        }
        for (g, wj) in grad.iter_mut().zip(w) {
            *g = *g / m + 2.0 * mu * wj;
        }
        (mu * dot(w, w) + nll / m, grad)
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(invalid(format!("regularization μ = {mu} must be finite and ≥ 0")));
    }
    Ok(())
}

/// `μ‖w‖² − (1/m) Σ log p_w[k_i | x_i]` on domain-labeled data.
pub fn maxent_objective(w: &[f64], data: &Dataset, mu: f64, map: &FeatureMap) -> Result<f64> {
    check_mu(mu)?;
    let design = Design::new(data, map)?;
    check_weights_len(w, design.n_params())?;
    Ok(design.objective(w, mu))
}

/// Analytic gradient of [`maxent_objective`].
pub fn maxent_gradient(w: &[f64], data: &Dataset, mu: f64, map: &FeatureMap) -> Result<Vec<f64>> {
    check_mu(mu)?;
    let design = Design::new(data, map)?;
    check_weights_len(w, design.n_params())?;
    Ok(design.objective_and_gradient(w, mu).1)
}

fn check_weights_len(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub memory: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub grad_norm: f64,
    /// Objective values of accepted steps never increased.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxentModel {
    weights: Vec<f64>,
    mu: f64,
    feature_map: FeatureMap,
    p: usize,
    /// Largest `‖Φ(x, k)‖` seen in training.
    r: f64,
    seed: u64,
    summary: Option<TrainingSummary>,
}

impl MaxentModel {
    pub fn from_weights(weights: Vec<f64>, mu: f64, feature_map: FeatureMap, p: usize) -> Result<Self> {
        check_mu(mu)?;
        check_weights_len(&weights, feature_map.output_dim(p))?;
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("maxent weight".into()));
        }
        Ok(Self {
            weights,
            mu,
            feature_map,
            p,
            r: 0.0,
            seed: 0,
            summary: None,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn num_domains(&self) -> usize {
        self.p
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    pub fn norm_bound(&self) -> f64 {
        self.r
    }

    pub fn summary(&self) -> Option<&TrainingSummary> {
        self.summary.as_ref()
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let f = self.feature_map.base_features(x);
        let b = self.feature_map.block_dim();
        (0..self.p)
            .map(|k| dot(&self.weights[k * b..(k + 1) * b], &f))
            .collect()
    }

    /// Posterior `p_w[· | x]` over domains as a plain vector.
    pub fn posterior_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.feature_map.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_map.input_dim(),
                got: x.len(),
            });
        }
        Ok(softmax(&self.logits(x)))
    }

    /// For a 1-D linear two-domain model, the `x` where both domains are
    /// equally likely.
    pub fn crossing_point_1d(&self) -> Option<f64> {
        match (&self.feature_map, self.p) {
            (FeatureMap::PerClassLinear { d: 1 }, 2) => {
                let slope = self.weights[0] - self.weights[2];
                let intercept = self.weights[1] - self.weights[3];
                (slope != 0.0).then(|| -intercept / slope)
            }
            _ => None,
        }
    }

    pub fn to_json(&self) -> MaxentJson {
        let (width, bandwidth) = match &self.feature_map {
            FeatureMap::RandomFourier {
                width, bandwidth, ..
            } => (Some(*width), Some(*bandwidth)),
            FeatureMap::PerClassLinear { .. } => (None, None),
        };
        let seed = match &self.feature_map {
            FeatureMap::RandomFourier { seed, .. } => *seed,
            FeatureMap::PerClassLinear { .. } => self.seed,
        };
        MaxentJson {
            kind: self.feature_map.kind_name().to_string(),
            p: self.p,
            d: self.feature_map.input_dim(),
            mu: self.mu,
            r: self.r,
            seed,
            weights: self.weights.clone(),
            width,
            bandwidth,
        }
    }

    pub fn from_json(json: &MaxentJson) -> Result<Self> {
        let map = match json.kind.as_str() {
            "per_class_linear" => FeatureMap::per_class_linear(json.d),
            "random_fourier" => FeatureMap::random_fourier(
                json.d,
                json.width.ok_or_else(|| invalid("random_fourier model needs `width`"))?,
                json.bandwidth
                    .ok_or_else(|| invalid("random_fourier model needs `bandwidth`"))?,
                json.seed,
            )?,
            other => return Err(invalid(format!("unknown feature map kind `{other}`"))),
        };
        let mut model = Self::from_weights(json.weights.clone(), json.mu, map, json.p)?;
        model.r = json.r;
        model.seed = json.seed;
        Ok(model)
    }
}

/// Serialized form of a [`MaxentModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxentJson {
    pub kind: String,
    pub p: usize,
    pub d: usize,
    pub mu: f64,
    pub r: f64,
    pub seed: u64,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

/// Posterior over domains at `x`; entries are floored at 1e-300.
pub fn posterior(model: &MaxentModel, x: &[f64]) -> Result<FiniteDistribution> {
    let probs = model.posterior_vec(x)?;
    // The floor can push the sum a few ulps past one.
    FiniteDistribution::from_weights(&probs)
}

pub fn train_maxent(
    data: &Dataset,
    mu: f64,
    feature_map: FeatureMap,
    options: TrainOptions,
    seed: u64,
) -> Result<MaxentModel> {
    check_mu(mu)?;
    let design = Design::new(data, &feature_map)?;
    let p = design.p;
    if data.len() < p {
        return Err(invalid(format!("need at least p = {p} samples, got {}", data.len())));
    }
    if let Some(k) = data.domain_counts().iter().position(|&c| c == 0) {
        return Err(invalid(format!("domain {k} has no training samples")));
    }
    let r = design
        .features
        .iter()
        .map(|f| norm2(f))
        .fold(0.0, f64::max);

    let (weights, summary) = lbfgs(
        |w| design.objective_and_gradient(w, mu),
        vec![0.0; design.n_params()],
        &options,
    )?;
    Ok(MaxentModel {
        weights,
        mu,
        feature_map,
        p,
        r,
        seed,
        summary: Some(summary),
    })
}

fn lbfgs<F>(eval: F, mut x: Vec<f64>, opts: &TrainOptions) -> Result<(Vec<f64>, TrainingSummary)>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    const C1: f64 = 1e-4;
    const MAX_HALVINGS: usize = 60;

    let (mut f, mut g) = eval(&x);
    if !f.is_finite() {
        return Err(Error::LineSearch {
            iteration: 0,
            objective: f,
            grad_norm: norm2(&g),
        });
    }
    let mut history: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> =
        std::collections::VecDeque::with_capacity(opts.memory);
    let mut monotone = true;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        let gnorm = norm2(&g);
        if gnorm <= opts.tol {
            return Ok((
                x,
                TrainingSummary {
                    iterations,
                    converged: true,
                    objective: f,
                    grad_norm: gnorm,
                    monotone,
                },
            ));
        }
        iterations += 1;

        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = if history.is_empty() { 1.0 / gnorm.max(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fc, gc) = eval(&cand);
            if fc.is_finite() {
                let armijo = fc <= f + C1 * step * slope;
                // Near the optimum f stops resolving the decrease; accept
                // non-increasing steps that shrink the gradient.
                let flat = fc <= f && (f - fc) <= 1e-15 * f.abs().max(1.0) && norm2(&gc) < gnorm;
                if armijo || flat {
                    accepted = Some((cand, fc, gc));
                    break;
                }
            }
            step *= 0.5;
        }

        let Some((xn, fnew, gnew)) = accepted else {
            if history.is_empty() {
                // Steepest descent failed too: stalled at working precision.
                return Ok((
                    x,
                    TrainingSummary {
                        iterations,
                        converged: false,
                        objective: f,
                        grad_norm: gnorm,
                        monotone,
                    },
                ));
            }
            history.clear();
            continue;
        };
        if !fnew.is_finite() {
            return Err(Error::LineSearch {
                iteration: iterations,
                objective: fnew,
                grad_norm: norm2(&gnew),
            });
        }
        monotone &= fnew <= f;

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fnew;
        g = gnew;
    }
    let gnorm = norm2(&g);
    Ok((
        x,
        TrainingSummary {
            iterations,
            converged: gnorm <= opts.tol,
            objective: f,
            grad_norm: gnorm,
            monotone,
        },
    ))
}

fn two_loop(g: &[f64], history: &std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuSelection {
    pub mu: f64,
    /// Mean held-out log-likelihood per grid entry.
    pub cv_scores: Vec<f64>,
}

/// Picks μ from `grid` by k-fold cross-validated held-out log-likelihood;
/// ties go to the larger μ.
pub fn select_mu_cv(
    data: &Dataset,
    grid: &[f64],
    folds: usize,
    feature_map: &FeatureMap,
    options: TrainOptions,
    seed: u64,
) -> Result<MuSelection> {
    if grid.is_empty() {
        return Err(invalid("μ grid is empty"));
    }
    if folds < 2 || data.len() < folds {
        return Err(invalid(format!("need folds ≥ 2 and at least {folds} samples")));
    }
    data.require_domains()?;
    let assignment = fold_assignment(data.len(), folds, seed);
    let mut scores = Vec::with_capacity(grid.len());
    for &mu in grid {
        check_mu(mu)?;
        let mut total = 0.0;
        for fold in 0..folds {
            let (train, held) = split_fold(data, &assignment, fold)?;
            if train.domain_counts().contains(&0) {
                total += f64::NEG_INFINITY;
                continue;
            }
            let model = train_maxent(&train, mu, feature_map.clone(), options, seed)?;
            let mut ll = 0.0;
            for s in &held {
                let z = model.logits(&s.x);
                ll += z[s.domain.unwrap_or_default()] - log_sum_exp(&z);
            }
            total += ll / held.len() as f64;
        }
        scores.push(total / folds as f64);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s >= scores[best] && grid[i] >= grid[best] || s > scores[best] {
            best = i;
        }
    }
    if scores[best] == f64::NEG_INFINITY {
        return Err(invalid("no μ candidate produced a finite held-out score"));
    }
    Ok(MuSelection {
        mu: grid[best],
        cv_scores: scores,
    })
}

/// Shuffled fold index per sample, deterministic in `seed`.
pub(crate) fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assign = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assign[i] = pos % folds;
    }
    assign
}

fn split_fold(data: &Dataset, assignment: &[usize], fold: usize) -> Result<(Dataset, Dataset)> {
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (s, &a) in data.iter().zip(assignment) {
        if a == fold {
            held.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    Ok((
        Dataset::new(train, data.num_domains())?,
        Dataset::new(held, data.num_domains())?,
    ))
}

/// High-probability radius `2√2 r² / (μ√m) · (1 + √log(1/δ))` bounding the
/// pointwise log-loss gap between the trained and population Maxent
/// solutions. Diagnostic only: the population solution is unobservable.
pub fn maxent_deviation_radius(r: f64, mu: f64, m: usize, delta: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(invalid("μ must be positive"));
    }
    if m == 0 {
        return Err(invalid("sample size m must be positive"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("δ must lie in (0, 1]"));
    }
    Ok(2.0 * 2f64.sqrt() * r * r / (mu * (m as f64).sqrt()) * (1.0 + (1.0 / delta).ln().sqrt()))
}
