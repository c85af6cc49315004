//! Isotropic Gaussian kernel density estimation with a single
//! cross-validated bandwidth per domain.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::maxent::fold_assignment;
use crate::numeric::{log_sum_exp, PROB_FLOOR};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn log_norm_const(d: usize, sigma: f64) -> f64 {
    -0.5 * d as f64 * (2.0 * std::f64::consts::PI * sigma * sigma).ln()
}

/// `(2πσ²)^(-d/2) exp(-‖x - x′‖² / (2σ²))`.
pub fn kernel_value(x: &[f64], xprime: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid(format!("bandwidth σ = {sigma} must be positive")));
    }
    if x.len() != xprime.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: xprime.len(),
        });
    }
    let d = x.len();
    Ok((log_norm_const(d, sigma) - sq_dist(x, xprime) / (2.0 * sigma * sigma)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    centers: Vec<Vec<f64>>,
    sigma: f64,
    d: usize,
}

impl KdeModel {
    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `log((1/m) Σ_i K_σ(x, x_i))`, computed without underflow.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let c = log_norm_const(self.d, self.sigma);
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        let terms: Vec<f64> = self.centers.iter().map(|ci| c - sq_dist(x, ci) * inv).collect();
        Ok(log_sum_exp(&terms) - (self.centers.len() as f64).ln())
    }

    /// `(1/m) Σ_i K_σ(x, x_i)`, floored at 1e-300.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let c = log_norm_const(self.d, self.sigma);
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        let sum: f64 = self
            .centers
            .iter()
            .map(|ci| (c - sq_dist(x, ci) * inv).exp())
            .sum();
        Ok((sum / self.centers.len() as f64).max(PROB_FLOOR))
    }
}

/// Fits a KDE; centers are stored in lexicographic order so density sums
/// do not depend on input order.
pub fn kde_fit(samples: &[Vec<f64>], sigma: f64) -> Result<KdeModel> {
    let first = samples.first().ok_or(Error::NoSamples)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("bandwidth σ = {sigma} must be positive and finite")));
    }
    let d = first.len();
    if let Some(bad) = samples.iter().find(|s| s.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kde center".into()));
    }
    let mut centers = samples.to_vec();
    centers.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(KdeModel { centers, sigma, d })
}

pub fn kde_density(model: &KdeModel, x: &[f64]) -> Result<f64> {
    model.density(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSelection {
    pub sigma: f64,
    /// Mean held-out log density per grid entry.
    pub cv_scores: Vec<f64>,
}

/// Chooses σ from `grid` maximizing mean held-out log density over
/// `folds` shuffled folds; ties go to the larger σ.
pub fn select_bandwidth_cv(
    samples: &[Vec<f64>],
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<BandwidthSelection> {
    if grid.is_empty() {
        return Err(invalid("bandwidth grid is empty"));
    }
    if folds < 2 {
        return Err(invalid("need at least two folds"));
    }
    if samples.len() < folds {
        return Err(invalid(format!(
            "need at least {folds} samples for {folds}-fold cross-validation, got {}",
            samples.len()
        )));
    }
    if grid.len() == 1 {
        kde_fit(samples, grid[0])?;
        return Ok(BandwidthSelection {
            sigma: grid[0],
            cv_scores: vec![f64::NAN],
        });
    }
    let assignment = fold_assignment(samples.len(), folds, seed);
    type Split<'a> = (Vec<Vec<f64>>, Vec<&'a Vec<f64>>);
    let splits: Vec<Split> = (0..folds)
        .map(|fold| {
            let mut train = Vec::new();
            let mut held = Vec::new();
            for (s, &a) in samples.iter().zip(&assignment) {
                if a == fold {
                    held.push(s);
                } else {
                    train.push(s.clone());
                }
            }
            (train, held)
        })
        .collect();

    let mut scores = Vec::with_capacity(grid.len());
    for &sigma in grid {
        let mut total = 0.0;
        for (train, held) in &splits {
            let model = kde_fit(train, sigma)?;
            let mut ll = 0.0;
            for x in held {
                ll += model.log_density(x)?;
            }
            total += ll / held.len() as f64;
        }
        scores.push(total / folds as f64);
    }
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) if s > scores[b] || (s == scores[b] && grid[i] > grid[b]) => Some(i),
            keep => keep,
        };
    }
    let best = best.ok_or(Error::DegenerateBandwidthGrid)?;
    Ok(BandwidthSelection {
        sigma: grid[best],
        cv_scores: scores,
    })
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || n == 0 {
        return Err(invalid("log grid needs 0 < lo ≤ hi and n ≥ 1"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    /// Largest observed `K_σ(x, x′) / K_σ(x, x″)`; a lower bound on the
    /// supremum.
    pub kappa: f64,
    /// The supremum over all of input space is infinite for Gaussian kernels.
    pub unbounded_in_theory: bool,
}

/// Max over evaluation-point triples of `K_σ(x, x′) / K_σ(x, x″)`.
pub fn estimate_kappa(model: &KdeModel, eval_points: &[Vec<f64>]) -> Result<KappaReport> {
    if eval_points.len() < 2 {
        return Err(invalid("need at least two evaluation points"));
    }
    if let Some(bad) = eval_points.iter().find(|x| x.len() != model.d) {
        return Err(Error::DimensionMismatch {
            expected: model.d,
            got: bad.len(),
        });
    }
    // For fixed x the ratio is exp((‖x-x″‖² - ‖x-x′‖²) / 2σ²).
    let mut log_kappa: f64 = 0.0;
    for x in eval_points {
        let (mut near, mut far) = (f64::INFINITY, 0.0f64);
        for y in eval_points {
            let d2 = sq_dist(x, y);
            near = near.min(d2);
            far = far.max(d2);
        }
        log_kappa = log_kappa.max((far - near) / (2.0 * model.sigma * model.sigma));
    }
    Ok(KappaReport {
        kappa: log_kappa.exp(),
        unbounded_in_theory: true,
    })
}

/// One KDE per source domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeDensities {
    pub models: Vec<KdeModel>,
}

impl KdeDensities {
    pub fn new(models: Vec<KdeModel>) -> Result<Self> {
        let first = models.first().ok_or_else(|| invalid("need at least one density model"))?;
        if models.iter().any(|m| m.d != first.d) {
            return Err(invalid("density models disagree on dimension"));
        }
        Ok(Self { models })
    }

    pub fn densities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.density(x)).collect()
    }
}
