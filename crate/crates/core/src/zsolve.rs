//! Choosing the mixture parameter `z`.
//!
//! The combined predictor should incur the same loss on every (estimated)
//! source domain. We minimize
//!
//! ```text
//! F(z) = max_k L_k(z) − Σ_k z_k L_k(z)
//! ```
//!
//! where `L_k(z)` is the loss of the combination with parameter `z` under
//! the estimated domain-k distribution. `F ≥ 0` everywhere and vanishes at
//! an equal-loss point. Two solvers are provided: exhaustive search on a
//! simplex lattice, and projected descent on a log-sum-exp smoothing of the
//! max with a decreasing temperature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combine::{combine_outputs, map_z_prime, mix_weights, DensityModel, DomainPosterior, SourcePredictorSet};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::loss::{point_loss, LossSpec, Output};
use crate::numeric::{log_sum_exp, norm2};
use crate::simplex::{lattice_points, lattice_size, project_to_simplex, MixtureWeights};

pub const DEFAULT_GRID_CAP: u128 = 1_000_000;

/// Something that maps `z` to per-domain losses.
pub trait ZProblem: Sync {
    fn num_domains(&self) -> usize;

    fn domain_losses(&self, z: &MixtureWeights) -> Result<Vec<f64>>;

    /// Parameter actually used by the deployed predictor for `z`.
    fn z_prime(&self, z: &MixtureWeights) -> Result<MixtureWeights> {
        Ok(z.clone())
    }
}

/// Precomputed evaluation data for one weighting source.
///
/// Each pooled calibration sample `i` carries the domain scores `s_ik` fed
/// to the combiner, every source prediction `h_k(x_i)`, its label, and
/// importance weights `v_ik` so that `L_k(z) = (1/n) Σ_i v_ik ℓ(ĥ_z(x_i), y_i)`
/// estimates the loss under the estimated domain-k distribution.
pub struct ZObjectiveContext {
    scores: Vec<Vec<f64>>,
    outputs: Vec<Vec<Output>>,
    labels: Vec<f64>,
    eval_weights: Vec<Vec<f64>>,
    qhat: Option<Vec<f64>>,
    spec: LossSpec,
    eta: f64,
    p: usize,
}

impl ZObjectiveContext {
    pub fn from_parts(
        scores: Vec<Vec<f64>>,
        outputs: Vec<Vec<Output>>,
        labels: Vec<f64>,
        eval_weights: Vec<Vec<f64>>,
        qhat: Option<Vec<f64>>,
        spec: LossSpec,
        eta: f64,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::NoSamples);
        }
        if scores.len() != n || outputs.len() != n || eval_weights.len() != n {
            return Err(invalid("calibration arrays disagree on sample count"));
        }
        let p = scores[0].len();
        if p == 0 {
            return Err(invalid("need at least one domain"));
        }
        let rows_ok = scores.iter().all(|r| r.len() == p)
            && outputs.iter().all(|r| r.len() == p)
            && eval_weights.iter().all(|r| r.len() == p);
        if !rows_ok {
            return Err(invalid("calibration rows disagree on domain count"));
        }
        if let Some(q) = &qhat {
            if q.len() != p {
                return Err(Error::DimensionMismatch { expected: p, got: q.len() });
            }
        }
        if !(eta >= 0.0) {
            return Err(invalid("η must be ≥ 0"));
        }
        for k in 0..p {
            if eval_weights.iter().all(|r| r[k] == 0.0) {
                return Err(invalid(format!("domain {k} has no evaluation mass")));
            }
        }
        Ok(Self {
            scores,
            outputs,
            labels,
            eval_weights,
            qhat,
            spec,
            eta,
            p,
        })
    }

    fn collect_outputs(calibration: &Dataset, predictors: &SourcePredictorSet) -> Result<(Vec<Vec<Output>>, Vec<f64>)> {
        calibration.require_labels()?;
        let mut outputs = Vec::with_capacity(calibration.len());
        let mut labels = Vec::with_capacity(calibration.len());
        for s in calibration {
            outputs.push(predictors.outputs(&s.x)?);
            labels.push(s.y.unwrap_or_default());
        }
        Ok((outputs, labels))
    }

    /// Discriminative weighting: the posterior induces `D̂_k(x, y) =
    /// Q̂(k|x) D(x, y) / Q̂(k)`, so pooled sample `i` gets weight
    /// `Q̂(k|x_i) / Q̂(k)` for domain `k`, and the combiner scores are the
    /// same ratios. `calibration` must be drawn from the pooled marginal.
    pub fn discriminative(
        calibration: &Dataset,
        posterior: &dyn DomainPosterior,
        predictors: &SourcePredictorSet,
        spec: LossSpec,
        eta: f64,
    ) -> Result<Self> {
        let p = posterior.num_domains();
        if predictors.len() != p {
            return Err(invalid("posterior and predictors disagree on domain count"));
        }
        let q: Vec<Vec<f64>> = calibration
            .iter()
            .map(|s| posterior.posterior(&s.x))
            .collect::<Result<_>>()?;
        let n = q.len() as f64;
        let mut qhat = vec![0.0; p];
        for row in &q {
            for (acc, v) in qhat.iter_mut().zip(row) {
                *acc += v;
            }
        }
        for v in &mut qhat {
            *v /= n;
        }
        if let Some(k) = qhat.iter().position(|&v| v < 1e-12) {
            return Err(Error::VanishingDomainMass(k));
        }
        let ratios: Vec<Vec<f64>> = q
            .iter()
            .map(|row| row.iter().zip(&qhat).map(|(a, b)| a / b).collect())
            .collect();
        let (outputs, labels) = Self::collect_outputs(calibration, predictors)?;
        Self::from_parts(ratios.clone(), outputs, labels, ratios, Some(qhat), spec, eta)
    }

    /// Generative weighting: `D̂_k(x, y) = D̂_k(x) D(y|x)`, evaluated on the
    /// pooled sample with self-normalized weights `D̂_k(x) / D̂(x)`, where
    /// `D̂ = (1/p) Σ_j D̂_j`.
    pub fn generative(
        calibration: &Dataset,
        densities: &dyn DensityModel,
        predictors: &SourcePredictorSet,
        spec: LossSpec,
        eta: f64,
    ) -> Result<Self> {
        let p = densities.num_domains();
        if predictors.len() != p {
            return Err(invalid("densities and predictors disagree on domain count"));
        }
        let dens: Vec<Vec<f64>> = calibration
            .iter()
            .map(|s| densities.densities(&s.x))
            .collect::<Result<_>>()?;
        let mut raw: Vec<Vec<f64>> = dens
            .iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                if total > 0.0 {
                    row.iter().map(|d| d / total).collect()
                } else {
                    vec![0.0; p]
                }
            })
            .collect();
        let n = raw.len() as f64;
        for k in 0..p {
            let mean = raw.iter().map(|r| r[k]).sum::<f64>() / n;
            if !(mean > 0.0) {
                return Err(Error::VanishingDomainMass(k));
            }
            for r in &mut raw {
                r[k] /= mean;
            }
        }
        let (outputs, labels) = Self::collect_outputs(calibration, predictors)?;
        Self::from_parts(dens, outputs, labels, raw, None, spec, eta)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn qhat(&self) -> Option<&[f64]> {
        self.qhat.as_deref()
    }

    /// Combined prediction at calibration sample `i` for parameter `z`.
    pub fn combined_output(&self, z: &MixtureWeights, i: usize) -> Result<Output> {
        let w = mix_weights(z, &self.scores[i], self.eta)?;
        combine_outputs(&w, &self.outputs[i])
    }
}

impl ZProblem for ZObjectiveContext {
    fn num_domains(&self) -> usize {
        self.p
    }

    fn domain_losses(&self, z: &MixtureWeights) -> Result<Vec<f64>> {
        if z.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: z.len(),
            });
        }
        let mut totals = vec![0.0; self.p];
        for i in 0..self.labels.len() {
            let out = self.combined_output(z, i)?;
            let loss = point_loss(&self.spec, &out, self.labels[i])?.value;
            for (t, v) in totals.iter_mut().zip(&self.eval_weights[i]) {
                *t += v * loss;
            }
        }
        let n = self.labels.len() as f64;
        Ok(totals.into_iter().map(|t| t / n).collect())
    }

    fn z_prime(&self, z: &MixtureWeights) -> Result<MixtureWeights> {
        match &self.qhat {
            Some(q) => map_z_prime(z, q),
            None => Ok(z.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZEvaluation {
    pub objective: f64,
    pub per_domain_losses: Vec<f64>,
}

/// `max_k L_k − Σ_k z_k L_k`, accumulated as `Σ_k z_k (max − L_k)` so the
/// result is never negative.
pub fn z_objective(z: &MixtureWeights, problem: &dyn ZProblem) -> Result<ZEvaluation> {
    let losses = problem.domain_losses(z)?;
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("domain loss".into()));
    }
    Ok(ZEvaluation {
        objective: objective_from_losses(z, &losses),
        per_domain_losses: losses,
    })
}

fn objective_from_losses(z: &MixtureWeights, losses: &[f64]) -> f64 {
    let max = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    z.as_slice().iter().zip(losses).map(|(zk, lk)| zk * (max - lk)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Grid,
    Iterative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZSolution {
    pub z: MixtureWeights,
    pub z_prime: MixtureWeights,
    pub objective: f64,
    pub per_domain_losses: Vec<f64>,
    pub method: SolveMethod,
    pub iterations: usize,
    pub converged: bool,
}

/// Lattice resolution used when none is given.
pub fn default_resolution(p: usize) -> usize {
    match p {
        0 | 1 => 1,
        2 => 100,
        3 => 40,
        4 => 20,
        _ => 10,
    }
}

/// Exhaustive search over `{z : z_k = n_k / resolution}`. Lattice points are
/// scored in parallel; the first minimum in lexicographic order wins.
pub fn grid_search_z(problem: &dyn ZProblem, resolution: usize, cap: u128) -> Result<ZSolution> {
    if resolution == 0 {
        return Err(invalid("grid resolution must be ≥ 1"));
    }
    let p = problem.num_domains();
    let points = lattice_size(resolution, p);
    if points > cap {
        return Err(Error::GridBudgetExceeded { points, cap });
    }
    let lattice = lattice_points(resolution, p);
    let evals: Vec<Result<ZEvaluation>> = lattice.par_iter().map(|z| z_objective(z, problem)).collect();
    let mut best: Option<(usize, ZEvaluation)> = None;
    for (i, e) in evals.into_iter().enumerate() {
        let e = e?;
        if best.as_ref().is_none_or(|(_, b)| e.objective < b.objective) {
            best = Some((i, e));
        }
    }
    let (i, eval) = best.ok_or_else(|| invalid("empty lattice"))?;
    let z = lattice[i].clone();
    Ok(ZSolution {
        z_prime: problem.z_prime(&z)?,
        z,
        objective: eval.objective,
        per_domain_losses: eval.per_domain_losses,
        method: SolveMethod::Grid,
        iterations: lattice.len(),
        converged: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeOptions {
    /// Smoothing temperatures, visited in order; `0` optimizes the
    /// unsmoothed objective.
    pub temperatures: Vec<f64>,
    /// Initial step length (in simplex coordinates) for each stage.
    pub initial_step: f64,
    /// Iteration budget per temperature stage.
    pub max_iters: usize,
    /// A stage ends once the accepted move or the trial step drops below this.
    pub tol: f64,
    /// Central finite-difference step for the surrogate gradient.
    pub fd_step: f64,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        Self {
            temperatures: vec![1.0, 0.3, 0.1, 0.03, 0.01, 0.0],
            initial_step: 0.1,
            max_iters: 200,
            tol: 1e-7,
            fd_step: 1e-6,
        }
    }
}

/// `τ log Σ exp(L_k / τ) − Σ z_k L_k`; plain max at `τ = 0`.
fn surrogate(z: &MixtureWeights, losses: &[f64], tau: f64) -> f64 {
    let smooth_max = if tau > 0.0 {
        let scaled: Vec<f64> = losses.iter().map(|l| l / tau).collect();
        tau * log_sum_exp(&scaled)
    } else {
        losses.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let mix: f64 = z.as_slice().iter().zip(losses).map(|(a, b)| a * b).sum();
    smooth_max - mix
}

/// Projected descent on the smoothed objective with decreasing temperature.
/// Returns the best point visited as measured by the true objective, so the
/// result is never worse than `init`.
pub fn iterative_solve_z(problem: &dyn ZProblem, init: &MixtureWeights, opts: &IterativeOptions) -> Result<ZSolution> {
    let p = problem.num_domains();
    if init.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: init.len() });
    }
    if opts.temperatures.is_empty() || opts.temperatures.iter().any(|t| !(*t >= 0.0)) {
        return Err(invalid("temperatures must be a nonempty list of values ≥ 0"));
    }
    if !(opts.initial_step > 0.0 && opts.fd_step > 0.0 && opts.tol > 0.0) {
        return Err(invalid("step sizes and tolerance must be positive"));
    }

    let eval = |z: &MixtureWeights| -> Result<Vec<f64>> {
        let losses = problem.domain_losses(z)?;
        if losses.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("domain loss".into()));
        }
        Ok(losses)
    };

    let mut z = init.clone();
    let mut losses = eval(&z)?;
    let mut best = (objective_from_losses(&z, &losses), z.clone(), losses.clone());
    let mut iterations = 0;
    let mut converged = false;

    for &tau in &opts.temperatures {
        let f_at = |v: &[f64]| -> Result<(f64, MixtureWeights, Vec<f64>)> {
            let zz = project_to_simplex(v)?;
            let ll = eval(&zz)?;
            Ok((surrogate(&zz, &ll, tau), zz, ll))
        };
        let mut f = surrogate(&z, &losses, tau);
        let mut step = opts.initial_step;
        converged = false;
        for _ in 0..opts.max_iters {
            iterations += 1;
            // Gradient of v ↦ F(Π(v)) at v = z.
            let mut grad = vec![0.0; p];
            for k in 0..p {
                let mut up = z.as_slice().to_vec();
                let mut dn = up.clone();
                up[k] += opts.fd_step;
                dn[k] -= opts.fd_step;
                grad[k] = (f_at(&up)?.0 - f_at(&dn)?.0) / (2.0 * opts.fd_step);
            }
            let gnorm = norm2(&grad);
            if gnorm == 0.0 {
                converged = true;
                break;
            }
            let mut moved = None;
            while step >= opts.tol {
                let trial: Vec<f64> = z
                    .as_slice()
                    .iter()
                    .zip(&grad)
                    .map(|(a, g)| a - step * g / gnorm)
                    .collect();
                let (fc, zc, lc) = f_at(&trial)?;
                if fc < f {
                    moved = Some((fc, zc, lc));
                    break;
                }
                step *= 0.5;
            }
            let Some((fc, zc, lc)) = moved else {
                converged = true;
                break;
            };
            let delta: f64 = norm2(
                &zc.as_slice()
                    .iter()
                    .zip(z.as_slice())
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            z = zc;
            losses = lc;
            f = fc;
            let obj = objective_from_losses(&z, &losses);
            if obj < best.0 {
                best = (obj, z.clone(), losses.clone());
            }
            step = (step * 2.0).min(1.0);
            if delta < opts.tol {
                converged = true;
                break;
            }
        }
    }

    let (objective, z, per_domain_losses) = best;
    Ok(ZSolution {
        z_prime: problem.z_prime(&z)?,
        z,
        objective,
        per_domain_losses,
        method: SolveMethod::Iterative,
        iterations,
        converged,
    })
}

/// `max_k L_k − min_{k : z_k > 1e-6} L_k` at the solution: how far it is
/// from equalizing the domain losses.
pub fn balance_report(solution: &ZSolution) -> f64 {
    let losses = &solution.per_domain_losses;
    let max = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_active = losses
        .iter()
        .zip(solution.z.as_slice())
        .filter(|(_, &zk)| zk > 1e-6)
        .map(|(l, _)| *l)
        .fold(f64::INFINITY, f64::min);
    if min_active.is_finite() {
        max - min_active
    } else {
        0.0
    }
}
