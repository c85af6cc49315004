//! One-dimensional two-domain benchmark: Gaussian-mixture domains, a fixed
//! labeling rule, per-domain linear base classifiers, and a comparison of
//! the discriminative (Maxent posterior) and generative (KDE) combiners
//! across sample sizes.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combine::{
    dmsa_predict_regression, gmsa_predict_regression, PredictorSpec, SourcePredictorSet, DEFAULT_ETA,
};
use crate::data::{Dataset, Sample};
use crate::error::{invalid, Error, Result};
use crate::kde::{kde_fit, log_grid, select_bandwidth_cv, KdeDensities};
use crate::loss::{LossModel, LossSpec, Output};
use crate::maxent::{select_mu_cv, train_maxent, FeatureMap, TrainOptions, DEFAULT_MU_GRID};
use crate::simplex::MixtureWeights;
use crate::zsolve::{
    balance_report, default_resolution, grid_search_z, iterative_solve_z, IterativeOptions, SolveMethod,
    ZObjectiveContext, ZSolution, DEFAULT_GRID_CAP,
};

/// Finite mixture of 1-D normals, stored as `(weight, mean, stddev)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64, f64)>", into = "Vec<(f64, f64, f64)>")]
pub struct GaussianMixtureSpec {
    components: Vec<(f64, f64, f64)>,
}

impl GaussianMixtureSpec {
    pub fn new(components: Vec<(f64, f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        for &(w, mean, sd) in &components {
            if !(w >= 0.0) || !mean.is_finite() || !(sd > 0.0) || !sd.is_finite() {
                return Err(invalid(format!("bad component ({w}, {mean}, {sd})")));
            }
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("component weights sum to {total}, not 1")));
        }
        Ok(Self { components })
    }

    /// Like [`GaussianMixtureSpec::new`] but rescales the weights to sum to 1.
    pub fn normalized(components: Vec<(f64, f64, f64)>) -> Result<Self> {
        let total: f64 = components.iter().map(|c| c.0).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(invalid("component weights must have a positive sum"));
        }
        Self::new(components.into_iter().map(|(w, m, s)| (w / total, m, s)).collect())
    }

    /// `0.9·N(−20, 8) + 0.1·N(0, 0.1)`.
    pub fn domain_one() -> Self {
        Self::new(vec![(0.9, -20.0, 8.0), (0.1, 0.0, 0.1)]).expect("valid preset")
    }

    /// `0.75·N(3, 0.1) + 0.25·N(5, 0.1) + 0.05·N(0, 0.1)`, with the weights
    /// (which add up to 1.05) rescaled to sum to 1.
    pub fn domain_two() -> Self {
        Self::normalized(vec![(0.75, 3.0, 0.1), (0.25, 5.0, 0.1), (0.05, 0.0, 0.1)]).expect("valid preset")
    }

    /// Reads each stored scale as a variance instead of a standard deviation.
    pub fn scales_as_variances(&self) -> Self {
        Self {
            components: self.components.iter().map(|&(w, m, v)| (w, m, v.sqrt())).collect(),
        }
    }

    pub fn components(&self) -> &[(f64, f64, f64)] {
        &self.components
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|&(w, m, s)| {
                let u = (x - m) / s;
                w * (-0.5 * u * u).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            })
            .sum()
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.0;
            if u < acc {
                pick = i;
                break;
            }
        }
        let (_, mean, sd) = self.components[pick];
        let z: f64 = StandardNormal.sample(rng);
        mean + sd * z
    }
}

impl TryFrom<Vec<(f64, f64, f64)>> for GaussianMixtureSpec {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GaussianMixtureSpec> for Vec<(f64, f64, f64)> {
    fn from(s: GaussianMixtureSpec) -> Self {
        s.components
    }
}

/// `n` i.i.d. draws as an unlabeled 1-D dataset.
pub fn sample_mixture(spec: &GaussianMixtureSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(invalid("need n ≥ 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n).map(|_| Sample::unlabeled(vec![spec.draw(&mut rng)])).collect();
    Dataset::new(samples, 1)
}

/// `−1` on `[−0.5, 0.5] ∪ [3.5, ∞)`, `+1` elsewhere.
pub fn synthetic_label(x: f64) -> f64 {
    if (-0.5..=0.5).contains(&x) || x >= 3.5 {
        -1.0
    } else {
        1.0
    }
}

/// `n` labeled draws tagged with `domain` out of `p`.
pub fn labeled_domain_sample(spec: &GaussianMixtureSpec, n: usize, domain: usize, p: usize, seed: u64) -> Result<Dataset> {
    let raw = sample_mixture(spec, n, seed)?;
    let samples = raw
        .iter()
        .map(|s| Sample::new(s.x.clone(), Some(synthetic_label(s.x[0])), Some(domain)))
        .collect();
    Dataset::new(samples, p)
}

/// A 1-D linear classifier `sign(a·x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasePredictor {
    pub spec: PredictorSpec,
    /// Set when the training data held a single class and a constant
    /// predictor was returned instead.
    pub constant: bool,
}

impl BasePredictor {
    pub fn score(&self, x: f64) -> f64 {
        use crate::combine::SourcePredictor;
        self.spec.predict(&[x]).as_scalar().unwrap_or(0.0)
    }
}

const LOGISTIC_L2: f64 = 1e-4;

fn logistic_objective(a: f64, b: f64, xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let data: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let t = -y * (a * x + b);
            // log(1 + e^t), stable for large |t|.
            if t > 0.0 {
                t + (-t).exp().ln_1p()
            } else {
                t.exp().ln_1p()
            }
        })
        .sum();
    data / n + LOGISTIC_L2 * (a * a + b * b)
}

/// Fits `sign(a·x + b)` by L2-regularized logistic regression (damped
/// Newton). Single-class data yields a constant predictor.
pub fn train_base_predictor(data: &Dataset) -> Result<BasePredictor> {
    data.require_labels()?;
    if data.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: data.dim() });
    }
    let xs: Vec<f64> = data.iter().map(|s| s.x[0]).collect();
    let ys: Vec<f64> = data.iter().map(|s| if s.y.unwrap_or_default() >= 0.0 { 1.0 } else { -1.0 }).collect();
    if ys.iter().all(|&y| y == ys[0]) {
        return Ok(BasePredictor {
            spec: PredictorSpec::Constant { output: Output::Scalar(ys[0]) },
            constant: true,
        });
    }
    let n = xs.len() as f64;
    let (mut a, mut b) = (0.0, 0.0);
    let mut f = logistic_objective(a, b, &xs, &ys);
    for _ in 0..200 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            let m = y * (a * x + b);
            // σ(−m), computed without overflow.
            let s = if m >= 0.0 { (-m).exp() / (1.0 + (-m).exp()) } else { 1.0 / (1.0 + m.exp()) };
            ga -= y * x * s;
            gb -= y * s;
            let c = s * (1.0 - s);
            haa += c * x * x;
            hab += c * x;
            hbb += c;
        }
        ga = ga / n + 2.0 * LOGISTIC_L2 * a;
        gb = gb / n + 2.0 * LOGISTIC_L2 * b;
        haa = haa / n + 2.0 * LOGISTIC_L2;
        hab /= n;
        hbb = hbb / n + 2.0 * LOGISTIC_L2;
        if ga.hypot(gb) < 1e-12 {
            break;
        }
        let det = haa * hbb - hab * hab;
        let (da, db) = (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det);
        let mut t = 1.0;
        let slope = ga * da + gb * db;
        let mut accepted = false;
        while t > 1e-12 {
            let fc = logistic_objective(a + t * da, b + t * db, &xs, &ys);
            if fc <= f + 1e-4 * t * slope {
                a += t * da;
                b += t * db;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || (t * da).hypot(t * db) < 1e-14 * (1.0 + a.hypot(b)) {
            break;
        }
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite("logistic coefficients".into()));
    }
    Ok(BasePredictor {
        spec: PredictorSpec::Linear { weights: vec![a], bias: b, sign: true },
        constant: false,
    })
}

/// Combines per-domain metrics under target mixture `λ`: `Σ_k λ_k m_k`.
pub fn mixture_metric(lambda: &MixtureWeights, per_domain: &[f64]) -> Result<f64> {
    if lambda.len() != per_domain.len() {
        return Err(Error::DimensionMismatch { expected: lambda.len(), got: per_domain.len() });
    }
    Ok(lambda.as_slice().iter().zip(per_domain).map(|(l, m)| l * m).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Fraction of points with `sign(score) = y` (a zero score counts as +1).
    Accuracy,
    /// Mean of `(score − y)²`.
    Mse,
}

/// Metric of `predictor` on the `λ`-weighted union of the per-domain test
/// sets, weighting each domain's metric by `λ_k`.
pub fn evaluate_target_mixture<F>(lambda: &MixtureWeights, tests: &[Dataset], predictor: F, metric: Metric) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if lambda.len() != tests.len() {
        return Err(Error::DimensionMismatch { expected: lambda.len(), got: tests.len() });
    }
    let mut per_domain = Vec::with_capacity(tests.len());
    for t in tests {
        per_domain.push(domain_metric(t, &predictor, metric)?);
    }
    mixture_metric(lambda, &per_domain)
}

fn domain_metric<F>(test: &Dataset, predictor: &F, metric: Metric) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    test.require_labels()?;
    let mut total = 0.0;
    for s in test {
        let score = predictor(&s.x)?;
        let y = s.y.unwrap_or_default();
        total += match metric {
            Metric::Accuracy => {
                let predicted = if score >= 0.0 { 1.0 } else { -1.0 };
                f64::from(u8::from(predicted == y))
            }
            Metric::Mse => (score - y).powi(2),
        };
    }
    Ok(total / test.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domains: Vec<GaussianMixtureSpec>,
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub test_size: usize,
    pub method: SolveMethod,
    /// Lattice resolution; `None` picks a default from the domain count.
    pub resolution: Option<usize>,
    pub kde_grid: KdeGrid,
    pub folds: usize,
    /// Fixed Maxent regularization; `None` selects it by cross-validation
    /// over `mu_grid`.
    pub mu: Option<f64>,
    pub mu_grid: Vec<f64>,
    /// Target mixtures evaluated besides the individual domains.
    pub targets: Vec<MixtureWeights>,
    /// Train base predictors on this many points per domain instead of the
    /// adaptation sample size.
    pub base_train_size: Option<usize>,
    /// Read the second mixture parameter as a variance.
    pub variance_convention: bool,
    pub eta: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domains: vec![GaussianMixtureSpec::domain_one(), GaussianMixtureSpec::domain_two()],
            sizes: vec![100, 300, 1000, 3000],
            runs: 10,
            test_size: 5000,
            method: SolveMethod::Grid,
            resolution: None,
            kde_grid: KdeGrid { lo: 0.01, hi: 10.0, n: 30 },
            folds: 5,
            mu: None,
            mu_grid: DEFAULT_MU_GRID.to_vec(),
            targets: vec![MixtureWeights::uniform(2)],
            base_train_size: None,
            variance_convention: false,
            eta: DEFAULT_ETA,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.domains.len();
        if p == 0 {
            return Err(invalid("need at least one domain"));
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&m| m < 10) {
            return Err(invalid("sample sizes must be nonempty and each ≥ 10"));
        }
        if self.runs == 0 {
            return Err(invalid("runs must be ≥ 1"));
        }
        if self.test_size == 0 {
            return Err(invalid("test size must be ≥ 1"));
        }
        if self.folds < 2 || self.sizes.iter().any(|&m| m < self.folds) {
            return Err(invalid("need folds ≥ 2 and every size ≥ folds"));
        }
        if self.resolution == Some(0) {
            return Err(invalid("resolution must be ≥ 1"));
        }
        if self.mu.is_none() && self.mu_grid.is_empty() {
            return Err(invalid("either mu or a nonempty mu_grid is required"));
        }
        if self.base_train_size.is_some_and(|n| n < 2) {
            return Err(invalid("base_train_size must be ≥ 2"));
        }
        if let Some(t) = self.targets.iter().find(|t| t.len() != p) {
            return Err(Error::DimensionMismatch { expected: p, got: t.len() });
        }
        log_grid(self.kde_grid.lo, self.kde_grid.hi, self.kde_grid.n)?;
        Ok(())
    }

    /// Names of the evaluated targets: `D1..Dp`, then one per mixture.
    pub fn target_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.domains.len()).map(|k| format!("D{k}")).collect();
        for t in &self.targets {
            let parts: Vec<String> = t.as_slice().iter().map(|v| v.to_string()).collect();
            names.push(format!("mix({})", parts.join(",")));
        }
        names
    }

    fn domain_specs(&self) -> Vec<GaussianMixtureSpec> {
        if self.variance_convention {
            self.domains.iter().map(GaussianMixtureSpec::scales_as_variances).collect()
        } else {
            self.domains.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub z: Vec<f64>,
    /// Parameter used at prediction time.
    pub z_prime: Vec<f64>,
    pub objective: f64,
    pub per_domain_losses: Vec<f64>,
    pub spread: f64,
    /// Accuracy per target, in [`ExperimentConfig::target_names`] order.
    pub accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub m: usize,
    /// Point where the learned domain posterior crosses 1/2.
    pub threshold: Option<f64>,
    pub mu: f64,
    pub sigmas: Vec<f64>,
    pub qhat: Vec<f64>,
    pub base_constant: Vec<bool>,
    /// Accuracy of each base predictor on its own domain's test set.
    pub base_accuracy: Vec<f64>,
    pub dmsa: MethodRecord,
    pub gmsa: MethodRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: String,
    pub target: String,
    pub m: usize,
    pub mean_acc: f64,
    pub std_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub curves: Vec<CurvePoint>,
    pub runs: Vec<RunRecord>,
}

impl ExperimentReport {
    pub fn curve(&self, method: &str, target: &str, m: usize) -> Option<&CurvePoint> {
        self.curves
            .iter()
            .find(|c| c.method == method && c.target == target && c.m == m)
    }

    pub fn runs_at(&self, m: usize) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.m == m)
    }
}

/// Stateless seed derivation (SplitMix64 finalizer over the inputs).
fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base;
    for &p in parts {
        h = h.wrapping_add(p.wrapping_add(0x9E37_79B9_7F4A_7C15));
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

const TAG_TRAIN: u64 = 1;
const TAG_TEST: u64 = 2;
const TAG_BASE: u64 = 3;
const TAG_CV: u64 = 4;

fn pooled(parts: &[Dataset], p: usize) -> Result<Dataset> {
    Dataset::new(parts.iter().flat_map(|d| d.samples().iter().cloned()).collect(), p)
}

fn solve(ctx: &ZObjectiveContext, method: SolveMethod, resolution: usize) -> Result<ZSolution> {
    let grid = grid_search_z(ctx, resolution, DEFAULT_GRID_CAP)?;
    match method {
        SolveMethod::Grid => Ok(grid),
        SolveMethod::Iterative => iterative_solve_z(ctx, &grid.z, &IterativeOptions::default()),
    }
}

fn method_record(sol: &ZSolution, accuracy: Vec<f64>) -> MethodRecord {
    MethodRecord {
        z: sol.z.as_slice().to_vec(),
        z_prime: sol.z_prime.as_slice().to_vec(),
        objective: sol.objective,
        per_domain_losses: sol.per_domain_losses.clone(),
        spread: balance_report(sol),
        accuracy,
    }
}

/// One run at sample size `m`.
pub fn run_single(config: &ExperimentConfig, run: usize, m: usize) -> Result<RunRecord> {
    let specs = config.domain_specs();
    let p = specs.len();
    let tag = |t: u64, k: usize| derive_seed(config.seed, &[run as u64, m as u64, t, k as u64]);

    let train: Vec<Dataset> = (0..p)
        .map(|k| labeled_domain_sample(&specs[k], m, k, p, tag(TAG_TRAIN, k)))
        .collect::<Result<_>>()?;
    let tests: Vec<Dataset> = (0..p)
        .map(|k| labeled_domain_sample(&specs[k], config.test_size, k, p, tag(TAG_TEST, k)))
        .collect::<Result<_>>()?;

    let bases: Vec<BasePredictor> = (0..p)
        .map(|k| match config.base_train_size {
            // Held fixed across m: seeded by run only.
            Some(n) => labeled_domain_sample(
                &specs[k],
                n,
                k,
                p,
                derive_seed(config.seed, &[run as u64, TAG_BASE, k as u64]),
            )
            .and_then(|d| train_base_predictor(&d)),
            None => train_base_predictor(&train[k]),
        })
        .collect::<Result<_>>()?;
    let base_accuracy = bases
        .iter()
        .zip(&tests)
        .map(|(b, t)| domain_metric(t, &|x: &[f64]| Ok(b.score(x[0])), Metric::Accuracy))
        .collect::<Result<Vec<_>>>()?;
    let predictors = SourcePredictorSet::from_specs(
        bases.iter().map(|b| b.spec.clone()).collect(),
        LossModel::Regression,
        None,
    )?;

    let pool = pooled(&train, p)?;
    let feature_map = FeatureMap::per_class_linear(1);
    let options = TrainOptions::default();
    let mu = match config.mu {
        Some(mu) => mu,
        None => select_mu_cv(&pool, &config.mu_grid, config.folds, &feature_map, options, tag(TAG_CV, 0))?.mu,
    };
    let maxent = train_maxent(&pool, mu, feature_map, options, tag(TAG_CV, 1))?;

    let grid = log_grid(config.kde_grid.lo, config.kde_grid.hi, config.kde_grid.n)?;
    let mut models = Vec::with_capacity(p);
    let mut sigmas = Vec::with_capacity(p);
    for (k, d) in train.iter().enumerate() {
        let xs: Vec<Vec<f64>> = d.iter().map(|s| s.x.clone()).collect();
        let sel = select_bandwidth_cv(&xs, &grid, config.folds, tag(TAG_CV, 2 + k))?;
        sigmas.push(sel.sigma);
        models.push(kde_fit(&xs, sel.sigma)?);
    }
    let kde = KdeDensities::new(models)?;

    let spec = LossSpec::squared();
    let resolution = config.resolution.unwrap_or_else(|| default_resolution(p));
    let dctx = ZObjectiveContext::discriminative(&pool, &maxent, &predictors, spec, config.eta)?;
    let gctx = ZObjectiveContext::generative(&pool, &kde, &predictors, spec, config.eta)?;
    let dsol = solve(&dctx, config.method, resolution)?;
    let gsol = solve(&gctx, config.method, resolution)?;

    let dmsa = |x: &[f64]| dmsa_predict_regression(&dsol.z_prime, &maxent, &predictors, x, config.eta);
    let gmsa = |x: &[f64]| gmsa_predict_regression(&gsol.z, &kde, &predictors, x, config.eta);
    let per_domain = |f: &dyn Fn(&[f64]) -> Result<f64>| -> Result<Vec<f64>> {
        tests.iter().map(|t| domain_metric(t, &f, Metric::Accuracy)).collect()
    };
    let expand = |acc: Vec<f64>| -> Result<Vec<f64>> {
        let mut out = acc.clone();
        for t in &config.targets {
            out.push(mixture_metric(t, &acc)?);
        }
        Ok(out)
    };
    let dacc = expand(per_domain(&dmsa)?)?;
    let gacc = expand(per_domain(&gmsa)?)?;

    Ok(RunRecord {
        run,
        m,
        threshold: maxent.crossing_point_1d(),
        mu,
        sigmas,
        qhat: dctx.qhat().map(<[f64]>::to_vec).unwrap_or_default(),
        base_constant: bases.iter().map(|b| b.constant).collect(),
        base_accuracy,
        dmsa: method_record(&dsol, dacc),
        gmsa: method_record(&gsol, gacc),
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every (run, size) pair, possibly in parallel; results are ordered
/// by size, then run, and do not depend on scheduling.
pub fn run_synthetic(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = config
        .sizes
        .iter()
        .flat_map(|&m| (0..config.runs).map(move |r| (r, m)))
        .collect();
    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(r, m)| run_single(config, r, m))
        .collect::<Result<_>>()?;

    let names = config.target_names();
    let mut curves = Vec::new();
    for method in ["dmsa", "gmsa"] {
        for (ti, target) in names.iter().enumerate() {
            for &m in &config.sizes {
                let accs: Vec<f64> = runs
                    .iter()
                    .filter(|r| r.m == m)
                    .map(|r| if method == "dmsa" { r.dmsa.accuracy[ti] } else { r.gmsa.accuracy[ti] })
                    .collect();
                let (mean_acc, std_acc) = mean_std(&accs);
                curves.push(CurvePoint {
                    method: method.to_string(),
                    target: target.clone(),
                    m,
                    mean_acc,
                    std_acc,
                });
            }
        }
    }
    Ok(ExperimentReport {
        config: config.clone(),
        curves,
        runs,
    })
}

/// Writes `method,target,m,mean_acc,std_acc` rows.
pub fn write_curves_csv<W: Write>(report: &ExperimentReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for c in &report.curves {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}
