//! Python bindings: divergences, domain models, combiners, z solving and
//! the synthetic benchmark.

use msa_core::combine::{dmsa_predict, gmsa_predict, mix_weights as core_mix_weights, PredictorSpec, SourcePredictorSet, DEFAULT_ETA};
use msa_core::kde::{kde_fit, log_grid, select_bandwidth_cv, KdeDensities, KdeModel};
use msa_core::loss::{LossModel, LossSpec, Output};
use msa_core::maxent::{select_mu_cv, train_maxent, FeatureMap, MaxentJson, MaxentModel, TrainOptions, DEFAULT_MU_GRID};
use msa_core::renyi::{renyi_d, renyi_exp as core_renyi_exp, triangle_slack as core_triangle_slack, FiniteDistribution};
use msa_core::synthbench::{run_synthetic as core_run_synthetic, ExperimentConfig};
use msa_core::zsolve::{
    balance_report, default_resolution, grid_search_z, iterative_solve_z, IterativeOptions, ZObjectiveContext, ZSolution,
    DEFAULT_GRID_CAP,
};
use msa_core::{Dataset, MixtureWeights, Sample};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Deserialize;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dist(v: Vec<f64>) -> PyResult<FiniteDistribution> {
    FiniteDistribution::new(v).map_err(err)
}

fn weights(z: Vec<f64>) -> PyResult<MixtureWeights> {
    MixtureWeights::new(z).map_err(err)
}

fn dataset(x: Vec<Vec<f64>>, y: Option<Vec<f64>>, domains: Option<Vec<usize>>, p: Option<usize>) -> PyResult<Dataset> {
    let n = x.len();
    if y.as_ref().is_some_and(|y| y.len() != n) || domains.as_ref().is_some_and(|d| d.len() != n) {
        return Err(PyValueError::new_err("x, y and domains must have the same length"));
    }
    let samples = x
        .into_iter()
        .enumerate()
        .map(|(i, xi)| Sample::new(xi, y.as_ref().map(|y| y[i]), domains.as_ref().map(|d| d[i])))
        .collect();
    match p {
        Some(p) => Dataset::new(samples, p),
        None => Dataset::infer(samples),
    }
    .map_err(err)
}

/// Rényi divergence `D_α(P‖Q)` in nats; `alpha` may be `inf`.
#[pyfunction]
fn renyi_divergence(p: Vec<f64>, q: Vec<f64>, alpha: f64) -> PyResult<f64> {
    renyi_d(&dist(p)?, &dist(q)?, alpha).map_err(err)
}

/// Exponentiated divergence `d_α(P‖Q) = exp(D_α(P‖Q))`.
#[pyfunction]
fn renyi_exp(p: Vec<f64>, q: Vec<f64>, alpha: f64) -> PyResult<f64> {
    core_renyi_exp(&dist(p)?, &dist(q)?, alpha).map_err(err)
}

/// Slack of the Rényi triangle inequality as `(slack, lhs, rhs, infinite)`.
#[pyfunction]
fn triangle_slack(p: Vec<f64>, q: Vec<f64>, r: Vec<f64>, alpha: f64, gamma: f64) -> PyResult<(f64, f64, f64, bool)> {
    let s = core_triangle_slack(&dist(p)?, &dist(q)?, &dist(r)?, alpha, gamma).map_err(err)?;
    Ok((s.slack, s.lhs, s.rhs, s.infinite))
}

/// Combination weights `z_k s_k / (Σ_j z_j s_j + η)`.
#[pyfunction]
#[pyo3(signature = (z, scores, eta = 0.0))]
fn mix_weights(z: Vec<f64>, scores: Vec<f64>, eta: f64) -> PyResult<Vec<f64>> {
    core_mix_weights(&weights(z)?, &scores, eta).map_err(err)
}

/// Maximum-entropy domain classifier.
#[pyclass(name = "Maxent", module = "msa_py", frozen)]
struct PyMaxent(MaxentModel);

#[pymethods]
impl PyMaxent {
    /// Trains on `x` with domain labels; `mu=None` selects μ by cross-validation.
    #[staticmethod]
    #[pyo3(signature = (x, domains, mu = None, folds = 5, seed = 0))]
    fn train(x: Vec<Vec<f64>>, domains: Vec<usize>, mu: Option<f64>, folds: usize, seed: u64) -> PyResult<Self> {
        let data = dataset(x, None, Some(domains), None)?;
        let map = FeatureMap::per_class_linear(data.dim());
        let options = TrainOptions::default();
        let mu = match mu {
            Some(mu) => mu,
            None => select_mu_cv(&data, &DEFAULT_MU_GRID, folds, &map, options, seed).map_err(err)?.mu,
        };
        train_maxent(&data, mu, map, options, seed).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let json: MaxentJson = serde_json::from_str(text).map_err(err)?;
        MaxentModel::from_json(&json).map(Self).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0.to_json()).map_err(err)
    }

    /// Posterior `Q̂(·|x)` over domains.
    fn posterior(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.posterior_vec(&x).map_err(err)
    }

    /// Point where the two-domain posterior crosses 1/2 (1-D inputs only).
    fn crossing_point(&self) -> Option<f64> {
        self.0.crossing_point_1d()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.to_json().mu
    }

    #[getter]
    fn num_domains(&self) -> usize {
        self.0.to_json().p
    }
}

/// Gaussian kernel density estimate of one domain.
#[pyclass(name = "Kde", module = "msa_py", frozen)]
struct PyKde(KdeModel);

#[pymethods]
impl PyKde {
    /// Fits a KDE; `sigma=None` picks σ on a log grid `lo..hi` of `n` points by cross-validation.
    #[new]
    #[pyo3(signature = (samples, sigma = None, grid = (0.01, 10.0, 30), folds = 5, seed = 0))]
    fn new(samples: Vec<Vec<f64>>, sigma: Option<f64>, grid: (f64, f64, usize), folds: usize, seed: u64) -> PyResult<Self> {
        let sigma = match sigma {
            Some(s) => s,
            None => {
                let grid = log_grid(grid.0, grid.1, grid.2).map_err(err)?;
                select_bandwidth_cv(&samples, &grid, folds, seed).map_err(err)?.sigma
            }
        };
        kde_fit(&samples, sigma).map(Self).map_err(err)
    }

    fn density(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.density(&x).map_err(err)
    }

    fn log_density(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.log_density(&x).map_err(err)
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma()
    }
}

#[derive(Deserialize)]
struct Bundle {
    #[serde(default = "regression")]
    model: LossModel,
    #[serde(default)]
    n_classes: Option<usize>,
    predictors: Vec<PredictorSpec>,
}

fn regression() -> LossModel {
    LossModel::Regression
}

/// Source predictors parsed from the JSON bundle format used by the CLI.
#[pyclass(name = "Predictors", module = "msa_py", frozen)]
struct PyPredictors {
    specs: Vec<PredictorSpec>,
    model: LossModel,
    n_classes: Option<usize>,
}

impl PyPredictors {
    fn build(&self) -> PyResult<SourcePredictorSet> {
        SourcePredictorSet::from_specs(self.specs.clone(), self.model, self.n_classes).map_err(err)
    }
}

#[pymethods]
impl PyPredictors {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let b: Bundle = serde_json::from_str(text).map_err(err)?;
        let out = Self { specs: b.predictors, model: b.model, n_classes: b.n_classes };
        out.build()?;
        Ok(out)
    }

    fn __len__(&self) -> usize {
        self.specs.len()
    }
}

/// Domain weighting: a trained posterior or one KDE per domain.
enum Weighting {
    Posterior(MaxentModel),
    Kde(KdeDensities),
}

fn weighting(obj: &Bound<'_, PyAny>) -> PyResult<Weighting> {
    if let Ok(m) = obj.cast::<PyMaxent>() {
        return Ok(Weighting::Posterior(m.get().0.clone()));
    }
    let kdes: Vec<Bound<'_, PyKde>> = obj.extract().map_err(|_| PyValueError::new_err("weighting must be a Maxent or a list of Kde"))?;
    let models = kdes.iter().map(|k| k.get().0.clone()).collect();
    Ok(Weighting::Kde(KdeDensities::new(models).map_err(err)?))
}

fn output_to_py(py: Python<'_>, out: Output) -> PyResult<Py<PyAny>> {
    match out {
        Output::Scalar(v) => Ok(v.into_pyobject(py)?.into_any().unbind()),
        Output::Distribution(d) => Ok(d.into_pyobject(py)?.into_any().unbind()),
    }
}

/// Combined prediction at `x`: discriminative for a `Maxent` weighting,
/// generative for a list of `Kde`. Pass `z′` when using a posterior.
#[pyfunction]
#[pyo3(signature = (z, weighting, predictors, x, eta = DEFAULT_ETA))]
fn predict(
    py: Python<'_>,
    z: Vec<f64>,
    weighting: &Bound<'_, PyAny>,
    predictors: &PyPredictors,
    x: Vec<f64>,
    eta: f64,
) -> PyResult<Py<PyAny>> {
    let z = weights(z)?;
    let set = predictors.build()?;
    let combined = match self::weighting(weighting)? {
        Weighting::Posterior(m) => dmsa_predict(&z, &m, &set, &x, eta),
        Weighting::Kde(k) => gmsa_predict(&z, &k, &set, &x, eta),
    }
    .map_err(err)?;
    output_to_py(py, combined.output)
}

fn solution_dict<'py>(py: Python<'py>, sol: &ZSolution) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("z", sol.z.as_slice().to_vec())?;
    d.set_item("z_prime", sol.z_prime.as_slice().to_vec())?;
    d.set_item("objective", sol.objective)?;
    d.set_item("per_domain_losses", sol.per_domain_losses.clone())?;
    d.set_item("spread", balance_report(sol))?;
    d.set_item("iterations", sol.iterations)?;
    d.set_item("converged", sol.converged)?;
    Ok(d)
}

/// Solves for the mixture weights `z` on a labeled calibration set.
/// `method` is `"grid"` or `"iter"`; `loss` is `"squared"` or `"cross_entropy"`.
#[pyfunction]
#[pyo3(signature = (x, y, weighting, predictors, method = "grid", resolution = None, loss = "squared", eta = DEFAULT_ETA))]
#[allow(clippy::too_many_arguments)]
fn solve_z<'py>(
    py: Python<'py>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    weighting: &Bound<'py, PyAny>,
    predictors: &PyPredictors,
    method: &str,
    resolution: Option<usize>,
    loss: &str,
    eta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    if method != "grid" && method != "iter" {
        return Err(PyValueError::new_err(format!("unknown method `{method}`")));
    }
    let spec = match loss {
        "squared" => LossSpec::squared(),
        "cross_entropy" => LossSpec::cross_entropy(),
        other => return Err(PyValueError::new_err(format!("unknown loss `{other}`"))),
    };
    let set = predictors.build()?;
    let w = self::weighting(weighting)?;
    let p = set.len();
    let cal = dataset(x, Some(y), None, Some(p))?;
    let ctx = match &w {
        Weighting::Posterior(m) => ZObjectiveContext::discriminative(&cal, m, &set, spec, eta),
        Weighting::Kde(k) => ZObjectiveContext::generative(&cal, k, &set, spec, eta),
    }
    .map_err(err)?;
    let sol = py
        .detach(|| {
            if method == "grid" {
                grid_search_z(&ctx, resolution.unwrap_or_else(|| default_resolution(p)), DEFAULT_GRID_CAP)
            } else {
                iterative_solve_z(&ctx, &MixtureWeights::uniform(p), &IterativeOptions::default())
            }
        })
        .map_err(err)?;
    solution_dict(py, &sol)
}

/// Runs the synthetic two-domain benchmark; takes and returns JSON text.
/// `config=None` uses the default configuration.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn run_synthetic(py: Python<'_>, config: Option<&str>) -> PyResult<String> {
    let config: ExperimentConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(err)?,
        None => ExperimentConfig::default(),
    };
    let report = py.detach(|| core_run_synthetic(&config)).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

#[pymodule]
fn msa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(renyi_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(renyi_exp, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_slack, m)?)?;
    m.add_function(wrap_pyfunction!(mix_weights, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(solve_z, m)?)?;
    m.add_function(wrap_pyfunction!(run_synthetic, m)?)?;
    m.add_class::<PyMaxent>()?;
    m.add_class::<PyKde>()?;
    m.add_class::<PyPredictors>()?;
    Ok(())
}
