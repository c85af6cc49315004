mod inputs;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use msa_core::combine::{dmsa_predict, gmsa_predict, DEFAULT_ETA};
use msa_core::kde::{kde_fit, log_grid, select_bandwidth_cv};
use msa_core::loss::{LossSpec, Output};
use msa_core::maxent::{select_mu_cv, train_maxent, FeatureMap, TrainOptions, DEFAULT_MU_GRID};
use msa_core::renyi::{bound_estimate_family, bound_sample_size, bound_true_family, renyi_d, BoundInputs, SampleSizeBound};
use msa_core::synthbench::{run_synthetic, write_curves_csv, ExperimentConfig};
use msa_core::zsolve::{
    balance_report, default_resolution, grid_search_z, iterative_solve_z, IterativeOptions, SolveMethod,
    ZObjectiveContext, DEFAULT_GRID_CAP,
};
use msa_core::{FiniteDistribution, MixtureWeights};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::inputs::Weighting;
use crate::manifest::Recorder;

const ENV_HELP: &str = "Environment:\n  MSA_THREADS  maximum number of worker threads (default: all cores)\n\n\
Exit status: 0 on success, 1 on runtime errors, 2 on usage errors.";

#[derive(Parser, Serialize)]
#[command(name = "msa", version, about = "Multiple-source adaptation toolkit", after_help = ENV_HELP)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize, Clone, Debug)]
struct Global {
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Additive smoothing η in the combination weights.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Maxent regularization μ (skips cross-validation).
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Simplex lattice resolution for grid search.
    #[arg(long = "grid-resolution", visible_alias = "resolution", global = true)]
    grid_resolution: Option<usize>,
    /// z solver.
    #[arg(long, value_enum, global = true)]
    method: Option<MethodArg>,
    /// Read the second Gaussian parameter of benchmark mixtures as a variance.
    #[arg(long, global = true)]
    variance_convention: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum MethodArg {
    Grid,
    Iter,
}

impl From<MethodArg> for SolveMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Grid => SolveMethod::Grid,
            MethodArg::Iter => SolveMethod::Iterative,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum LossArg {
    Squared,
    CrossEntropy,
}

#[derive(Subcommand, Serialize)]
enum Command {
    /// Fit a conditional Maxent domain posterior on domain-tagged data.
    TrainPosterior {
        /// CSV with columns x0..x{d-1},y,domain.
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `linear`, or `rff:WIDTH:BANDWIDTH` for random Fourier features.
        #[arg(long, default_value = "linear")]
        features: String,
        /// Comma-separated μ candidates for cross-validation.
        #[arg(long)]
        mu_grid: Option<String>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
    },
    /// Fit a Gaussian KDE to one domain's samples.
    Kde {
        data: PathBuf,
        #[arg(long)]
        domain: usize,
        /// `auto` (cross-validated) or a fixed σ.
        #[arg(long, default_value = "auto")]
        bandwidth: String,
        /// Log-spaced candidate grid `lo:hi:n`.
        #[arg(long, default_value = "0.01:10:30")]
        grid: String,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Output JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Choose the mixture parameter z on labeled calibration data.
    SolveZ {
        /// Labeled CSV drawn from the pooled source distribution.
        #[arg(long)]
        calibration: PathBuf,
        /// Posterior JSON file, or a directory of per-domain KDE JSON files.
        #[arg(long)]
        weighting: PathBuf,
        /// Predictor bundle JSON.
        #[arg(long)]
        predictors: PathBuf,
        #[arg(long, value_enum, default_value = "squared")]
        loss: LossArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply the combined predictor to every row of a CSV.
    Predict {
        input: PathBuf,
        #[arg(long)]
        weighting: PathBuf,
        #[arg(long)]
        predictors: PathBuf,
        /// Parameter file from `solve-z`.
        #[arg(long)]
        z: PathBuf,
        /// Output CSV; its manifest goes to `<out>.manifest.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the synthetic two-domain benchmark.
    Synth {
        /// Config JSON, or `default`.
        #[arg(long, default_value = "default")]
        config: String,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// Accuracy curves CSV.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Rényi divergence D_α(P‖Q) between two single-column probability CSVs.
    Renyi {
        /// Order α ≥ 0, or `inf`.
        #[arg(long, value_parser = inputs::parse_order)]
        alpha: f64,
        p: PathBuf,
        q: PathBuf,
        /// Also write a JSON record.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a learning-guarantee bound from a JSON description.
    Bounds {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::TrainPosterior { .. } => "train-posterior",
            Command::Kde { .. } => "kde",
            Command::SolveZ { .. } => "solve-z",
            Command::Predict { .. } => "predict",
            Command::Synth { .. } => "synth",
            Command::Renyi { .. } => "renyi",
            Command::Bounds { .. } => "bounds",
        }
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write `{}`", path.display()))
}

fn emit(out: Option<&Path>, value: &Value) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => print_line(&serde_json::to_string_pretty(value)?),
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn print_line(text: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn parse_features(s: &str, d: usize, seed: u64) -> Result<FeatureMap> {
    if s == "linear" {
        return Ok(FeatureMap::per_class_linear(d));
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["rff", w, b] => Ok(FeatureMap::random_fourier(d, w.parse()?, b.parse()?, seed)?),
        _ => bail!("unknown feature map `{s}` (expected `linear` or `rff:WIDTH:BANDWIDTH`)"),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let seed = g.seed.unwrap_or(0);
    let eta = g.eta.unwrap_or(DEFAULT_ETA);
    let mut rec = Recorder::new(cli.command.name(), cli)?;
    match &cli.command {
        Command::TrainPosterior { data, out, features, mu_grid, folds } => {
            rec.seed(seed);
            let data = inputs::dataset(&mut rec, data, None)?;
            data.require_domains()?;
            let map = parse_features(features, data.dim(), seed)?;
            let options = TrainOptions::default();
            let (mu, selection) = match g.mu {
                Some(mu) => (mu, None),
                None => {
                    let grid: Vec<f64> = match mu_grid {
                        Some(s) => s
                            .split(',')
                            .map(|v| v.trim().parse::<f64>())
                            .collect::<Result<_, _>>()
                            .context("invalid --mu-grid")?,
                        None => DEFAULT_MU_GRID.to_vec(),
                    };
                    let sel = select_mu_cv(&data, &grid, *folds, &map, options, seed)?;
                    (sel.mu, Some(json!({"grid": grid, "cv_scores": sel.cv_scores})))
                }
            };
            let model = train_maxent(&data, mu, map, options, seed)?;
            let mut payload = serde_json::to_value(model.to_json())?;
            payload["training"] = serde_json::to_value(model.summary())?;
            payload["mu_selection"] = selection.unwrap_or(Value::Null);
            payload["threshold"] = json!(model.crossing_point_1d());
            write_json(out, &rec.seal(payload)?)
        }
        Command::Kde { data, domain, bandwidth, grid, folds, out } => {
            let data = inputs::dataset(&mut rec, data, None)?;
            let subset = data.domain_subset(*domain).with_context(|| format!("no samples for domain {domain}"))?;
            let xs: Vec<Vec<f64>> = subset.iter().map(|s| s.x.clone()).collect();
            let (sigma, cv_scores) = if bandwidth == "auto" {
                rec.seed(seed);
                let (lo, hi, n) = inputs::parse_grid(grid)?;
                let sel = select_bandwidth_cv(&xs, &log_grid(lo, hi, n)?, *folds, seed)?;
                (sel.sigma, sel.cv_scores)
            } else {
                let s: f64 = bandwidth.parse().with_context(|| format!("invalid bandwidth `{bandwidth}`"))?;
                (s, Vec::new())
            };
            let model = kde_fit(&xs, sigma)?;
            let payload = serde_json::to_value(inputs::KdeFile {
                domain: *domain,
                sigma,
                cv_scores,
                centers: model.centers().to_vec(),
            })?;
            emit(out.as_deref(), &rec.seal(payload)?)
        }
        Command::SolveZ { calibration, weighting, predictors, loss, out } => {
            let w = inputs::weighting(&mut rec, weighting)?;
            let set = inputs::predictors(&mut rec, predictors)?;
            let cal = inputs::dataset(&mut rec, calibration, Some(w.num_domains()))?;
            let spec = match loss {
                LossArg::Squared => LossSpec::squared(),
                LossArg::CrossEntropy => LossSpec::cross_entropy(),
            };
            let ctx = match &w {
                Weighting::Posterior(m) => ZObjectiveContext::discriminative(&cal, m, &set, spec, eta)?,
                Weighting::Kde(k) => ZObjectiveContext::generative(&cal, k, &set, spec, eta)?,
            };
            let p = w.num_domains();
            let sol = match g.method.map(SolveMethod::from).unwrap_or(SolveMethod::Grid) {
                SolveMethod::Grid => {
                    grid_search_z(&ctx, g.grid_resolution.unwrap_or_else(|| default_resolution(p)), DEFAULT_GRID_CAP)?
                }
                SolveMethod::Iterative => {
                    iterative_solve_z(&ctx, &MixtureWeights::uniform(p), &IterativeOptions::default())?
                }
            };
            let payload = json!({
                "z": sol.z,
                "z_prime": sol.z_prime,
                "objective": sol.objective,
                "per_domain_losses": sol.per_domain_losses,
                "spread": balance_report(&sol),
                "method": sol.method,
                "iterations": sol.iterations,
                "converged": sol.converged,
                "weighting": w.kind(),
                "qhat": ctx.qhat(),
            });
            write_json(out, &rec.seal(payload)?)
        }
        Command::Predict { input, weighting, predictors, z, out } => {
            let w = inputs::weighting(&mut rec, weighting)?;
            let set = inputs::predictors(&mut rec, predictors)?;
            let zf = inputs::z_file(&mut rec, z)?;
            let data = inputs::dataset(&mut rec, input, Some(w.num_domains()))?;
            let p = w.num_domains();
            let n_out = set.n_classes();
            let mut header: Vec<String> = match n_out {
                Some(c) => (0..c).map(|j| format!("prediction_{j}")).collect(),
                None => vec!["prediction".into()],
            };
            header.extend((0..p).map(|k| format!("w_{k}")));
            header.extend((0..p).map(|k| format!("q_{k}")));
            let file = std::fs::File::create(out).with_context(|| format!("cannot write `{}`", out.display()))?;
            let mut wtr = csv::Writer::from_writer(std::io::BufWriter::new(file));
            wtr.write_record(&header)?;
            for s in &data {
                let (c, q) = match &w {
                    Weighting::Posterior(m) => {
                        let zz = zf.z_prime.as_ref().unwrap_or(&zf.z);
                        let c = dmsa_predict(zz, m, &set, &s.x, eta)?;
                        let q = c.scores.clone();
                        (c, q)
                    }
                    Weighting::Kde(k) => {
                        let c = gmsa_predict(&zf.z, k, &set, &s.x, eta)?;
                        let total: f64 = c.scores.iter().sum();
                        let q = c.scores.iter().map(|d| d / total).collect();
                        (c, q)
                    }
                };
                let mut row: Vec<f64> = match &c.output {
                    Output::Scalar(v) => vec![*v],
                    Output::Distribution(d) => d.clone(),
                };
                row.extend(&c.weights);
                row.extend(q);
                wtr.serialize(row)?;
            }
            wtr.flush()?;
            drop(wtr);
            let bytes = std::fs::read(out)?;
            let manifest = rec.manifest(manifest::sha256_hex(&bytes));
            let mut side = out.as_os_str().to_owned();
            side.push(".manifest.json");
            write_json(Path::new(&side), &json!({ "manifest": manifest }))
        }
        Command::Synth { config, out, curves } => {
            let mut cfg: ExperimentConfig = if config == "default" {
                ExperimentConfig::default()
            } else {
                let bytes = rec.read(Path::new(config))?;
                serde_json::from_slice(&bytes).with_context(|| format!("invalid config `{config}`"))?
            };
            if let Some(s) = g.seed {
                cfg.seed = s;
            }
            if g.mu.is_some() {
                cfg.mu = g.mu;
            }
            if g.grid_resolution.is_some() {
                cfg.resolution = g.grid_resolution;
            }
            if let Some(m) = g.method {
                cfg.method = m.into();
            }
            if g.variance_convention {
                cfg.variance_convention = true;
            }
            if let Some(e) = g.eta {
                cfg.eta = e;
            }
            rec.seed(cfg.seed);
            let report = run_synthetic(&cfg)?;
            if let Some(path) = curves {
                let file = std::fs::File::create(path).with_context(|| format!("cannot write `{}`", path.display()))?;
                write_curves_csv(&report, std::io::BufWriter::new(file))?;
            }
            write_json(out, &rec.seal(serde_json::to_value(&report)?)?)
        }
        Command::Renyi { alpha, p, q, out } => {
            let pd = FiniteDistribution::new(inputs::probability_column(&mut rec, p)?)
                .with_context(|| format!("`{}` is not a probability vector", p.display()))?;
            let qd = FiniteDistribution::new(inputs::probability_column(&mut rec, q)?)
                .with_context(|| format!("`{}` is not a probability vector", q.display()))?;
            let d = renyi_d(&pd, &qd, *alpha)?;
            print_line(&format!("{d:?}"))?;
            if let Some(path) = out {
                write_json(path, &rec.seal(json!({"alpha": float_json(*alpha), "divergence": float_json(d)}))?)?;
            }
            Ok(())
        }
        Command::Bounds { input, out } => {
            let bytes = rec.read(input)?;
            let req = parse_bound_request(&bytes)
                .with_context(|| format!("invalid bound description `{}`", input.display()))?;
            let value = match &req {
                BoundRequest::EstimateFamily(b) => bound_estimate_family(b)?,
                BoundRequest::TrueFamily { inputs, d_2alpha_target } => bound_true_family(inputs, *d_2alpha_target)?,
                BoundRequest::SampleSize { estimator } => bound_sample_size(estimator)?,
            };
            let request = match &req {
                BoundRequest::EstimateFamily(b) | BoundRequest::TrueFamily { inputs: b, .. } if b.alpha.is_infinite() => {
                    let mut r = serde_json::to_value(&req)?;
                    r["alpha"] = json!("inf");
                    r
                }
                _ => serde_json::to_value(&req)?,
            };
            let payload = json!({"request": request, "bound": float_json(value)});
            emit(out.as_deref(), &rec.seal(payload)?)
        }
    }
}

/// Infinity is not representable in JSON numbers.
fn float_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BoundRequest {
    /// Guarantee relative to the estimated mixture family.
    EstimateFamily(BoundInputs),
    /// Guarantee relative to the true mixture family.
    TrueFamily {
        #[serde(flatten)]
        inputs: BoundInputs,
        d_2alpha_target: f64,
    },
    /// Finite-sample guarantee for a `dmsa` or `gmsa` estimator.
    SampleSize { estimator: SampleSizeBound },
}

/// Parses a bound description; `"alpha": "inf"` selects the α → ∞ limit.
fn parse_bound_request(bytes: &[u8]) -> Result<BoundRequest> {
    let mut v: Value = serde_json::from_slice(bytes)?;
    let infinite = v
        .get("alpha")
        .and_then(Value::as_str)
        .is_some_and(|s| inputs::parse_order(s) == Ok(f64::INFINITY));
    if infinite {
        v["alpha"] = json!(2.0);
    }
    let mut req: BoundRequest = serde_json::from_value(v)?;
    if infinite {
        match &mut req {
            BoundRequest::EstimateFamily(b) | BoundRequest::TrueFamily { inputs: b, .. } => b.alpha = f64::INFINITY,
            BoundRequest::SampleSize { .. } => {}
        }
    }
    Ok(req)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("MSA_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("MSA_THREADS must be a positive integer, got `{v}`"))?;
        ensure!(n > 0, "MSA_THREADS must be a positive integer, got `{v}`");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
