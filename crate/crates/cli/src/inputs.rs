//! Loading of data files, models, predictor bundles and parameter files.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use msa_core::combine::{PredictorSpec, SourcePredictorSet};
use msa_core::kde::{kde_fit, KdeDensities};
use msa_core::loss::LossModel;
use msa_core::maxent::{MaxentJson, MaxentModel};
use msa_core::{Dataset, MixtureWeights};
use serde::{Deserialize, Serialize};

use crate::manifest::Recorder;

pub fn dataset(rec: &mut Recorder, path: &Path, p: Option<usize>) -> Result<Dataset> {
    let bytes = rec.read(path)?;
    Dataset::from_csv_reader(&bytes[..], p).with_context(|| format!("invalid data file `{}`", path.display()))
}

fn json<T: for<'de> Deserialize<'de>>(rec: &mut Recorder, path: &Path) -> Result<T> {
    let bytes = rec.read(path)?;
    serde_json::from_slice(&bytes).with_context(|| format!("invalid JSON in `{}`", path.display()))
}

/// Source predictors as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictorBundle {
    #[serde(default = "regression")]
    pub model: LossModel,
    #[serde(default)]
    pub n_classes: Option<usize>,
    pub predictors: Vec<PredictorSpec>,
}

fn regression() -> LossModel {
    LossModel::Regression
}

pub fn predictors(rec: &mut Recorder, path: &Path) -> Result<SourcePredictorSet> {
    let bundle: PredictorBundle = json(rec, path)?;
    Ok(SourcePredictorSet::from_specs(bundle.predictors, bundle.model, bundle.n_classes)?)
}

/// One per-domain density written by `msa kde`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdeFile {
    pub domain: usize,
    pub sigma: f64,
    #[serde(default)]
    pub cv_scores: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
}

pub enum Weighting {
    Posterior(MaxentModel),
    Kde(KdeDensities),
}

impl Weighting {
    pub fn kind(&self) -> &'static str {
        match self {
            Weighting::Posterior(_) => "posterior",
            Weighting::Kde(_) => "kde",
        }
    }

    pub fn num_domains(&self) -> usize {
        match self {
            Weighting::Posterior(m) => m.num_domains(),
            Weighting::Kde(k) => k.models.len(),
        }
    }
}

/// A file is a trained posterior; a directory holds one KDE file per domain.
pub fn weighting(rec: &mut Recorder, path: &Path) -> Result<Weighting> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .with_context(|| format!("cannot read `{}`", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        files.sort();
        ensure!(!files.is_empty(), "no .json density files in `{}`", path.display());
        let mut parts: Vec<KdeFile> = files.iter().map(|f| json(rec, f)).collect::<Result<_>>()?;
        parts.sort_by_key(|k| k.domain);
        for (k, part) in parts.iter().enumerate() {
            if part.domain != k {
                bail!("density files in `{}` must cover domains 0..{} exactly once", path.display(), parts.len());
            }
        }
        let models = parts
            .iter()
            .map(|k| kde_fit(&k.centers, k.sigma))
            .collect::<msa_core::Result<Vec<_>>>()?;
        Ok(Weighting::Kde(KdeDensities::new(models)?))
    } else {
        let j: MaxentJson = json(rec, path)?;
        Ok(Weighting::Posterior(MaxentModel::from_json(&j)?))
    }
}

/// Parameter file written by `msa solve-z` (or by hand, with only `z`).
#[derive(Debug, Clone, Deserialize)]
pub struct ZFile {
    pub z: MixtureWeights,
    #[serde(default)]
    pub z_prime: Option<MixtureWeights>,
}

pub fn z_file(rec: &mut Recorder, path: &Path) -> Result<ZFile> {
    json(rec, path)
}

/// A single column of probabilities; a non-numeric first row is a header.
pub fn probability_column(rec: &mut Recorder, path: &Path) -> Result<Vec<f64>> {
    let bytes = rec.read(path)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(&bytes[..]);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.with_context(|| format!("invalid CSV in `{}`", path.display()))?;
        let cell = record.get(0).unwrap_or("").trim();
        match cell.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => bail!("`{}` row {}: cannot parse `{cell}`", path.display(), i + 1),
        }
    }
    Ok(out)
}

/// `lo:hi:n`.
pub fn parse_grid(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    ensure!(parts.len() == 3, "grid must be lo:hi:n, got `{s}`");
    Ok((parts[0].parse()?, parts[1].parse()?, parts[2].parse()?))
}

/// A real number, or `inf`.
pub fn parse_order(s: &str) -> Result<f64, String> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| e.to_string()),
    }
}
