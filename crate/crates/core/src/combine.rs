//! Distribution-weighted combination of frozen source predictors.
//!
//! Both solutions share one form: at input `x`, predictor `k` receives weight
//! `w_k(x) = z_k s_k(x) / (Σ_j z_j s_j(x) + η)`. The discriminative
//! solution (DMSA) takes `s_k(x) = Q̂(k|x)` from a domain posterior; the
//! generative solution (GMSA) takes `s_k(x) = D̂_k(x)` from density
//! estimates. A posterior also induces densities by Bayes' rule,
//! `D̂_k(x) = Q̂(k|x) D(x) / Q̂(k)`, under which GMSA with `z` equals DMSA
//! with the reweighted `z′` from [`map_z_prime`].

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::kde::KdeDensities;
use crate::loss::{LossModel, Output};
use crate::maxent::MaxentModel;
use crate::simplex::MixtureWeights;

pub const DEFAULT_ETA: f64 = 1e-8;

/// A frozen source model `h_k`.
pub trait SourcePredictor: Send + Sync {
    fn predict(&self, x: &[f64]) -> Output;
}

/// An estimate of `Q(· | x)`, the probability that `x` came from each domain.
pub trait DomainPosterior: Send + Sync {
    fn num_domains(&self) -> usize;
    fn posterior(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Per-domain marginal density scores `D̂_k(x)`, known up to a common
/// positive factor.
pub trait DensityModel: Send + Sync {
    fn num_domains(&self) -> usize;
    fn densities(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl<T: SourcePredictor + ?Sized> SourcePredictor for &T {
    fn predict(&self, x: &[f64]) -> Output {
        (**self).predict(x)
    }
}

impl<T: DomainPosterior + ?Sized> DomainPosterior for &T {
    fn num_domains(&self) -> usize {
        (**self).num_domains()
    }
    fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).posterior(x)
    }
}

impl<T: DensityModel + ?Sized> DensityModel for &T {
    fn num_domains(&self) -> usize {
        (**self).num_domains()
    }
    fn densities(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).densities(x)
    }
}

impl DomainPosterior for MaxentModel {
    fn num_domains(&self) -> usize {
        MaxentModel::num_domains(self)
    }
    fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.posterior_vec(x)
    }
}

impl DensityModel for KdeDensities {
    fn num_domains(&self) -> usize {
        self.models.len()
    }
    fn densities(&self, x: &[f64]) -> Result<Vec<f64>> {
        KdeDensities::densities(self, x)
    }
}

/// Closure-backed predictor.
pub struct FnPredictor<F>(pub F);

impl<F: Fn(&[f64]) -> Output + Send + Sync> SourcePredictor for FnPredictor<F> {
    fn predict(&self, x: &[f64]) -> Output {
        (self.0)(x)
    }
}

/// Closure-backed posterior over `p` domains.
pub struct FnPosterior<F> {
    pub p: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Send + Sync> DomainPosterior for FnPosterior<F> {
    fn num_domains(&self) -> usize {
        self.p
    }
    fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(x))
    }
}

/// Closure-backed density scores over `p` domains.
pub struct FnDensities<F> {
    pub p: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Send + Sync> DensityModel for FnDensities<F> {
    fn num_domains(&self) -> usize {
        self.p
    }
    fn densities(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(x))
    }
}

/// Serializable source predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorSpec {
    /// `w · x + b`, or `sign(w · x + b) ∈ {-1, +1}` when `sign` is set
    /// (sign(0) = +1).
    Linear {
        weights: Vec<f64>,
        bias: f64,
        #[serde(default)]
        sign: bool,
    },
    /// `softmax(W x + b)` over classes.
    Softmax {
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    },
    /// Fixed output regardless of input.
    Constant { output: Output },
}

impl PredictorSpec {
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            PredictorSpec::Linear { weights, .. } => Some(weights.len()),
            PredictorSpec::Softmax { weights, .. } => weights.first().map(Vec::len),
            PredictorSpec::Constant { .. } => None,
        }
    }
}

impl SourcePredictor for PredictorSpec {
    fn predict(&self, x: &[f64]) -> Output {
        match self {
            PredictorSpec::Linear { weights, bias, sign } => {
                let v = crate::numeric::dot(weights, x) + bias;
                if *sign {
                    Output::Scalar(if v >= 0.0 { 1.0 } else { -1.0 })
                } else {
                    Output::Scalar(v)
                }
            }
            PredictorSpec::Softmax { weights, biases } => {
                let logits: Vec<f64> = weights
                    .iter()
                    .zip(biases)
                    .map(|(w, b)| crate::numeric::dot(w, x) + b)
                    .collect();
                Output::Distribution(crate::numeric::softmax(&logits))
            }
            PredictorSpec::Constant { output } => output.clone(),
        }
    }
}

/// The `p` source predictors together with their loss model.
pub struct SourcePredictorSet {
    predictors: Vec<Box<dyn SourcePredictor>>,
    model: LossModel,
    n_classes: Option<usize>,
}

impl SourcePredictorSet {
    pub fn regression(predictors: Vec<Box<dyn SourcePredictor>>) -> Result<Self> {
        if predictors.is_empty() {
            return Err(invalid("need at least one source predictor"));
        }
        Ok(Self {
            predictors,
            model: LossModel::Regression,
            n_classes: None,
        })
    }

    pub fn probability(predictors: Vec<Box<dyn SourcePredictor>>, n_classes: usize) -> Result<Self> {
        if predictors.is_empty() || n_classes == 0 {
            return Err(invalid("need at least one source predictor and one class"));
        }
        Ok(Self {
            predictors,
            model: LossModel::Probability,
            n_classes: Some(n_classes),
        })
    }

    pub fn from_specs(specs: Vec<PredictorSpec>, model: LossModel, n_classes: Option<usize>) -> Result<Self> {
        let boxed: Vec<Box<dyn SourcePredictor>> = specs
            .into_iter()
            .map(|s| Box::new(s) as Box<dyn SourcePredictor>)
            .collect();
        match model {
            LossModel::Regression => Self::regression(boxed),
            LossModel::Probability => Self::probability(
                boxed,
                n_classes.ok_or_else(|| invalid("probability model needs a class count"))?,
            ),
        }
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    pub fn model(&self) -> LossModel {
        self.model
    }

    pub fn n_classes(&self) -> Option<usize> {
        self.n_classes
    }

    /// Every `h_k(x)`, checked against the loss model.
    pub fn outputs(&self, x: &[f64]) -> Result<Vec<Output>> {
        self.predictors
            .iter()
            .enumerate()
            .map(|(k, h)| {
                let out = h.predict(x);
                self.check_output(k, &out)?;
                Ok(out)
            })
            .collect()
    }

    fn check_output(&self, k: usize, out: &Output) -> Result<()> {
        match (self.model, out) {
            (LossModel::Regression, Output::Scalar(v)) if v.is_finite() => Ok(()),
            (LossModel::Probability, Output::Distribution(dist)) => {
                let c = self.n_classes.unwrap_or_default();
                if dist.len() != c {
                    return Err(Error::DimensionMismatch {
                        expected: c,
                        got: dist.len(),
                    });
                }
                let sum: f64 = dist.iter().sum();
                if (sum - 1.0).abs() > 1e-10 || dist.iter().any(|v| !(*v >= 0.0)) {
                    return Err(invalid(format!("predictor {k} is not normalized (sum {sum})")));
                }
                Ok(())
            }
            _ => Err(invalid(format!("predictor {k} output does not match the {:?} model", self.model))),
        }
    }
}

/// `w_k = z_k s_k / (Σ_j z_j s_j + η)`.
pub fn mix_weights(z: &MixtureWeights, scores: &[f64], eta: f64) -> Result<Vec<f64>> {
    if scores.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: scores.len(),
        });
    }
    if !(eta >= 0.0) {
        return Err(invalid("smoothing η must be ≥ 0"));
    }
    if scores.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(invalid("domain scores must be finite and nonnegative"));
    }
    let num: Vec<f64> = z.as_slice().iter().zip(scores).map(|(a, b)| a * b).collect();
    let denom = num.iter().sum::<f64>() + eta;
    if !(denom > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(num.into_iter().map(|v| v / denom).collect())
}

/// `Σ_k w_k h_k(x)` for scalar or distribution outputs.
pub fn combine_outputs(weights: &[f64], outputs: &[Output]) -> Result<Output> {
    match outputs.first() {
        None => Err(invalid("no predictor outputs")),
        Some(Output::Scalar(_)) => {
            let mut acc = 0.0;
            for (w, out) in weights.iter().zip(outputs) {
                acc += w * out.as_scalar().ok_or_else(|| invalid("mixed output shapes"))?;
            }
            Ok(Output::Scalar(acc))
        }
        Some(Output::Distribution(first)) => {
            let mut acc = vec![0.0; first.len()];
            for (w, out) in weights.iter().zip(outputs) {
                let dist = out.as_distribution().ok_or_else(|| invalid("mixed output shapes"))?;
                for (a, v) in acc.iter_mut().zip(dist) {
                    *a += w * v;
                }
            }
            Ok(Output::Distribution(acc))
        }
    }
}

/// A combined prediction together with the quantities that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Combined {
    pub output: Output,
    /// `w_k(x)`.
    pub weights: Vec<f64>,
    /// `s_k(x)`: posterior or density scores.
    pub scores: Vec<f64>,
}

fn check_p(z: &MixtureWeights, p: usize, predictors: &SourcePredictorSet) -> Result<()> {
    if z.len() != p || predictors.len() != p {
        return Err(invalid(format!(
            "domain count mismatch: z has {}, scorer {p}, predictors {}",
            z.len(),
            predictors.len()
        )));
    }
    Ok(())
}

fn combine_with_scores(
    z: &MixtureWeights,
    scores: Vec<f64>,
    predictors: &SourcePredictorSet,
    x: &[f64],
    eta: f64,
) -> Result<Combined> {
    let weights = mix_weights(z, &scores, eta)?;
    let outputs = predictors.outputs(x)?;
    Ok(Combined {
        output: combine_outputs(&weights, &outputs)?,
        weights,
        scores,
    })
}

/// Discriminative combination `ĝ_z(x)` driven by a domain posterior.
pub fn dmsa_predict(
    z: &MixtureWeights,
    posterior: &dyn DomainPosterior,
    predictors: &SourcePredictorSet,
    x: &[f64],
    eta: f64,
) -> Result<Combined> {
    check_p(z, posterior.num_domains(), predictors)?;
    combine_with_scores(z, posterior.posterior(x)?, predictors, x, eta)
}

/// Generative combination `ĥ_z(x)` driven by density estimates.
pub fn gmsa_predict(
    z: &MixtureWeights,
    densities: &dyn DensityModel,
    predictors: &SourcePredictorSet,
    x: &[f64],
    eta: f64,
) -> Result<Combined> {
    check_p(z, densities.num_domains(), predictors)?;
    combine_with_scores(z, densities.densities(x)?, predictors, x, eta)
}

fn expect_scalar(c: Combined) -> Result<f64> {
    c.output
        .as_scalar()
        .ok_or_else(|| invalid("expected a regression predictor set"))
}

fn expect_distribution(c: Combined) -> Result<Vec<f64>> {
    match c.output {
        Output::Distribution(d) => Ok(d),
        Output::Scalar(_) => Err(invalid("expected a probability predictor set")),
    }
}

pub fn dmsa_predict_regression(
    z: &MixtureWeights,
    posterior: &dyn DomainPosterior,
    predictors: &SourcePredictorSet,
    x: &[f64],
    eta: f64,
) -> Result<f64> {
    expect_scalar(dmsa_predict(z, posterior, predictors, x, eta)?)
}

pub fn dmsa_predict_probability(
    z: &MixtureWeights,
    posterior: &dyn DomainPosterior,
    predictors: &SourcePredictorSet,
    x: &[f64],
    eta: f64,
) -> Result<Vec<f64>> {
    expect_distribution(dmsa_predict(z, posterior, predictors, x, eta)?)
}

pub fn gmsa_predict_regression(
    z: &MixtureWeights,
    densities: &dyn DensityModel,
    predictors: &SourcePredictorSet,
    x: &[f64],
    eta: f64,
) -> Result<f64> {
    expect_scalar(gmsa_predict(z, densities, predictors, x, eta)?)
}

pub fn gmsa_predict_probability(
    z: &MixtureWeights,
    densities: &dyn DensityModel,
    predictors: &SourcePredictorSet,
    x: &[f64],
    eta: f64,
) -> Result<Vec<f64>> {
    expect_distribution(gmsa_predict(z, densities, predictors, x, eta)?)
}

/// Densities induced by a posterior through Bayes' rule. The shared factor
/// `D(x)` cancels inside [`mix_weights`], so the score for domain `k` is
/// `Q̂(k|x) / Q̂(k)`.
pub struct PosteriorInducedDensities<P> {
    posterior: P,
    qhat: Vec<f64>,
}

impl<P: DomainPosterior> PosteriorInducedDensities<P> {
    /// Domain priors `Q̂(k)`, averaged over the pooled marginal sample.
    pub fn qhat(&self) -> &[f64] {
        &self.qhat
    }

    pub fn posterior(&self) -> &P {
        &self.posterior
    }
}

impl<P: DomainPosterior> DensityModel for PosteriorInducedDensities<P> {
    fn num_domains(&self) -> usize {
        self.qhat.len()
    }

    fn densities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let q = self.posterior.posterior(x)?;
        Ok(q.iter().zip(&self.qhat).map(|(a, b)| a / b).collect())
    }
}

/// Estimates `Q̂(k) = E_{x∼D}[Q̂(k|x)]` by a left-to-right Monte Carlo mean
/// over `marginal_samples`, which should be drawn from the pooled marginal.
pub fn induce_densities<P: DomainPosterior>(
    posterior: P,
    marginal_samples: &Dataset,
) -> Result<PosteriorInducedDensities<P>> {
    if marginal_samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let p = posterior.num_domains();
    let mut sums = vec![0.0; p];
    for s in marginal_samples {
        let q = posterior.posterior(&s.x)?;
        if q.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: q.len() });
        }
        for (acc, v) in sums.iter_mut().zip(&q) {
            *acc += v;
        }
    }
    let n = marginal_samples.len() as f64;
    let qhat: Vec<f64> = sums.into_iter().map(|s| s / n).collect();
    if let Some(k) = qhat.iter().position(|&v| v < 1e-12) {
        return Err(Error::VanishingDomainMass(k));
    }
    let total: f64 = qhat.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(invalid(format!("domain priors sum to {total}; posterior is not normalized")));
    }
    Ok(PosteriorInducedDensities { posterior, qhat })
}

/// `z′_k = (z_k / Q̂(k)) / Σ_j (z_j / Q̂(j))`.
pub fn map_z_prime(z: &MixtureWeights, qhat: &[f64]) -> Result<MixtureWeights> {
    if qhat.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: qhat.len(),
        });
    }
    if qhat.iter().any(|q| !(*q > 0.0) || !q.is_finite()) {
        return Err(invalid("domain priors Q̂(k) must be positive"));
    }
    let raw: Vec<f64> = z.as_slice().iter().zip(qhat).map(|(a, b)| a / b).collect();
    let total: f64 = raw.iter().sum();
    MixtureWeights::new(raw.into_iter().map(|v| v / total).collect())
}

/// `(1/p) Σ_k h_k(x)`.
pub fn uniform_predict(predictors: &SourcePredictorSet, x: &[f64]) -> Result<Output> {
    let outputs = predictors.outputs(x)?;
    let w = vec![1.0 / outputs.len() as f64; outputs.len()];
    combine_outputs(&w, &outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;

    fn z(v: &[f64]) -> MixtureWeights {
        MixtureWeights::new(v.to_vec()).unwrap()
    }

    fn constants(values: &[f64]) -> SourcePredictorSet {
        SourcePredictorSet::regression(
            values
                .iter()
                .map(|&v| Box::new(PredictorSpec::Constant { output: Output::Scalar(v) }) as Box<dyn SourcePredictor>)
                .collect(),
        )
        .unwrap()
    }

    fn dists(values: &[&[f64]]) -> SourcePredictorSet {
        SourcePredictorSet::probability(
            values
                .iter()
                .map(|v| {
                    Box::new(PredictorSpec::Constant {
                        output: Output::Distribution(v.to_vec()),
                    }) as Box<dyn SourcePredictor>
                })
                .collect(),
            values[0].len(),
        )
        .unwrap()
    }

    fn fixed_posterior(q: Vec<f64>) -> FnPosterior<impl Fn(&[f64]) -> Vec<f64> + Send + Sync> {
        FnPosterior {
            p: q.len(),
            f: move |_: &[f64]| q.clone(),
        }
    }

    #[test]
    fn equal_scores_return_z() {
        let w = mix_weights(&z(&[0.2, 0.3, 0.5]), &[0.7, 0.7, 0.7], 0.0).unwrap();
        for (a, b) in w.iter().zip(&[0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn vertex_z_selects_one_domain() {
        let w = mix_weights(&MixtureWeights::vertex(3, 1), &[0.2, 0.3, 0.5], 0.0).unwrap();
        assert_eq!(w, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn hand_mixture_weights() {
        let w = mix_weights(&z(&[0.5, 0.5]), &[0.9, 0.1], 0.0).unwrap();
        assert!((w[0] - 0.9).abs() < 1e-15 && (w[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_denominator_needs_smoothing() {
        assert!(matches!(
            mix_weights(&z(&[0.5, 0.5]), &[0.0, 0.0], 0.0),
            Err(Error::ZeroDenominator)
        ));
        let w = mix_weights(&z(&[0.5, 0.5]), &[0.0, 0.0], 1e-8).unwrap();
        assert_eq!(w, vec![0.0, 0.0]);
    }

    #[test]
    fn smoothing_makes_sub_convex_weights() {
        let w = mix_weights(&z(&[0.5, 0.5]), &[0.3, 0.1], 0.1).unwrap();
        assert!(w.iter().sum::<f64>() < 1.0);
    }

    #[test]
    fn dmsa_regression_examples() {
        let hs = constants(&[2.5, 2.5]);
        let post = fixed_posterior(vec![0.3, 0.7]);
        let v = dmsa_predict_regression(&z(&[0.1, 0.9]), &post, &hs, &[0.0], 0.0).unwrap();
        assert!((v - 2.5).abs() < 1e-15);

        let hs = constants(&[1.0, -1.0]);
        let one_hot = fixed_posterior(vec![1.0, 0.0]);
        assert_eq!(dmsa_predict_regression(&z(&[0.4, 0.6]), &one_hot, &hs, &[0.0], 0.0).unwrap(), 1.0);

        let post = fixed_posterior(vec![0.8, 0.2]);
        let v = dmsa_predict_regression(&z(&[0.5, 0.5]), &post, &hs, &[0.0], 0.0).unwrap();
        assert!((v - 0.6).abs() < 1e-15);
    }

    #[test]
    fn dmsa_probability_examples() {
        let hs = dists(&[&[0.2, 0.8], &[0.2, 0.8]]);
        let post = fixed_posterior(vec![0.6, 0.4]);
        let v = dmsa_predict_probability(&z(&[0.3, 0.7]), &post, &hs, &[1.0], 0.0).unwrap();
        assert!((v[0] - 0.2).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);

        let hs = dists(&[&[0.9, 0.1], &[0.3, 0.7]]);
        let v = dmsa_predict_probability(&MixtureWeights::vertex(2, 1), &post, &hs, &[1.0], 0.0).unwrap();
        assert_eq!(v, vec![0.3, 0.7]);

        // weights (0.8, 0.2) from z = (0.5, 0.5), posterior (0.8, 0.2)
        let post = fixed_posterior(vec![0.8, 0.2]);
        let v = dmsa_predict_probability(&z(&[0.5, 0.5]), &post, &hs, &[1.0], 0.0).unwrap();
        assert!((v[0] - (0.8 * 0.9 + 0.2 * 0.3)).abs() < 1e-15);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gmsa_examples() {
        let dens = FnDensities {
            p: 2,
            f: |_: &[f64]| vec![0.02, 0.06],
        };
        let hs = constants(&[4.0, 4.0]);
        assert!((gmsa_predict_regression(&z(&[0.5, 0.5]), &dens, &hs, &[0.0], 0.0).unwrap() - 4.0).abs() < 1e-15);

        let hs = constants(&[1.0, -3.0]);
        assert_eq!(gmsa_predict_regression(&MixtureWeights::vertex(2, 1), &dens, &hs, &[0.0], 0.0).unwrap(), -3.0);

        // weights ∝ (0.5·0.02, 0.5·0.06) = (0.25, 0.75)
        let v = gmsa_predict_regression(&z(&[0.5, 0.5]), &dens, &hs, &[0.0], 0.0).unwrap();
        assert!((v - (0.25 - 2.25)).abs() < 1e-15);

        let hs = dists(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let v = gmsa_predict_probability(&z(&[0.5, 0.5]), &dens, &hs, &[0.0], 0.0).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-15 && (v[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn induced_densities_with_exact_posterior() {
        // Two domains on {0, 1, 2}: D1 = (1/2, 1/2, 0), D2 = (0, 1/2, 1/2).
        // Pooled D = (1/4, 1/2, 1/4); exact Q(1|x) = (1, 1/2, 0).
        let post = FnPosterior {
            p: 2,
            f: |x: &[f64]| match x[0] as i32 {
                0 => vec![1.0, 0.0],
                1 => vec![0.5, 0.5],
                _ => vec![0.0, 1.0],
            },
        };
        let pooled = Dataset::new(
            [0.0, 1.0, 1.0, 2.0]
                .iter()
                .map(|&x| Sample::unlabeled(vec![x]))
                .collect(),
            1,
        )
        .unwrap();
        let ind = induce_densities(&post, &pooled).unwrap();
        assert_eq!(ind.qhat(), &[0.5, 0.5]);
    }

    #[test]
    fn constant_posterior_reduces_to_z() {
        let post = fixed_posterior(vec![0.3, 0.7]);
        let pooled = Dataset::new(vec![Sample::unlabeled(vec![0.0]), Sample::unlabeled(vec![5.0])], 1).unwrap();
        let ind = induce_densities(&post, &pooled).unwrap();
        assert!((ind.qhat()[0] - 0.3).abs() < 1e-15);
        let s = ind.densities(&[1.0]).unwrap();
        assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let w = mix_weights(&z(&[0.1, 0.9]), &s, 0.0).unwrap();
        assert!((w[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn vanishing_domain_mass() {
        let post = fixed_posterior(vec![1.0, 0.0]);
        let pooled = Dataset::new(vec![Sample::unlabeled(vec![0.0])], 1).unwrap();
        assert!(matches!(induce_densities(&post, &pooled), Err(Error::VanishingDomainMass(1))));
    }

    #[test]
    fn z_prime_examples() {
        let zz = z(&[0.3, 0.7]);
        let zp = map_z_prime(&zz, &[0.5, 0.5]).unwrap();
        assert!((zp[0] - 0.3).abs() < 1e-15);

        let zp = map_z_prime(&z(&[0.5, 0.5]), &[0.2, 0.8]).unwrap();
        assert!((zp[0] - 0.8).abs() < 1e-15 && (zp[1] - 0.2).abs() < 1e-15);

        let zp = map_z_prime(&MixtureWeights::vertex(3, 2), &[0.1, 0.3, 0.6]).unwrap();
        assert_eq!(zp.as_slice(), &[0.0, 0.0, 1.0]);
        assert!(map_z_prime(&zz, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_predict(&constants(&[3.0, 3.0]), &[0.0]).unwrap(), Output::Scalar(3.0));
        assert_eq!(uniform_predict(&constants(&[1.0, 2.0]), &[0.0]).unwrap(), Output::Scalar(1.5));
        let v = uniform_predict(&dists(&[&[0.1, 0.9], &[0.6, 0.4], &[0.5, 0.5]]), &[0.0]).unwrap();
        let s: f64 = v.as_distribution().unwrap().iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_probability_predictor_is_rejected() {
        let hs = dists(&[&[0.5, 0.6]]);
        assert!(hs.outputs(&[0.0]).is_err());
    }

    #[test]
    fn linear_sign_predictor() {
        let h = PredictorSpec::Linear {
            weights: vec![-1.0],
            bias: 0.5,
            sign: true,
        };
        assert_eq!(h.predict(&[0.0]), Output::Scalar(1.0));
        assert_eq!(h.predict(&[0.5]), Output::Scalar(1.0));
        assert_eq!(h.predict(&[1.0]), Output::Scalar(-1.0));
    }
}
