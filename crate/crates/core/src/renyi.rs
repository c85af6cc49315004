//! Rényi divergences between finite distributions, the Rényi triangle
//! inequality, and evaluators for the adaptation bounds built on them.
//!
//! `D_α(P‖Q) = 1/(α-1) · log Σ_i P_i^α Q_i^(1-α)` with the limiting forms
//! at α ∈ {0, 1, ∞}. `d_α = exp(D_α)`. Infinite divergences are returned
//! as `f64::INFINITY`, never NaN.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::log_sum_exp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteDistribution(Vec<f64>);

impl FiniteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("distribution needs a nonempty support"));
        }
        if probs.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("probabilities must be finite and nonnegative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(invalid("weights sum to zero"));
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    /// Histogram of 1-D samples over a shared binning. Values outside the
    /// binning range fall into the first or last bin.
    pub fn histogram(samples: &[f64], binning: &Binning) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoSamples);
        }
        let mut counts = vec![0.0; binning.num_bins()];
        for &x in samples {
            counts[binning.bin_of(x)] += 1.0;
        }
        Self::from_weights(&counts)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for FiniteDistribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FiniteDistribution> for Vec<f64> {
    fn from(d: FiniteDistribution) -> Self {
        d.0
    }
}

/// Increasing bin edges; `edges.len() - 1` bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    edges: Vec<f64>,
}

impl Binning {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(invalid("binning needs at least two edges"));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("bin edges must be strictly increasing"));
        }
        Ok(Self { edges })
    }

    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(lo < hi) {
            return Err(invalid("uniform binning needs lo < hi and bins ≥ 1"));
        }
        let w = (hi - lo) / bins as f64;
        Self::new((0..=bins).map(|i| lo + w * i as f64).collect())
    }

    pub fn num_bins(&self) -> usize {
        self.edges.len() - 1
    }

    fn bin_of(&self, x: f64) -> usize {
        let idx = self.edges.partition_point(|&e| e <= x);
        idx.saturating_sub(1).min(self.num_bins() - 1)
    }
}

fn check_pair(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(())
}

/// `D_α(P‖Q)` for α ∈ [0, ∞]; pass `f64::INFINITY` for α = ∞.
pub fn renyi_d(p: &FiniteDistribution, q: &FiniteDistribution, alpha: f64) -> Result<f64> {
    check_pair(p, q)?;
    if alpha.is_nan() || alpha < 0.0 {
        return Err(invalid(format!("order α = {alpha} must be ≥ 0")));
    }
    let pairs = || p.0.iter().zip(&q.0).filter(|(&pi, _)| pi > 0.0);

    if alpha == 0.0 {
        let mass: f64 = pairs().map(|(_, &qi)| qi).sum();
        return Ok(if mass > 0.0 { (-mass.ln()).max(0.0) } else { f64::INFINITY });
    }
    if alpha.is_infinite() {
        let mut worst = f64::NEG_INFINITY;
        for (&pi, &qi) in pairs() {
            if qi == 0.0 {
                return Ok(f64::INFINITY);
            }
            worst = worst.max(pi.ln() - qi.ln());
        }
        return Ok(worst);
    }
    if alpha == 1.0 {
        let mut kl = 0.0;
        for (&pi, &qi) in pairs() {
            if qi == 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += pi * (pi.ln() - qi.ln());
        }
        return Ok(kl);
    }
    // log Σ exp(α log P_i + (1-α) log Q_i) over the support of P.
    let mut terms = Vec::with_capacity(p.len());
    for (&pi, &qi) in pairs() {
        if qi == 0.0 {
            if alpha > 1.0 {
                return Ok(f64::INFINITY);
            }
            // Q_i^(1-α) = 0 for α < 1.
            continue;
        }
        terms.push(alpha * pi.ln() + (1.0 - alpha) * qi.ln());
    }
    if terms.is_empty() {
        // Disjoint supports with α < 1.
        return Ok(f64::INFINITY);
    }
    Ok(log_sum_exp(&terms) / (alpha - 1.0))
}

/// `d_α(P‖Q) = exp(D_α(P‖Q))`.
pub fn renyi_exp(p: &FiniteDistribution, q: &FiniteDistribution, alpha: f64) -> Result<f64> {
    renyi_d(p, q, alpha).map(f64::exp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleSlack {
    /// `RHS - LHS`; `+∞` when a divergence is infinite.
    pub slack: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub infinite: bool,
}

/// Checks `d_α(P‖Q)^(α-1) ≤ d_{α/γ}(P‖R)^(α-γ) · d_{(α-γ)/(1-γ)}(R‖Q)^(α-1)`.
pub fn triangle_slack(
    p: &FiniteDistribution,
    q: &FiniteDistribution,
    r: &FiniteDistribution,
    alpha: f64,
    gamma: f64,
) -> Result<TriangleSlack> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("γ = {gamma} must lie in (0, 1)")));
    }
    if !(alpha > gamma) || alpha.is_infinite() {
        return Err(invalid(format!("α = {alpha} must be finite and exceed γ = {gamma}")));
    }
    let d_pq = renyi_d(p, q, alpha)?;
    let d_pr = renyi_d(p, r, alpha / gamma)?;
    let d_rq = renyi_d(r, q, (alpha - gamma) / (1.0 - gamma))?;
    if d_pq.is_infinite() || d_pr.is_infinite() || d_rq.is_infinite() {
        return Ok(TriangleSlack {
            slack: f64::INFINITY,
            lhs: f64::NAN,
            rhs: f64::NAN,
            infinite: true,
        });
    }
    let lhs = ((alpha - 1.0) * d_pq).exp();
    let rhs = ((alpha - gamma) * d_pr + (alpha - 1.0) * d_rq).exp();
    Ok(TriangleSlack {
        slack: rhs - lhs,
        lhs,
        rhs,
        infinite: false,
    })
}

/// Inputs of the distribution-weighted bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Per-source accuracy ε.
    pub epsilon: f64,
    /// Slack δ.
    pub delta: f64,
    /// Order α > 1; `f64::INFINITY` selects the α → ∞ limit.
    pub alpha: f64,
    /// Loss bound M.
    pub loss_bound: f64,
    /// `max_k d_α(D̂_k ‖ D_k)`.
    pub d_hat: f64,
    /// `max_k d_{2α-1}(D_k ‖ D̂_k)`.
    pub d_hat_prime: f64,
    /// `d_α(D_T ‖ 𝒟̂)` (used by the estimate-relative bound).
    pub d_target: f64,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) {
            return Err(invalid("α must exceed 1"));
        }
        if !(self.epsilon >= 0.0) || !(self.loss_bound >= 0.0) || !(self.delta >= 0.0) {
            return Err(invalid("ε, δ and M must be nonnegative"));
        }
        for (name, v) in [
            ("d̂", self.d_hat),
            ("d̂′", self.d_hat_prime),
            ("d_α(D_T‖𝒟̂)", self.d_target),
        ] {
            if !(v >= 1.0 - 1e-12) {
                return Err(invalid(format!("divergence factor {name} = {v} is below 1")));
            }
        }
        Ok(())
    }

    /// `((α-1)/α, 1/α)`, with the α = ∞ limit `(1, 0)`.
    fn exponents(&self) -> (f64, f64) {
        if self.alpha.is_infinite() {
            (1.0, 0.0)
        } else {
            ((self.alpha - 1.0) / self.alpha, 1.0 / self.alpha)
        }
    }

    /// `ε̂ = [ε d̂]^((α-1)/α) M^(1/α)`.
    pub fn epsilon_hat(&self) -> f64 {
        let (a, b) = self.exponents();
        (self.epsilon * self.d_hat).powf(a) * self.loss_bound.powf(b)
    }
}

/// `[(ε̂ + δ) d_α(D_T ‖ 𝒟̂)]^((α-1)/α) M^(1/α)`: the guarantee of the
/// distribution-weighted combiner relative to the estimated mixture family,
/// shared by the generative and discriminative solutions.
pub fn bound_estimate_family(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let (a, b) = inputs.exponents();
    Ok(((inputs.epsilon_hat() + inputs.delta) * inputs.d_target).powf(a) * inputs.loss_bound.powf(b))
}

/// `[(ε̂ + δ) d̂′]^((α-1)/α) [d_{2α}(D_T ‖ 𝒟)]^((2α-1)/(2α)) M^(1/α)`: the
/// guarantee relative to the true mixture family.
pub fn bound_true_family(inputs: &BoundInputs, d_2alpha_target: f64) -> Result<f64> {
    inputs.validate()?;
    if !(d_2alpha_target >= 1.0 - 1e-12) {
        return Err(invalid("d_2α(D_T‖𝒟) must be ≥ 1"));
    }
    let (a, b) = inputs.exponents();
    let c = if inputs.alpha.is_infinite() {
        1.0
    } else {
        (2.0 * inputs.alpha - 1.0) / (2.0 * inputs.alpha)
    };
    Ok(((inputs.epsilon_hat() + inputs.delta) * inputs.d_hat_prime).powf(a)
        * d_2alpha_target.powf(c)
        * inputs.loss_bound.powf(b))
}

/// Finite-sample bounds for the two estimator families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleSizeBound {
    /// Discriminative solution with a conditional Maxent posterior.
    Dmsa {
        epsilon: f64,
        p: usize,
        /// Feature-map norm bound r.
        r: f64,
        mu: f64,
        m: usize,
        delta: f64,
        d_star: f64,
        d_prime_star: f64,
    },
    /// Generative solution with Gaussian KDE.
    Gmsa {
        epsilon: f64,
        p: usize,
        kappa: f64,
        m: usize,
        delta: f64,
        loss_bound: f64,
        d_star: f64,
        d_prime_star: f64,
    },
}

pub fn bound_sample_size(bound: &SampleSizeBound) -> Result<f64> {
    match *bound {
        SampleSizeBound::Dmsa {
            epsilon,
            p,
            r,
            mu,
            m,
            delta,
            d_star,
            d_prime_star,
        } => {
            if m == 0 {
                return Err(invalid("sample size m must be positive"));
            }
            if !(mu > 0.0) {
                return Err(invalid("regularization μ must be positive"));
            }
            check_confidence(delta)?;
            let exponent =
                6.0 * 2f64.sqrt() * r * r / (mu * (m as f64).sqrt()) * (1.0 + (1.0 / delta).ln().sqrt());
            Ok(epsilon * p as f64 * exponent.exp() * d_star * d_prime_star)
        }
        SampleSizeBound::Gmsa {
            epsilon,
            p,
            kappa,
            m,
            delta,
            loss_bound,
            d_star,
            d_prime_star,
        } => {
            if m == 0 || p == 0 {
                return Err(invalid("sample size m and domain count p must be positive"));
            }
            check_confidence(delta)?;
            let per_domain = m as f64 / p as f64;
            let exponent =
                6.0 * kappa / (2.0 * per_domain).sqrt() * ((p as f64).ln() + (1.0 / delta).ln()).sqrt();
            Ok(epsilon.powf(0.25) * loss_bound.powf(0.75) * exponent.exp() * d_star * d_prime_star)
        }
    }
}

fn check_confidence(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("confidence δ = {delta} must lie in (0, 1]")));
    }
    Ok(())
}
