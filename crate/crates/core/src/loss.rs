//! Loss models and empirical risk.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_LOSS_BOUND: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossModel {
    Regression,
    Probability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    model: LossModel,
    kind: LossKind,
    bound: f64,
}

impl LossSpec {
    pub fn new(model: LossModel, kind: LossKind, bound: f64) -> Result<Self> {
        match (model, kind) {
            (LossModel::Regression, LossKind::Squared)
            | (LossModel::Probability, LossKind::CrossEntropy) => {}
            _ => return Err(invalid(format!("{kind:?} loss is not defined for the {model:?} model"))),
        }
        if !(bound > 0.0) {
            return Err(invalid("loss bound M must be positive"));
        }
        Ok(Self { model, kind, bound })
    }

    pub fn squared() -> Self {
        Self {
            model: LossModel::Regression,
            kind: LossKind::Squared,
            bound: DEFAULT_LOSS_BOUND,
        }
    }

    pub fn cross_entropy() -> Self {
        Self {
            model: LossModel::Probability,
            kind: LossKind::CrossEntropy,
            bound: DEFAULT_LOSS_BOUND,
        }
    }

    pub fn with_bound(self, bound: f64) -> Result<Self> {
        Self::new(self.model, self.kind, bound)
    }

    pub fn model(&self) -> LossModel {
        self.model
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

/// A predictor output: a real score (regression) or a distribution over
/// labels (probability model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Output {
    Scalar(f64),
    Distribution(Vec<f64>),
}

impl Output {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Output::Scalar(v) => Some(*v),
            Output::Distribution(_) => None,
        }
    }

    pub fn as_distribution(&self) -> Option<&[f64]> {
        match self {
            Output::Distribution(v) => Some(v),
            Output::Scalar(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// Set when the raw loss exceeded M (including the infinite log-loss of
    /// a zero probability at the true label).
    pub clamped: bool,
}

pub fn point_loss(spec: &LossSpec, prediction: &Output, label: f64) -> Result<LossValue> {
    let raw = match (spec.kind, prediction) {
        (LossKind::Squared, Output::Scalar(h)) => (h - label) * (h - label),
        (LossKind::CrossEntropy, Output::Distribution(dist)) => {
            if label < 0.0 || label.fract() != 0.0 {
                return Err(invalid(format!("class label {label} is not an index")));
            }
            let prob = *dist.get(label as usize).ok_or_else(|| {
                invalid(format!("class {label} outside a {}-class prediction", dist.len()))
            })?;
            if !(0.0..=1.0 + 1e-12).contains(&prob) {
                return Err(invalid(format!("probability {prob} outside [0, 1]")));
            }
            -prob.ln()
        }
        (kind, _) => return Err(invalid(format!("prediction shape does not match {kind:?} loss"))),
    };
    if raw.is_nan() {
        return Err(Error::NonFinite("loss".into()));
    }
    // -ln(1 + tiny) can be a hair below zero.
    let raw = raw.max(0.0);
    if raw > spec.bound {
        Ok(LossValue { value: spec.bound, clamped: true })
    } else {
        Ok(LossValue { value: raw, clamped: false })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSummary {
    pub mean: f64,
    pub clamp_events: usize,
}

/// Mean point loss over a labeled dataset, summed left to right.
pub fn empirical_loss<F>(dataset: &Dataset, predictor: F, spec: &LossSpec) -> Result<LossSummary>
where
    F: Fn(&[f64]) -> Output,
{
    if dataset.is_empty() {
        return Err(Error::NoSamples);
    }
    dataset.require_labels()?;
    let mut total = 0.0;
    let mut clamp_events = 0;
    for s in dataset {
        let lv = point_loss(spec, &predictor(&s.x), s.y.unwrap_or_default())?;
        total += lv.value;
        clamp_events += usize::from(lv.clamped);
    }
    Ok(LossSummary {
        mean: total / dataset.len() as f64,
        clamp_events,
    })
}
