//! Small numerical helpers shared across modules.

/// Floor applied to probabilities and densities before they enter ratios.
pub const PROB_FLOOR: f64 = 1e-300;

/// `log Σ exp(v_i)`, stabilized by subtracting the maximum.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    let s: f64 = v.iter().map(|x| (x - max).exp()).sum();
    max + s.ln()
}

/// Softmax of `logits` with entries floored at [`PROB_FLOOR`].
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = out.iter().sum();
    for v in &mut out {
        *v = (*v / z).max(PROB_FLOOR);
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
