//! Points on the probability simplex.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const SUM_TOL: f64 = 1e-12;

/// A point `z` on the p-simplex: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixtureWeights(Vec<f64>);

impl MixtureWeights {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(invalid("mixture weights need at least one entry"));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mixture weight".into()));
        }
        if z.iter().any(|&v| v < 0.0) {
            return Err(invalid("mixture weights must be nonnegative"));
        }
        let sum: f64 = z.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(invalid(format!("mixture weights sum to {sum}, not 1")));
        }
        Ok(Self(z))
    }

    pub fn uniform(p: usize) -> Self {
        Self(vec![1.0 / p as f64; p])
    }

    pub fn vertex(p: usize, k: usize) -> Self {
        let mut z = vec![0.0; p];
        z[k] = 1.0;
        Self(z)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for MixtureWeights {
    type Error = Error;

    fn try_from(z: Vec<f64>) -> Result<Self> {
        Self::new(z)
    }
}

impl From<MixtureWeights> for Vec<f64> {
    fn from(z: MixtureWeights) -> Self {
        z.0
    }
}

impl std::ops::Index<usize> for MixtureWeights {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Euclidean projection onto the simplex (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Result<MixtureWeights> {
    if v.is_empty() {
        return Err(invalid("cannot project an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("projection input".into()));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut z: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // Renormalize away the rounding left by the threshold.
    let sum: f64 = z.iter().sum();
    if (sum - 1.0).abs() > 0.0 {
        for zi in &mut z {
            *zi /= sum;
        }
    }
    MixtureWeights::new(z)
}

/// Number of lattice points `{z : z_k = n_k / resolution}` on the p-simplex,
/// i.e. C(resolution + p - 1, p - 1). Saturates at `u128::MAX`.
pub fn lattice_size(resolution: usize, p: usize) -> u128 {
    if p == 0 {
        return 0;
    }
    let n = (resolution + p - 1) as u128;
    let k = (p - 1).min(resolution) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Simplex lattice points in lexicographic order of their counts `n_k`.
pub fn lattice_points(resolution: usize, p: usize) -> Vec<MixtureWeights> {
    fn rec(remaining: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for n in 0..=remaining {
            prefix.push(n);
            rec(remaining - n, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    if p == 0 || resolution == 0 {
        return Vec::new();
    }
    let mut counts = Vec::new();
    rec(resolution, p, &mut Vec::with_capacity(p), &mut counts);
    let r = resolution as f64;
    counts
        .into_iter()
        .map(|c| {
            let mut z: Vec<f64> = c.iter().map(|&n| n as f64 / r).collect();
            // Put the rounding residue on the largest entry so the sum is 1.
            let sum: f64 = z.iter().sum();
            let imax = (0..p).max_by(|&a, &b| z[a].total_cmp(&z[b])).unwrap_or(0);
            z[imax] += 1.0 - sum;
            MixtureWeights(z)
        })
        .collect()
}
