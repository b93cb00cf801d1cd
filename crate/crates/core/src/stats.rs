//! Norms, orderings and the two-sample Kolmogorov–Smirnov test.

use crate::error::{domain, Error, Result};

/// Non-increasing, non-negative values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OrderedVector {
    values: Vec<f64>,
}

impl OrderedVector {
    /// Sorts into non-increasing order; rejects negative or non-finite entries.
    pub fn ord(mut values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return domain(format!("ordered vectors hold finite non-negative values, got {v}"));
        }
        values.sort_unstable_by(|a, b| b.total_cmp(a));
        Ok(OrderedVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry `j` (0-based), zero past the end.
    pub fn get(&self, j: usize) -> f64 {
        self.values.get(j).copied().unwrap_or(0.0)
    }

    pub fn top(&self, j: usize) -> &[f64] {
        &self.values[..j.min(self.values.len())]
    }

    /// `Σ_{k ≥ j} x_k²` (0-based), the squared mass left after the first `j`.
    pub fn tail_sq_mass(&self, j: usize) -> f64 {
        self.values.iter().skip(j).map(|x| x * x).sum()
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(Σ (x_i² + y_i²))^{1/2}`.
pub fn l22_norm(w: &[(f64, f64)]) -> f64 {
    w.iter().map(|(x, y)| x * x + y * y).sum::<f64>().sqrt()
}

/// Every block of `fine` lies inside a single block of `coarse`.
/// Both are block labels per element.
pub fn is_refinement(fine: &[u32], coarse: &[u32]) -> bool {
    if fine.len() != coarse.len() {
        return false;
    }
    let mut image = std::collections::HashMap::new();
    fine.iter()
        .zip(coarse)
        .all(|(f, c)| *image.entry(*f).or_insert(*c) == *c)
}

/// Block sizes of a labelling, largest first.
pub fn block_sizes(labels: &[u32]) -> Vec<u64> {
    let mut count = std::collections::HashMap::new();
    for &l in labels {
        *count.entry(l).or_insert(0u64) += 1;
    }
    let mut out: Vec<u64> = count.into_values().collect();
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len().max(1) as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn standard_error(x: &[f64]) -> f64 {
    (variance(x) / x.len().max(1) as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sample KS statistic `sup |F_a - F_b|` with the asymptotic p-value
/// (with the usual small-sample correction of the effective size).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return domain("samples contain NaN");
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        // step past every copy of v on both sides so ties are handled correctly
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d),
    })
}
