//! Heavy-tailed two-color degree sequences and their scaling constants.

use std::io::{BufRead, Write};

use rand::Rng;
use rand::distr::{weighted::WeightedIndex, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// `a_n = n^{1/(τ-1)} L`, `b_n = n^{(τ-2)/(τ-1)} / L`, `c_n = n^{(τ-3)/(τ-1)} / L²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub n: usize,
    pub tau: f64,
    pub slowly_varying_at_n: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub c_n: f64,
}

pub fn make_scaling(n: usize, tau: f64, l_value: f64) -> Result<ScalingConstants> {
    if !(tau > 3.0 && tau < 4.0) {
        return domain(format!("tau must lie in (3,4), got {tau}"));
    }
    if n == 0 {
        return domain("n must be positive");
    }
    if !(l_value > 0.0 && l_value.is_finite()) {
        return domain(format!("slowly varying value must be positive, got {l_value}"));
    }
    let nf = n as f64;
    let a_n = nf.powf(1.0 / (tau - 1.0)) * l_value;
    let b_n = nf.powf((tau - 2.0) / (tau - 1.0)) / l_value;
    let c_n = nf.powf((tau - 3.0) / (tau - 1.0)) / (l_value * l_value);
    Ok(ScalingConstants {
        n,
        tau,
        slowly_varying_at_n: l_value,
        a_n,
        b_n,
        c_n,
    })
}

/// Hub profile and drift parameters of the limiting thinned Lévy pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitParameters {
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl LimitParameters {
    /// `θ_i = θ_scale · i^{-1/(τ-1)}` and `β_i = β_scale · i^{-ρ/(τ-1)}` for `i ≤ k_max`.
    ///
    /// With `ρ > τ - 2` the profiles satisfy `θ ∈ ℓ³ \ ℓ²`, `β ∈ ℓ²` and `⟨θ,β⟩ < ∞`.
    #[allow(clippy::too_many_arguments)]
    pub fn power_law(
        tau: f64,
        k_max: usize,
        theta_scale: f64,
        beta_scale: f64,
        beta_rho: f64,
        alpha: f64,
        lambda: f64,
        kappa: f64,
        gamma: f64,
    ) -> Result<Self> {
        let e = 1.0 / (tau - 1.0);
        let theta = (1..=k_max).map(|i| theta_scale * (i as f64).powf(-e)).collect();
        let beta = (1..=k_max)
            .map(|i| beta_scale * (i as f64).powf(-e * beta_rho))
            .collect();
        let p = LimitParameters {
            theta,
            beta,
            alpha,
            lambda,
            kappa,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.len() != self.beta.len() {
            return Err(Error::IndexMismatch(self.theta.len(), self.beta.len()));
        }
        if self.theta.iter().any(|&t| !(t > 0.0)) {
            return domain("theta entries must be positive");
        }
        if self.theta.windows(2).any(|w| w[1] > w[0]) {
            return domain("theta must be non-increasing");
        }
        if self.beta.iter().any(|&b| !(b >= 0.0)) {
            return domain("beta entries must be non-negative");
        }
        if !(self.alpha >= 0.0) {
            return domain("alpha must be non-negative");
        }
        if !(self.kappa > 0.0) {
            return domain("kappa must be positive");
        }
        Ok(())
    }

    pub fn k_max(&self) -> usize {
        self.theta.len()
    }

    pub fn theta_power_sum(&self, p: i32) -> f64 {
        self.theta.iter().map(|t| t.powi(p)).sum()
    }

    pub fn theta_beta(&self) -> f64 {
        self.theta.iter().zip(&self.beta).map(|(t, b)| t * b).sum()
    }

    /// Truncated copy keeping the first `k` hubs.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.k_max());
        LimitParameters {
            theta: self.theta[..k].to_vec(),
            beta: self.beta[..k].to_vec(),
            ..self.clone()
        }
    }
}

/// A law on `{start, start+1, ...}` given by a finite probability table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    start: u32,
    probs: Vec<f64>,
}

impl DiscreteLaw {
    pub fn point_mass(k: u32) -> Self {
        DiscreteLaw {
            start: k,
            probs: vec![1.0],
        }
    }

    /// Weights for the values `start, start+1, ...`; normalised internally.
    pub fn from_weights(start: u32, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
            return domain("weights must be non-negative with positive total");
        }
        Ok(DiscreteLaw {
            start,
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// `P(D = k) ∝ k^{-exponent}` on `1..=max`.
    pub fn truncated_zeta(exponent: f64, max: u32) -> Result<Self> {
        if max == 0 {
            return domain("zeta truncation must be at least 1");
        }
        let w: Vec<f64> = (1..=max).map(|k| (k as f64).powf(-exponent)).collect();
        Self::from_weights(1, &w)
    }

    pub fn min_value(&self) -> u32 {
        self.start
    }

    pub fn prob(&self, k: u32) -> f64 {
        if k < self.start {
            return 0.0;
        }
        self.probs.get((k - self.start) as usize).copied().unwrap_or(0.0)
    }

    fn values(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| ((self.start as usize + i) as f64, p))
    }

    pub fn mean(&self) -> f64 {
        self.values().map(|(k, p)| k * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.values().map(|(k, p)| k * k * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }

    pub fn sampler(&self) -> LawSampler<'_> {
        LawSampler {
            law: self,
            index: WeightedIndex::new(&self.probs).expect("validated weights"),
        }
    }
}

pub struct LawSampler<'a> {
    law: &'a DiscreteLaw,
    index: WeightedIndex<f64>,
}

impl LawSampler<'_> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.law.start + self.index.sample(rng) as u32
    }
}

/// White and black degrees of every vertex, in arrangement order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeSequence {
    pub white: Vec<u32>,
    pub black: Vec<u32>,
    pub scaling: ScalingConstants,
    pub limits: LimitParameters,
    /// Number of vertices built from the hub profile (the rest are bulk).
    pub hub_count: usize,
}

impl DegreeSequence {
    /// Wraps explicit degree vectors, sorting them into arrangement order.
    pub fn from_degrees(
        white: Vec<u32>,
        black: Vec<u32>,
        scaling: ScalingConstants,
        limits: LimitParameters,
    ) -> Result<Self> {
        if white.len() != black.len() {
            return Err(Error::IndexMismatch(white.len(), black.len()));
        }
        let mut seq = DegreeSequence {
            white,
            black,
            scaling,
            limits,
            hub_count: 0,
        };
        seq.arrange();
        seq.check_invariants()?;
        Ok(seq)
    }

    /// Degree vectors with unit scaling; convenient for small hand-built graphs.
    pub fn plain(white: Vec<u32>, black: Vec<u32>) -> Result<Self> {
        let n = white.len().max(1);
        let scaling = ScalingConstants {
            n,
            tau: 3.5,
            slowly_varying_at_n: 1.0,
            a_n: 1.0,
            b_n: 1.0,
            c_n: 1.0,
        };
        let limits = LimitParameters {
            theta: vec![],
            beta: vec![],
            alpha: 0.0,
            lambda: 0.0,
            kappa: 1.0,
            gamma: 0.0,
        };
        Self::from_degrees(white, black, scaling, limits)
    }

    pub fn len(&self) -> usize {
        self.white.len()
    }

    pub fn is_empty(&self) -> bool {
        self.white.is_empty()
    }

    pub fn total_white(&self) -> u64 {
        self.white.iter().map(|&d| d as u64).sum()
    }

    pub fn total_black(&self) -> u64 {
        self.black.iter().map(|&d| d as u64).sum()
    }

    fn key(&self, i: usize) -> f64 {
        self.white[i] as f64 / self.scaling.a_n + self.black[i] as f64 / self.scaling.b_n
    }

    /// Stable sort into non-increasing `d^(w)/a_n + d^(b)/b_n`.
    pub fn arrange(&mut self) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&i, &j| self.key(j).total_cmp(&self.key(i)));
        self.white = idx.iter().map(|&i| self.white[i]).collect();
        self.black = idx.iter().map(|&i| self.black[i]).collect();
    }

    pub fn check_invariants(&self) -> Result<()> {
        let w = self.total_white();
        if w % 2 == 1 {
            return Err(Error::Parity {
                color: "white",
                total: w,
            });
        }
        let b = self.total_black();
        if b % 2 == 1 {
            return Err(Error::Parity {
                color: "black",
                total: b,
            });
        }
        if let Some(i) = self.white.iter().position(|&d| d == 0) {
            return Err(Error::Invariant(format!("vertex {i} has white degree 0")));
        }
        if (1..self.len()).any(|i| self.key(i) > self.key(i - 1)) {
            return Err(Error::Invariant("arrangement is not non-increasing".into()));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "white,black")?;
        for (w, b) in self.white.iter().zip(&self.black) {
            writeln!(out, "{w},{b}")?;
        }
        Ok(())
    }
}

/// Reads the `white,black` CSV written by [`DegreeSequence::write_csv`].
pub fn read_degree_csv<R: BufRead>(input: R) -> Result<(Vec<u32>, Vec<u32>)> {
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "white,black" => {}
        _ => return Err(Error::Parse("missing header `white,black`".into())),
    }
    let (mut white, mut black) = (Vec::new(), Vec::new());
    for (no, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut next = || -> Result<u32> {
            parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad row {}: {line}", no + 2)))
        };
        white.push(next()?);
        black.push(next()?);
    }
    Ok((white, black))
}

/// Hubs from the limit profile, i.i.d. bulk from the two laws.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BulkSpec {
    pub white: DiscreteLaw,
    pub black: DiscreteLaw,
}

pub fn build_degree_sequence<R: Rng + ?Sized>(
    scaling: ScalingConstants,
    limits: LimitParameters,
    hub_count: usize,
    bulk: &BulkSpec,
    rng: &mut R,
) -> Result<DegreeSequence> {
    limits.validate()?;
    let n = scaling.n;
    if hub_count > limits.k_max() {
        return domain(format!(
            "hub_count {hub_count} exceeds profile length {}",
            limits.k_max()
        ));
    }
    if hub_count > n {
        return domain("more hubs than vertices");
    }
    if bulk.white.min_value() == 0 {
        return domain("white bulk law must satisfy P(D >= 1) = 1");
    }
    let mut white = Vec::with_capacity(n);
    let mut black = Vec::with_capacity(n);
    for i in 0..hub_count {
        white.push(((limits.theta[i] * scaling.a_n).round() as u32).max(1));
        black.push((limits.beta[i] * scaling.b_n).round() as u32);
    }
    let ws = bulk.white.sampler();
    let bs = bulk.black.sampler();
    for _ in hub_count..n {
        white.push(ws.sample(rng));
        black.push(bs.sample(rng));
    }
    let total_w: u64 = white.iter().map(|&d| d as u64).sum();
    let total_b: u64 = black.iter().map(|&d| d as u64).sum();
    if (total_w % 2 == 1 || total_b % 2 == 1) && hub_count == n {
        return Err(Error::Construction(
            "parity repair needs at least one bulk vertex".into(),
        ));
    }
    if total_w % 2 == 1 {
        white[n - 1] += 1;
    }
    if total_b % 2 == 1 {
        black[n - 1] += 1;
    }
    let mut seq = DegreeSequence {
        white,
        black,
        scaling,
        limits,
        hub_count,
    };
    seq.arrange();
    seq.check_invariants()?;
    Ok(seq)
}

/// `Σ d(d-1) / Σ d` over the white degrees.
pub fn criticality(seq: &DegreeSequence) -> f64 {
    let (s2, s1) = white_sums(&seq.white);
    s2 as f64 / s1 as f64
}

fn white_sums(white: &[u32]) -> (u64, u64) {
    white.iter().fold((0u64, 0u64), |(s2, s1), &d| {
        let d = d as u64;
        (s2 + d * (d.saturating_sub(1)), s1 + d)
    })
}

/// Tolerance reached by [`tune_to_criticality`]: half the effect of the
/// finest move `(2,2) ↔ (1,3)`, i.e. `1 / Σ d^(w)`.
pub fn tuning_tolerance(seq: &DegreeSequence) -> f64 {
    1.0 / seq.total_white() as f64
}

/// Moves bulk white degrees until `ν_n` is within [`tuning_tolerance`] of
/// `1 + λ/c_n`.
///
/// Coarse moves convert a degree-1 bulk vertex into a degree-3 one or back
/// (`Σd` changes by 2, parity is kept); fine moves trade `(2,2) ↔ (1,3)`
/// (`Σd` unchanged).
pub fn tune_to_criticality(seq: &DegreeSequence, lambda_target: f64) -> Result<DegreeSequence> {
    let target = 1.0 + lambda_target / seq.scaling.c_n;
    let mut out = seq.clone();
    let n = out.len();
    let bulk_start = out.hub_count.min(n);
    let (s2, s1) = white_sums(&out.white);
    let (mut s2, mut s1) = (s2 as f64, s1 as f64);
    let excess = |s2: f64, s1: f64| s2 - target * s1;

    let mut by_degree: [Vec<usize>; 4] = Default::default();
    for i in (bulk_start..n).rev() {
        let d = out.white[i] as usize;
        if (1..=3).contains(&d) {
            by_degree[d].push(i);
        }
    }

    let coarse_step = 6.0 - 2.0 * target;
    if coarse_step > 0.0 {
        let wanted = (-excess(s2, s1) / coarse_step).round();
        if wanted > 0.0 {
            for _ in 0..wanted as usize {
                let Some(i) = by_degree[1].pop() else { break };
                out.white[i] = 3;
                by_degree[3].push(i);
                s1 += 2.0;
                s2 += 6.0;
            }
        } else if wanted < 0.0 {
            for _ in 0..(-wanted) as usize {
                let Some(i) = by_degree[3].pop() else { break };
                out.white[i] = 1;
                by_degree[1].push(i);
                s1 -= 2.0;
                s2 -= 6.0;
            }
        }
    }

    while excess(s2, s1) < -1.0 {
        if by_degree[2].len() < 2 {
            break;
        }
        let i = by_degree[2].pop().unwrap();
        let j = by_degree[2].pop().unwrap();
        out.white[i] = 1;
        out.white[j] = 3;
        by_degree[1].push(i);
        by_degree[3].push(j);
        s2 += 2.0;
    }
    while excess(s2, s1) > 1.0 {
        if by_degree[1].is_empty() || by_degree[3].is_empty() {
            break;
        }
        let i = by_degree[1].pop().unwrap();
        let j = by_degree[3].pop().unwrap();
        out.white[i] = 2;
        out.white[j] = 2;
        by_degree[2].push(i);
        by_degree[2].push(j);
        s2 -= 2.0;
    }

    out.arrange();
    out.check_invariants()?;
    let nu = criticality(&out);
    if (nu - target).abs() > tuning_tolerance(&out) * (1.0 + 1e-9) {
        return Err(Error::Construction(format!(
            "criticality target {target} unreachable, stopped at {nu}"
        )));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub k: usize,
    pub mean_white: f64,
    pub second_moment_white: f64,
    pub tail_cubic_white: f64,
    pub tail_square_black: f64,
    pub mixed_moment: f64,
    pub mean_black: f64,
    /// `(ν_n - 1) c_n`, the realised criticality location.
    pub lambda_n: f64,
    pub flags: Vec<String>,
}

/// Empirical degree moments against the configured limit targets. Drift beyond
/// `tolerance` (relative, or absolute for targets near zero) is flagged.
pub fn validate_assumptions(seq: &DegreeSequence, k: usize, tolerance: f64) -> AssumptionReport {
    let n = seq.len().max(1) as f64;
    let s = &seq.scaling;
    let k = k.min(seq.len());
    let mean_white = seq.white.iter().map(|&d| d as f64).sum::<f64>() / n;
    let second_moment_white = seq.white.iter().map(|&d| (d as f64).powi(2)).sum::<f64>() / n;
    let tail_cubic_white =
        seq.white[k..].iter().map(|&d| (d as f64).powi(3)).sum::<f64>() / s.a_n.powi(3);
    let tail_square_black =
        seq.black[k..].iter().map(|&d| (d as f64).powi(2)).sum::<f64>() / s.b_n.powi(2);
    let mixed_moment = seq
        .white
        .iter()
        .zip(&seq.black)
        .map(|(&w, &b)| w as f64 * b as f64)
        .sum::<f64>()
        / n;
    let mean_black = seq.black.iter().map(|&d| d as f64).sum::<f64>() / n;
    let lambda_n = if seq.total_white() > 0 {
        (criticality(seq) - 1.0) * s.c_n
    } else {
        f64::NAN
    };

    let lim = &seq.limits;
    let mut flags = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        let scale = want.abs().max(1.0);
        if (got - want).abs() > tolerance * scale {
            flags.push(format!("{name}: empirical {got:.6} vs target {want:.6}"));
        }
    };
    check("mean white degree", mean_white, lim.kappa);
    check(
        "mixed moment",
        mixed_moment,
        lim.theta_beta() + lim.alpha * lim.kappa,
    );
    check("mean black degree", mean_black, lim.gamma);
    check("criticality location", lambda_n, lim.lambda);

    AssumptionReport {
        k,
        mean_white,
        second_moment_white,
        tail_cubic_white,
        tail_square_black,
        mixed_moment,
        mean_black,
        lambda_n,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn scaling_at_n_one_is_unity() {
        let s = make_scaling(1, 3.5, 1.0).unwrap();
        assert_eq!((s.a_n, s.b_n, s.c_n), (1.0, 1.0, 1.0));
    }

    #[test]
    fn scaling_exponents() {
        let s = make_scaling(10_000, 3.5, 1.0).unwrap();
        assert!(rel(s.a_n, 10f64.powf(8.0 / 5.0)) < 1e-12);
        assert!(rel(s.b_n, 10f64.powf(12.0 / 5.0)) < 1e-12);
        assert!(rel(s.c_n, 10f64.powf(4.0 / 5.0)) < 1e-12);
        assert!(rel(s.a_n * s.b_n, 1e4) < 1e-12);

        let s = make_scaling(1_000_000, 3.2, 2.0).unwrap();
        assert!(rel(s.c_n, 10f64.powf(6.0 * 0.2 / 2.2) / 4.0) < 1e-12);
    }

    #[test]
    fn scaling_rejects_tau_outside_window() {
        assert!(matches!(make_scaling(10, 3.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(make_scaling(10, 4.2, 1.0), Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn scaling_product_identities(n in 1usize..10_000_000, tau in 3.001f64..3.999, l in 0.1f64..10.0) {
            let s = make_scaling(n, tau, l).unwrap();
            let nf = n as f64;
            prop_assert!(rel(s.a_n * s.b_n, nf) < 1e-12);
            prop_assert!(rel(s.b_n * s.b_n, nf * s.c_n) < 1e-12);
            prop_assert!(rel(s.a_n / s.b_n, 1.0 / s.c_n) < 1e-12);
        }
    }

    fn two_law() -> BulkSpec {
        BulkSpec {
            white: DiscreteLaw::point_mass(2),
            black: DiscreteLaw::point_mass(0),
        }
    }

    #[test]
    fn degree_two_bulk_is_exactly_critical() {
        let scaling = make_scaling(500, 3.5, 1.0).unwrap();
        let limits = LimitParameters::power_law(3.5, 4, 1.0, 0.0, 2.0, 0.0, 0.0, 2.0, 0.0).unwrap();
        let seq = build_degree_sequence(scaling, limits, 0, &two_law(), &mut rng_from_seed(1)).unwrap();
        assert!(seq.white.iter().all(|&d| d == 2));
        assert!(seq.black.iter().all(|&d| d == 0));
        assert_eq!(criticality(&seq), 1.0);
        let tuned = tune_to_criticality(&seq, 0.0).unwrap();
        assert_eq!(tuned.white, seq.white);
    }

    #[test]
    fn hubs_round_profile_times_a_n() {
        // a_n = (10^5)^{0.4} = 100
        let scaling = make_scaling(100_000, 3.5, 1.0).unwrap();
        assert!((scaling.a_n - 100.0).abs() < 1e-9);
        let limits = LimitParameters {
            theta: vec![1.0, 0.5],
            beta: vec![0.0, 0.0],
            alpha: 0.0,
            lambda: 0.0,
            kappa: 1.0,
            gamma: 0.0,
        };
        let bulk = BulkSpec {
            white: DiscreteLaw::point_mass(1),
            black: DiscreteLaw::point_mass(0),
        };
        let seq = build_degree_sequence(scaling, limits, 2, &bulk, &mut rng_from_seed(2)).unwrap();
        assert_eq!(&seq.white[..3], &[100, 50, 1]);
    }

    #[test]
    fn zeta_bulk_mean_matches_closed_form() {
        let scaling = make_scaling(10_000, 3.5, 1.0).unwrap();
        let law = DiscreteLaw::truncated_zeta(3.5, 50).unwrap();
        let weights: Vec<f64> = (1..=50).map(|k| (k as f64).powf(-3.5)).collect();
        let z: f64 = weights.iter().sum();
        let kappa: f64 = weights.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum::<f64>() / z;
        assert!((law.mean() - kappa).abs() < 1e-12);
        let limits = LimitParameters::power_law(3.5, 1, 1.0, 0.0, 2.0, 0.0, 0.0, kappa, 0.0).unwrap();
        let bulk = BulkSpec {
            white: law.clone(),
            black: DiscreteLaw::point_mass(0),
        };
        let seq = build_degree_sequence(scaling, limits, 0, &bulk, &mut rng_from_seed(3)).unwrap();
        let mean = seq.total_white() as f64 / seq.len() as f64;
        let se = (law.variance() / seq.len() as f64).sqrt();
        // parity repair can add at most one unit
        assert!((mean - kappa).abs() <= 3.0 * se + 1.0 / seq.len() as f64);
    }

    #[test]
    fn parity_repair_requires_bulk() {
        let scaling = make_scaling(1, 3.5, 1.0).unwrap();
        let limits = LimitParameters {
            theta: vec![3.0],
            beta: vec![0.0],
            alpha: 0.0,
            lambda: 0.0,
            kappa: 1.0,
            gamma: 0.0,
        };
        let err = build_degree_sequence(scaling, limits, 1, &two_law(), &mut rng_from_seed(4));
        assert!(matches!(err, Err(Error::Construction(_))));
    }

    #[test]
    fn criticality_hand_values() {
        let s = |w: Vec<u32>| DegreeSequence::plain(w.clone(), vec![0; w.len()]).unwrap();
        assert_eq!(criticality(&s(vec![2, 2, 2, 2])), 1.0);
        assert_eq!(criticality(&s(vec![3, 1, 1, 1])), 1.0);
        assert_eq!(criticality(&s(vec![4, 2, 2, 2, 1, 1])), 1.5);
    }

    #[test]
    fn tuning_reaches_window_on_zeta_bulk() {
        let scaling = make_scaling(10_000, 3.5, 1.0).unwrap();
        let limits = LimitParameters::power_law(3.5, 1, 1.0, 0.0, 2.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let bulk = BulkSpec {
            white: DiscreteLaw::truncated_zeta(3.5, 40).unwrap(),
            black: DiscreteLaw::from_weights(0, &[0.4, 0.3, 0.2, 0.1]).unwrap(),
        };
        let seq = build_degree_sequence(scaling, limits, 0, &bulk, &mut rng_from_seed(5)).unwrap();
        let tuned = tune_to_criticality(&seq, 1.0).unwrap();
        let target = 1.0 + 1.0 / scaling.c_n;
        assert!((criticality(&tuned) - target).abs() <= tuning_tolerance(&tuned));
        assert_eq!(tuned.total_white() % 2, 0);
        tuned.check_invariants().unwrap();
    }

    #[test]
    fn tuning_fails_without_movable_vertices() {
        let seq = DegreeSequence::plain(vec![4, 4], vec![0, 0]).unwrap();
        assert!(matches!(
            tune_to_criticality(&seq, 0.0),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn assumption_report_hand_values() {
        let seq = DegreeSequence::plain(vec![2; 6], vec![0; 6]).unwrap();
        let r = validate_assumptions(&seq, 6, 0.1);
        assert_eq!(
            (r.mean_white, r.second_moment_white, r.tail_cubic_white, r.tail_square_black, r.mixed_moment, r.mean_black),
            (2.0, 4.0, 0.0, 0.0, 0.0, 0.0)
        );

        let seq = DegreeSequence::plain(vec![2, 2], vec![4, 2]).unwrap();
        let r = validate_assumptions(&seq, 0, 0.1);
        assert_eq!(r.mean_black, 3.0);
        assert_eq!(r.mixed_moment, 6.0);

        let scaling = make_scaling(1, 3.5, 1.0).unwrap();
        let limits = LimitParameters {
            theta: vec![1.0],
            beta: vec![1.0],
            alpha: 0.0,
            lambda: 0.0,
            kappa: 2.0,
            gamma: 2.0,
        };
        let seq = DegreeSequence::from_degrees(vec![2], vec![2], scaling, limits).unwrap();
        let r = validate_assumptions(&seq, 0, 0.1);
        assert_eq!(
            (r.mean_white, r.second_moment_white, r.tail_cubic_white, r.tail_square_black, r.mixed_moment, r.mean_black),
            (2.0, 4.0, 8.0, 4.0, 4.0, 2.0)
        );
    }

    #[test]
    fn assumption_report_flags_drift() {
        let seq = DegreeSequence::plain(vec![2; 4], vec![0; 4]).unwrap();
        // plain() targets kappa = 1, far from the realised mean 2
        let r = validate_assumptions(&seq, 0, 0.05);
        assert!(r.flags.iter().any(|f| f.starts_with("mean white")));
    }

    #[test]
    fn csv_round_trip() {
        let seq = DegreeSequence::plain(vec![3, 2, 1], vec![1, 0, 1]).unwrap();
        let mut buf = Vec::new();
        seq.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"white,black\n"));
        let (w, b) = read_degree_csv(buf.as_slice()).unwrap();
        assert_eq!((w, b), (seq.white.clone(), seq.black.clone()));
    }

    proptest! {
        #[test]
        fn built_sequences_satisfy_invariants(seed in any::<u64>(), n in 2usize..400, hubs in 0usize..5, lambda in -3.0f64..3.0) {
            let scaling = make_scaling(n, 3.5, 1.0).unwrap();
            let limits = LimitParameters::power_law(3.5, 5, 1.0, 0.5, 2.0, 0.5, lambda, 1.8, 1.0).unwrap();
            let bulk = BulkSpec {
                white: DiscreteLaw::from_weights(1, &[0.3, 0.6, 0.1]).unwrap(),
                black: DiscreteLaw::from_weights(0, &[0.25, 0.25, 0.25, 0.25]).unwrap(),
            };
            let hubs = hubs.min(n - 1);
            let seq = build_degree_sequence(scaling, limits, hubs, &bulk, &mut rng_from_seed(seed)).unwrap();
            prop_assert!(seq.check_invariants().is_ok());
            if let Ok(t) = tune_to_criticality(&seq, lambda) {
                prop_assert!(t.check_invariants().is_ok());
                prop_assert_eq!(t.total_white() % 2, 0);
            }
        }
    }
}
