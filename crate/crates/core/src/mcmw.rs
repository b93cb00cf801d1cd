//! Multiplicative coalescent with mass and weight.
//!
//! Blocks `i` and `j` merge at rate `y_i y_j`; on merging masses and weights
//! add. At a fixed time `t` the state is the component structure of the
//! graph containing `{i, j}` iff `ξ_ij ≤ y_i y_j t`, where the `ξ_ij` are
//! independent rate-one exponentials. Clocks are drawn pair by pair in the
//! fixed order `(0,1), (0,2), …, (0,n-1), (1,2), …`, so two runs from the same
//! seed share their clocks (the ξ-coupling).

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::graph::DisjointSets;
use crate::rng::{replicate, rng_from_seed};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassWeightVector<S> {
    pub mass: Vec<S>,
    pub weight: Vec<S>,
}

impl<S: Scalar> MassWeightVector<S> {
    pub fn new(mass: Vec<S>, weight: Vec<S>) -> Result<Self> {
        if mass.len() != weight.len() {
            return Err(Error::IndexMismatch(mass.len(), weight.len()));
        }
        if mass.iter().chain(&weight).any(|v| *v < S::zero()) {
            return domain("masses and weights must be non-negative");
        }
        Ok(MassWeightVector { mass, weight })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// `Σ (x_i² + y_i²)`, the squared `ℓ^{2,2}` norm.
    pub fn l22_norm_sq(&self) -> S {
        self.mass
            .iter()
            .chain(&self.weight)
            .fold(S::zero(), |acc, v| acc + v.clone() * v.clone())
    }

    /// Entry-wise sum `(x + x', y + y')`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::IndexMismatch(self.len(), other.len()));
        }
        let zip = |a: &[S], b: &[S]| a.iter().zip(b).map(|(p, q)| p.clone() + q.clone()).collect();
        Ok(MassWeightVector {
            mass: zip(&self.mass, &other.mass),
            weight: zip(&self.weight, &other.weight),
        })
    }
}

/// Blocks over an initial index set with accumulated mass and weight.
#[derive(Clone, Debug)]
pub struct BlockSystem<S> {
    sets: DisjointSets,
    mass: Vec<S>,
    weight: Vec<S>,
    initial_mass: S,
    initial_weight: S,
    /// Index pairs whose edge caused a merge, in order.
    pub merges: Vec<(u32, u32)>,
}

impl<S: Scalar> BlockSystem<S> {
    pub fn new(v: &MassWeightVector<S>) -> Self {
        let sum = |x: &[S]| x.iter().fold(S::zero(), |a, b| a + b.clone());
        BlockSystem {
            sets: DisjointSets::new(v.len()),
            mass: v.mass.clone(),
            weight: v.weight.clone(),
            initial_mass: sum(&v.mass),
            initial_weight: sum(&v.weight),
            merges: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn root(&mut self, i: u32) -> u32 {
        self.sets.find(i)
    }

    /// Joins the blocks of `i` and `j`; returns false if already one block.
    pub fn merge(&mut self, i: u32, j: u32) -> bool {
        let (ri, rj) = (self.sets.find(i), self.sets.find(j));
        match self.sets.union(ri, rj) {
            None => false,
            Some(root) => {
                let other = if root == ri { rj } else { ri };
                let (m, w) = (self.mass[other as usize].clone(), self.weight[other as usize].clone());
                self.mass[root as usize] = self.mass[root as usize].clone() + m;
                self.weight[root as usize] = self.weight[root as usize].clone() + w;
                self.merges.push((i, j));
                true
            }
        }
    }

    /// `(mass, weight)` per block, listed by smallest member index.
    pub fn blocks(&mut self) -> Vec<(S, S)> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for i in 0..self.len() as u32 {
            let r = self.sets.find(i) as usize;
            if !seen[r] {
                seen[r] = true;
                out.push((self.mass[r].clone(), self.weight[r].clone()));
            }
        }
        out
    }

    /// Block masses in non-increasing order.
    pub fn ordered_masses(&mut self) -> Vec<S> {
        ord(self.blocks().into_iter().map(|b| b.0).collect())
    }

    /// Block index (smallest member order) of every initial index.
    pub fn labels(&mut self) -> Vec<u32> {
        let mut label = vec![u32::MAX; self.len()];
        let mut next = 0;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.len() as u32 {
            let r = self.sets.find(i) as usize;
            if label[r] == u32::MAX {
                label[r] = next;
                next += 1;
            }
            out.push(label[r]);
        }
        out
    }

    /// Totals of mass and weight equal their initial values.
    pub fn check_conservation(&mut self) -> Result<()> {
        let blocks = self.blocks();
        let m = blocks.iter().fold(S::zero(), |a, b| a + b.0.clone());
        let w = blocks.iter().fold(S::zero(), |a, b| a + b.1.clone());
        let tol = |total: &S| S::from_f64_lossy(1e-12) * S::max_of(S::one(), total.abs());
        if (m.clone() - self.initial_mass.clone()).abs() > tol(&self.initial_mass)
            || (w.clone() - self.initial_weight.clone()).abs() > tol(&self.initial_weight)
        {
            return Err(Error::Invariant(format!(
                "mass/weight not conserved: {:?}/{:?} vs {:?}/{:?}",
                m, w, self.initial_mass, self.initial_weight
            )));
        }
        Ok(())
    }
}

/// Non-increasing order, ties kept in input order.
pub fn ord<S: Scalar>(mut v: Vec<S>) -> Vec<S> {
    v.sort_by(|a, b| b.partial_cmp(a).expect("comparable values"));
    v
}

/// `S = Σ m²` over blocks.
pub fn susceptibility<S: Scalar>(masses: &[S]) -> S {
    masses.iter().fold(S::zero(), |a, m| a + m.clone() * m.clone())
}

/// Pairwise clocks `ξ_ij` for `i < j`, stored in the fixed pair order.
#[derive(Clone, Debug)]
pub struct ClockTable {
    n: usize,
    xi: Vec<f64>,
}

impl ClockTable {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        ClockTable {
            n,
            xi: (0..pairs).map(|_| Exp1.sample(rng)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        // pairs before row i: Σ_{r<i} (n-1-r)
        let row = i * (2 * self.n - i - 1) / 2;
        self.xi[row + (j - i - 1)]
    }

    /// Edges `{i, j}` with `ξ_ij ≤ y_i y_j t`.
    pub fn edges<S: Scalar>(&self, weight: &[S], t: f64) -> Vec<(u32, u32)> {
        let y: Vec<f64> = weight.iter().map(|w| w.as_f64()).collect();
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.get(i, j) <= y[i] * y[j] * t {
                    out.push((i as u32, j as u32));
                }
            }
        }
        out
    }
}

fn build<S: Scalar>(v: &MassWeightVector<S>, edges: &[(u32, u32)]) -> BlockSystem<S> {
    let mut sys = BlockSystem::new(v);
    for &(i, j) in edges {
        sys.merge(i, j);
    }
    sys
}

/// `MC₂(x, y, t)` by the graphical construction, clocks streamed in pair order.
pub fn mcmw_graphical<S: Scalar, R: Rng + ?Sized>(
    v: &MassWeightVector<S>,
    t: f64,
    rng: &mut R,
) -> Result<(Vec<S>, BlockSystem<S>)> {
    if !(t >= 0.0) {
        return domain("time must be non-negative");
    }
    let n = v.len();
    let y: Vec<f64> = v.weight.iter().map(|w| w.as_f64()).collect();
    let mut sys = BlockSystem::new(v);
    for i in 0..n {
        for j in i + 1..n {
            let xi: f64 = Exp1.sample(rng);
            if xi <= y[i] * y[j] * t {
                sys.merge(i as u32, j as u32);
            }
        }
    }
    let masses = sys.ordered_masses();
    Ok((masses, sys))
}

/// `MC₂(x, y, t)` with the same law as [`mcmw_graphical`] in time linear in
/// blocks plus edges, for long vectors.
///
/// Blocks are visited in order of decreasing weight. For block `i` the
/// probability `1 - exp(-y_i y_j t)` only decreases along `j`, so candidate
/// partners are reached by geometric skips at the current bound and kept
/// with probability `p_ij / bound`. Clocks are not shared between runs.
pub fn mcmw_rank_one<S: Scalar, R: Rng + ?Sized>(
    v: &MassWeightVector<S>,
    t: f64,
    rng: &mut R,
) -> Result<(Vec<S>, BlockSystem<S>)> {
    if !(t >= 0.0) {
        return domain("time must be non-negative");
    }
    let mut order: Vec<usize> = (0..v.len()).filter(|&i| v.weight[i].as_f64() > 0.0).collect();
    order.sort_by(|&a, &b| v.weight[b].as_f64().total_cmp(&v.weight[a].as_f64()));
    let y: Vec<f64> = order.iter().map(|&i| v.weight[i].as_f64()).collect();
    let m = y.len();
    let mut sys = BlockSystem::new(v);
    for i in 0..m {
        let mut j = i + 1;
        if j >= m {
            break;
        }
        let mut bound = -(-y[i] * y[j] * t).exp_m1();
        while j < m && bound > 0.0 {
            if bound < 1.0 {
                let u: f64 = rng.random();
                // number of rejected candidates before the next success at rate `bound`
                let skip = (u.ln() / (-bound).ln_1p()).floor();
                if skip >= (m - j) as f64 {
                    break;
                }
                j += skip as usize;
            }
            let p = -(-y[i] * y[j] * t).exp_m1();
            if rng.random::<f64>() * bound < p {
                sys.merge(order[i] as u32, order[j] as u32);
            }
            bound = p;
            j += 1;
        }
    }
    let masses = sys.ordered_masses();
    Ok((masses, sys))
}

/// `MC₁(x, t) = MC₂(x, x, t)`.
pub fn mc1<S: Scalar, R: Rng + ?Sized>(x: &[S], t: f64, rng: &mut R) -> Result<Vec<S>> {
    let v = MassWeightVector::new(x.to_vec(), x.to_vec())?;
    Ok(mcmw_graphical(&v, t, rng)?.0)
}

#[derive(Clone, Debug)]
pub struct CoupledOutcome<S> {
    pub first: Vec<S>,
    pub second: Vec<S>,
    pub first_edges: Vec<(u32, u32)>,
    pub second_edges: Vec<(u32, u32)>,
}

impl<S> CoupledOutcome<S> {
    /// Every edge of the first system is an edge of the second.
    pub fn edges_nested(&self) -> bool {
        // both lists come out in the same pair order
        let mut it = self.second_edges.iter();
        self.first_edges.iter().all(|e| it.any(|f| f == e))
    }
}

/// Both systems at time `t` built from one clock table.
pub fn mcmw_coupled_pair<S: Scalar>(
    a: &MassWeightVector<S>,
    b: &MassWeightVector<S>,
    t: f64,
    shared_seed: u64,
) -> Result<CoupledOutcome<S>> {
    if a.len() != b.len() {
        return Err(Error::IndexMismatch(a.len(), b.len()));
    }
    let clocks = ClockTable::sample(a.len(), &mut rng_from_seed(shared_seed));
    Ok(coupled_with_clocks(a, t, b, t, &clocks))
}

/// Two systems (possibly at different times) built from given clocks.
pub fn coupled_with_clocks<S: Scalar>(
    a: &MassWeightVector<S>,
    ta: f64,
    b: &MassWeightVector<S>,
    tb: f64,
    clocks: &ClockTable,
) -> CoupledOutcome<S> {
    let first_edges = clocks.edges(&a.weight, ta);
    let second_edges = clocks.edges(&b.weight, tb);
    CoupledOutcome {
        first: build(a, &first_edges).ordered_masses(),
        second: build(b, &second_edges).ordered_masses(),
        first_edges,
        second_edges,
    }
}

/// Inputs for `MC₂(ax, by, ct) ≐ a · MC₂(x, b√c · y, t)`: returns `(x, b√c·y)` and `a`.
pub fn scaling_transform<S: Scalar + Float>(
    v: &MassWeightVector<S>,
    a: S,
    b: S,
    c: S,
) -> Result<(MassWeightVector<S>, S)> {
    if !(a > S::zero() && b > S::zero() && c > S::zero()) {
        return domain("scaling factors must be positive");
    }
    let f = b * c.sqrt();
    let weight = v.weight.iter().map(|&y| f * y).collect();
    Ok((MassWeightVector::new(v.mass.clone(), weight)?, a))
}

/// `‖a - b‖²` after padding the shorter ordered vector with zeros.
pub fn padded_sq_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let d = a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct FellerReport {
    pub epsilon: f64,
    pub replicates: usize,
    pub mean_sq_difference: f64,
    pub max_sq_difference: f64,
    /// Realizations violating `‖a'-a‖² ≤ ‖a'‖² - ‖a‖²` for the perturbed pair.
    pub norm_inequality_violations: usize,
    /// Realizations violating either step of the susceptibility chain.
    pub susceptibility_chain_violations: usize,
    /// Realizations where the perturbed edge set fails to contain the base one.
    pub inclusion_violations: usize,
    /// `s = 2‖x+y‖²` and the empirical `P(‖MC₁(x+y,t)‖² > s)`.
    pub tail_level: f64,
    pub tail_empirical: f64,
    pub tail_standard_error: f64,
    /// `t s ‖x+y‖² / (s - ‖x+y‖²)`.
    pub tail_bound: f64,
    pub tail_within_envelope: bool,
}

/// Perturbs `(x, y)` by `ε/√n` in every coordinate and compares the two
/// coalescents under shared clocks; also checks the susceptibility chain
/// `S(x,y,t) ≤ S(x+y,y,t) - ‖y‖² - 2⟨x,y⟩ ≤ S(x+y,x+y,t) - ‖y‖² - 2⟨x,y⟩`
/// and the tail envelope for `‖MC₁(x+y,t)‖²` at `s = 2‖x+y‖²`.
pub fn feller_probe(
    v: &MassWeightVector<f64>,
    epsilon: f64,
    t: f64,
    replicates: usize,
    master_seed: u64,
) -> Result<FellerReport> {
    if v.weight.iter().any(|&y| !(y > 0.0)) {
        return domain("every weight must be strictly positive");
    }
    let n = v.len();
    let delta = if n == 0 { 0.0 } else { epsilon / (n as f64).sqrt() };
    let perturbed = MassWeightVector::new(
        v.mass.iter().map(|x| x + delta).collect(),
        v.weight.iter().map(|y| y + delta).collect(),
    )?;
    let sum: Vec<f64> = v.mass.iter().zip(&v.weight).map(|(x, y)| x + y).collect();
    let x_plus_y_y = MassWeightVector::new(sum.clone(), v.weight.clone())?;
    let x_plus_y_both = MassWeightVector::new(sum.clone(), sum.clone())?;
    let yy: f64 = v.weight.iter().map(|y| y * y).sum();
    let xy: f64 = v.mass.iter().zip(&v.weight).map(|(x, y)| x * y).sum();
    let norm_sum: f64 = sum.iter().map(|s| s * s).sum();
    let s_level = 2.0 * norm_sum;

    struct Rep {
        diff: f64,
        norm_ok: bool,
        chain_ok: bool,
        nested: bool,
        tail_hit: bool,
    }
    let reps: Vec<Rep> = replicate(master_seed, replicates, |_, rng| {
        let clocks = ClockTable::sample(n, rng);
        let base_pert = coupled_with_clocks(v, t, &perturbed, t, &clocks);
        let diff = padded_sq_distance(&base_pert.first, &base_pert.second);
        let s_base = susceptibility(&base_pert.first);
        let s_pert = susceptibility(&base_pert.second);
        let slack = 1e-9 * (1.0 + s_pert);
        let norm_ok = diff <= s_pert - s_base + slack;

        let chain = coupled_with_clocks(&x_plus_y_y, t, &x_plus_y_both, t, &clocks);
        let mid = susceptibility(&chain.first) - yy - 2.0 * xy;
        let top = susceptibility(&chain.second) - yy - 2.0 * xy;
        let tol = 1e-9 * (1.0 + top.abs());
        let chain_ok = s_base <= mid + tol && mid <= top + tol;

        Rep {
            diff,
            norm_ok,
            chain_ok,
            nested: base_pert.edges_nested(),
            tail_hit: susceptibility(&chain.second) > s_level,
        }
    });
    let r = replicates.max(1) as f64;
    let tail = reps.iter().filter(|x| x.tail_hit).count() as f64 / r;
    let tail_se = (tail * (1.0 - tail) / r).sqrt().max(1.0 / r);
    let tail_bound = t * s_level * norm_sum / (s_level - norm_sum);
    Ok(FellerReport {
        epsilon,
        replicates,
        mean_sq_difference: reps.iter().map(|x| x.diff).sum::<f64>() / r,
        max_sq_difference: reps.iter().map(|x| x.diff).fold(0.0, f64::max),
        norm_inequality_violations: reps.iter().filter(|x| !x.norm_ok).count(),
        susceptibility_chain_violations: reps.iter().filter(|x| !x.chain_ok).count(),
        inclusion_violations: reps.iter().filter(|x| !x.nested).count(),
        tail_level: s_level,
        tail_empirical: tail,
        tail_standard_error: tail_se,
        tail_bound,
        tail_within_envelope: tail <= tail_bound + 4.0 * tail_se,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BipartiteReport {
    pub split: usize,
    pub t: f64,
    pub epsilon: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `ε · P(ΣZ² > α₁ + ε)` estimated.
    pub lhs: f64,
    pub lhs_standard_error: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Monte Carlo check of
/// `ε P(ΣZ² > α₁+ε) ≤ (t(α₁+2α₂+3ε) + t²(α₁+α₂+2ε)²) Σ_{k>m} (x_k+y_k)²`
/// on the bipartite graph with edges only across the split, `P(i~j) = 1 - e^{-t y_i y_j}`.
///
/// `ΣZ²` is the squared-mass sum of the components minus `Σ_{k>m} x_k²`, so
/// that it counts only the growth caused by edges and equals `α₁` at `t = 0`.
pub fn bipartite_bound_check(
    v: &MassWeightVector<f64>,
    split: usize,
    t: f64,
    epsilon: f64,
    replicates: usize,
    master_seed: u64,
) -> Result<BipartiteReport> {
    let n = v.len();
    if split == 0 || split >= n {
        return domain(format!("split must lie in 1..{n}"));
    }
    let (x, y) = (&v.mass, &v.weight);
    let alpha1: f64 = x[..split].iter().map(|a| a * a).sum();
    let alpha2: f64 = y[..split].iter().map(|a| a * a).sum();
    let right_sq: f64 = x[split..].iter().map(|a| a * a).sum();
    let tail: f64 = (split..n).map(|k| (x[k] + y[k]).powi(2)).sum();
    let rhs = (t * (alpha1 + 2.0 * alpha2 + 3.0 * epsilon)
        + t * t * (alpha1 + alpha2 + 2.0 * epsilon).powi(2))
        * tail;
    let hits: Vec<bool> = replicate(master_seed, replicates, |_, rng| {
        let mut sys = BlockSystem::new(v);
        for i in 0..split {
            for j in split..n {
                let xi: f64 = Exp1.sample(rng);
                if xi <= t * y[i] * y[j] {
                    sys.merge(i as u32, j as u32);
                }
            }
        }
        let z: f64 = susceptibility(&sys.ordered_masses()) - right_sq;
        z > alpha1 + epsilon
    });
    let r = replicates.max(1) as f64;
    let p = hits.iter().filter(|&&h| h).count() as f64 / r;
    let se = epsilon * (p * (1.0 - p) / r).sqrt();
    Ok(BipartiteReport {
        split,
        t,
        epsilon,
        alpha1,
        alpha2,
        lhs: epsilon * p,
        lhs_standard_error: se,
        rhs,
        holds: epsilon * p <= rhs + 4.0 * se.max(epsilon / r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn mw(x: &[f64], y: &[f64]) -> MassWeightVector<f64> {
        MassWeightVector::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn rank_one_sampler_matches_graphical_law() {
        let x: Vec<f64> = (1..=30).map(|i| 1.0 / i as f64).collect();
        let y: Vec<f64> = (1..=30).map(|i| if i % 7 == 0 { 0.0 } else { 2.0 / (i as f64).sqrt() }).collect();
        let v = mw(&x, &y);
        let reps = 20_000;
        let a: Vec<[f64; 2]> = replicate(31, reps, |_, rng| {
            let m = mcmw_graphical(&v, 0.4, rng).unwrap().0;
            [m[0], susceptibility(&m)]
        });
        let b: Vec<[f64; 2]> = replicate(32, reps, |_, rng| {
            let m = mcmw_rank_one(&v, 0.4, rng).unwrap().0;
            [m[0], susceptibility(&m)]
        });
        for k in 0..2 {
            let ca: Vec<f64> = a.iter().map(|r| r[k]).collect();
            let cb: Vec<f64> = b.iter().map(|r| r[k]).collect();
            assert!(crate::stats::ks_two_sample(&ca, &cb).unwrap().p_value > 1e-3);
        }
    }

    #[test]
    fn rank_one_two_blocks() {
        let v = mw(&[1.0, 1.0], &[2.0, 0.5]);
        let reps = 100_000;
        let merged: Vec<bool> = replicate(33, reps, |_, rng| mcmw_rank_one(&v, 1.0, rng).unwrap().0.len() == 1);
        let p = merged.iter().filter(|&&m| m).count() as f64 / reps as f64;
        let want = 1.0 - (-1.0f64).exp();
        assert!((p - want).abs() < 3.0 * (want * (1.0 - want) / reps as f64).sqrt());
    }

    #[test]
    fn time_zero_sorts_masses() {
        let v = mw(&[1.0, 3.0, 2.0], &[1.0, 1.0, 1.0]);
        let (m, _) = mcmw_graphical(&v, 0.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!(m, vec![3.0, 2.0, 1.0]);
        assert_eq!(mc1(&[1.0, 3.0], 0.0, &mut rng_from_seed(1)).unwrap(), vec![3.0, 1.0]);
    }

    #[test]
    fn clock_table_indexing_covers_every_pair_once() {
        let c = ClockTable::sample(7, &mut rng_from_seed(2));
        let mut seen: Vec<f64> = Vec::new();
        for i in 0..7 {
            for j in i + 1..7 {
                seen.push(c.get(i, j));
                assert_eq!(c.get(i, j), c.get(j, i));
            }
        }
        assert_eq!(seen, c.xi);
    }

    #[test]
    fn streamed_and_tabled_clocks_agree() {
        let v = mw(&[1.0, 2.0, 0.5, 1.5, 1.0], &[0.7, 1.1, 0.4, 0.9, 1.3]);
        for seed in 0..50 {
            let (a, _) = mcmw_graphical(&v, 1.3, &mut rng_from_seed(seed)).unwrap();
            let c = mcmw_coupled_pair(&v, &v, 1.3, seed).unwrap();
            assert_eq!(a, c.first);
            assert_eq!(c.first, c.second);
        }
    }

    #[test]
    fn two_blocks_merge_probability() {
        let v = mw(&[1.0, 2.0], &[1.0, 1.0]);
        let t = 2f64.ln();
        let reps = 100_000;
        let merged: Vec<bool> = replicate(3, reps, |_, rng| mcmw_graphical(&v, t, rng).unwrap().0.len() == 1);
        let p = merged.iter().filter(|&&m| m).count() as f64 / reps as f64;
        assert!((p - 0.5).abs() < 3.0 * (0.25 / reps as f64).sqrt());
    }

    #[test]
    fn exact_rational_merge_conserves_totals() {
        let q = |a: i64, b: i64| Rational::new(BigInt::from(a), BigInt::from(b));
        let v = MassWeightVector::new(vec![q(1, 3), q(2, 7), q(5, 11)], vec![q(1, 2), q(3, 2), q(1, 1)]).unwrap();
        let (m, mut sys) = mcmw_graphical(&v, 10.0, &mut rng_from_seed(4)).unwrap();
        sys.check_conservation().unwrap();
        let total = m.iter().fold(q(0, 1), |a, b| a + b.clone());
        assert_eq!(total, q(1, 3) + q(2, 7) + q(5, 11));
    }

    #[test]
    fn susceptibility_examples() {
        assert_eq!(susceptibility(&[4.0]), 16.0);
        assert_eq!(susceptibility(&[3.0, 1.0]), 10.0);
        assert!(susceptibility(&[3.0]) >= susceptibility(&[1.0, 2.0]));
    }

    #[test]
    fn scaling_transform_arithmetic() {
        let v = mw(&[1.0, 2.0], &[0.5, 1.0]);
        let (w, a) = scaling_transform(&v, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((w, a), (v.clone(), 1.0));
        let (w, a) = scaling_transform(&v, 2.0, 1.0, 4.0).unwrap();
        assert_eq!(w.weight, vec![1.0, 2.0]);
        assert_eq!(w.mass, v.mass);
        assert_eq!(a, 2.0);
        assert!(scaling_transform(&v, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn feller_probe_zero_perturbation() {
        let v = mw(&[1.0, 0.5, 0.8, 0.3], &[0.6, 0.9, 0.4, 1.0]);
        let r = feller_probe(&v, 0.0, 0.7, 2000, 5).unwrap();
        assert_eq!(r.max_sq_difference, 0.0);
        assert_eq!(r.susceptibility_chain_violations, 0);
        assert!(feller_probe(&mw(&[1.0], &[0.0]), 0.1, 1.0, 10, 1).is_err());
    }

    #[test]
    fn bipartite_time_zero_and_single_edge() {
        let v = mw(&[1.0, 2.0], &[1.0, 1.0]);
        let r = bipartite_bound_check(&v, 1, 0.0, 0.5, 1000, 6).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.holds);
        // one edge joins masses 1 and 2: ΣZ² - x_2² = 9 - 4 = 5 > 1 + ε
        let t = 0.4;
        let reps = 100_000;
        let r = bipartite_bound_check(&v, 1, t, 0.5, reps, 7).unwrap();
        let p = 1.0 - (-t).exp();
        assert!((r.lhs / 0.5 - p).abs() < 3.0 * (p * (1.0 - p) / reps as f64).sqrt());
        assert!(r.holds);
    }

    proptest! {
        #[test]
        fn coupled_monotonicity(
            entries in proptest::collection::vec((0.0f64..2.0, 0.01f64..2.0, 0.0f64..0.5, 0.0f64..0.5), 2..12),
            t in 0.0f64..2.0,
            seed in any::<u64>(),
        ) {
            let a = mw(
                &entries.iter().map(|e| e.0).collect::<Vec<_>>(),
                &entries.iter().map(|e| e.1).collect::<Vec<_>>(),
            );
            let b = mw(
                &entries.iter().map(|e| e.0 + e.2).collect::<Vec<_>>(),
                &entries.iter().map(|e| e.1 + e.3).collect::<Vec<_>>(),
            );
            let c = mcmw_coupled_pair(&a, &b, t, seed).unwrap();
            prop_assert!(c.edges_nested());
            let (sa, sb) = (susceptibility(&c.first), susceptibility(&c.second));
            prop_assert!(padded_sq_distance(&c.first, &c.second) <= sb - sa + 1e-9);

            // edges only accumulate in time on shared clocks
            let clocks = ClockTable::sample(a.len(), &mut rng_from_seed(seed));
            let later = coupled_with_clocks(&a, t, &a, t + 0.5, &clocks);
            prop_assert!(later.edges_nested());
            prop_assert!(susceptibility(&later.first) <= susceptibility(&later.second) + 1e-12);

            // restricting to a prefix of indices gives the induced subgraph
            let k = a.len() / 2 + 1;
            let sub = ClockTable::sample(a.len(), &mut rng_from_seed(seed));
            let full_edges = sub.edges(&a.weight, t);
            let induced: Vec<(u32, u32)> = full_edges.into_iter().filter(|e| (e.1 as usize) < k).collect();
            let sub_edges: Vec<(u32, u32)> = (0..k)
                .flat_map(|i| (i + 1..k).map(move |j| (i as u32, j as u32)))
                .filter(|&(i, j)| sub.get(i as usize, j as usize) <= a.weight[i as usize] * a.weight[j as usize] * t)
                .collect();
            prop_assert_eq!(induced, sub_edges);

            let mut sys = build(&b, &c.second_edges);
            prop_assert!(sys.check_conservation().is_ok());
        }
    }
}
