//! Breadth-first exploration of the white graph and the walks it produces.
//!
//! Every step either starts a new component (a vertex is drawn with
//! probability proportional to its degree among alive vertices) or pairs one
//! half-edge of the smallest active vertex. The walk bookkeeping is
//!
//! * `X(t) = -2t + Σ_i d_i^(w) 1[η_i ≤ t]`,
//! * `Y(t) = Σ_i d_i^(b) 1[η_i ≤ t]`,
//! * `N(t)` = surplus edges found by step `t`,
//!
//! and the k-th component is finished at `τ(k) = min{t : X(t) = -2k}`.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::degree_model::{DegreeSequence, ScalingConstants};
use crate::error::{Error, Result};
use crate::graph::{sample_white_matching, ColoredMultigraph, UNPAIRED};
use crate::path::CadlagPath;
use crate::rng::replicate;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExploreMode {
    /// Pair each half-edge with a uniform alive half-edge as the walk runs.
    Fused,
    /// Follow the white matching already stored in the graph.
    Replay,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExplorationTrace {
    /// `X(0..=steps)`.
    pub x: Vec<i64>,
    /// `Y(0..=steps)`.
    pub y: Vec<u64>,
    /// `N(0..=steps)`.
    pub surplus: Vec<u64>,
    /// Discovery step of each vertex (1-based steps).
    pub eta: Vec<u64>,
    /// `τ(0) = 0, τ(1), τ(2), …`.
    pub tau: Vec<u64>,
    /// Vertex discovered at step `t`, stored at index `t - 1`; `UNPAIRED` if none.
    pub step_vertex: Vec<u32>,
    /// White matching realised by the exploration.
    pub white_match: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DiscoveredComponent {
    pub ordinal: usize,
    pub root: u32,
    pub edge_count: u64,
    pub size: u64,
    pub black_half_edges: u64,
    pub surplus: u64,
}

struct AliveSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl AliveSet {
    fn full(count: usize) -> Self {
        AliveSet {
            items: (0..count as u32).collect(),
            pos: (0..count as u32).collect(),
        }
    }

    fn contains(&self, h: u32) -> bool {
        self.pos[h as usize] != UNPAIRED
    }

    fn remove(&mut self, h: u32) {
        let i = self.pos[h as usize] as usize;
        let last = *self.items.last().unwrap();
        self.items.swap_remove(i);
        if last != h {
            self.pos[last as usize] = i as u32;
        }
        self.pos[h as usize] = UNPAIRED;
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.items[rng.random_range(0..self.items.len())]
    }

    fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Runs the exploration to completion.
pub fn explore<R: Rng + ?Sized>(
    g: &ColoredMultigraph,
    mode: ExploreMode,
    rng: &mut R,
) -> Result<ExplorationTrace> {
    explore_until(g, mode, u64::MAX, rng)
}

/// Runs the exploration for at most `max_steps` steps.
pub fn explore_until<R: Rng + ?Sized>(
    g: &ColoredMultigraph,
    mode: ExploreMode,
    max_steps: u64,
    rng: &mut R,
) -> Result<ExplorationTrace> {
    let n = g.n();
    let total = g.white_total();
    if total % 2 == 1 {
        return Err(Error::Parity {
            color: "white",
            total: total as u64,
        });
    }
    if mode == ExploreMode::Replay && g.white_match.contains(&UNPAIRED) {
        return Err(Error::Invariant("replay needs a complete white matching".into()));
    }
    let capacity = n + total / 2 + 1;
    let mut tr = ExplorationTrace {
        x: Vec::with_capacity(capacity),
        y: Vec::with_capacity(capacity),
        surplus: Vec::with_capacity(capacity),
        eta: vec![u64::MAX; n],
        tau: vec![0],
        step_vertex: Vec::with_capacity(capacity),
        white_match: vec![UNPAIRED; total],
    };
    tr.x.push(0);
    tr.y.push(0);
    tr.surplus.push(0);

    let mut alive = AliveSet::full(total);
    let mut cursor: Vec<u32> = (0..n).map(|v| g.white_half_edges(v).start).collect();
    let mut queue: VecDeque<u32> = VecDeque::new();
    let (mut x, mut y, mut nsur) = (0i64, 0u64, 0u64);
    let mut t = 0u64;

    while !alive.is_empty() && t < max_steps {
        t += 1;
        // drop active vertices whose half-edges are all used up
        while let Some(&v) = queue.front() {
            let range = g.white_half_edges(v as usize);
            let c = &mut cursor[v as usize];
            while *c < range.end && !alive.contains(*c) {
                *c += 1;
            }
            if *c < range.end {
                break;
            }
            queue.pop_front();
        }
        let mut found = UNPAIRED;
        match queue.front() {
            None => {
                let h = alive.sample(rng);
                let v = g.white_owner(h);
                found = v;
                tr.eta[v as usize] = t;
                x += g.white_degree(v as usize) as i64 - 2;
                y += g.black_degree(v as usize) as u64;
                queue.push_back(v);
            }
            Some(&v) => {
                let e = cursor[v as usize];
                alive.remove(e);
                let f = match mode {
                    ExploreMode::Fused => alive.sample(rng),
                    ExploreMode::Replay => g.white_match[e as usize],
                };
                if !alive.contains(f) {
                    return Err(Error::Invariant(format!("half-edge {f} paired twice")));
                }
                alive.remove(f);
                tr.white_match[e as usize] = f;
                tr.white_match[f as usize] = e;
                let u = g.white_owner(f);
                if tr.eta[u as usize] == u64::MAX {
                    found = u;
                    tr.eta[u as usize] = t;
                    x += g.white_degree(u as usize) as i64 - 2;
                    y += g.black_degree(u as usize) as u64;
                    if g.white_degree(u as usize) > 1 {
                        queue.push_back(u);
                    }
                } else {
                    x -= 2;
                    nsur += 1;
                }
            }
        }
        tr.step_vertex.push(found);
        tr.x.push(x);
        tr.y.push(y);
        tr.surplus.push(nsur);
        let k = tr.tau.len() as i64;
        if x == -2 * k {
            tr.tau.push(t);
        }
    }
    Ok(tr)
}

impl ExplorationTrace {
    pub fn steps(&self) -> u64 {
        self.step_vertex.len() as u64
    }

    pub fn component_count(&self) -> usize {
        self.tau.len() - 1
    }

    pub fn components(&self) -> Vec<DiscoveredComponent> {
        self.tau
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (a, b) = (w[0] as usize, w[1] as usize);
                let len = (b - a) as u64;
                let sur = self.surplus[b] - self.surplus[a];
                DiscoveredComponent {
                    ordinal: i + 1,
                    root: self.step_vertex[a],
                    edge_count: len - 1,
                    size: len - sur,
                    black_half_edges: self.y[b] - self.y[a],
                    surplus: sur,
                }
            })
            .collect()
    }

    /// Checks the walk identities exactly.
    pub fn check_identities(&self, white: &[u32], black: &[u32]) -> Result<()> {
        let fail = |m: String| Err(Error::Invariant(m));
        for t in 1..=self.steps() as usize {
            let dx = self.x[t] - self.x[t - 1];
            let dy = self.y[t] - self.y[t - 1];
            let dn = self.surplus[t] - self.surplus[t - 1];
            let v = self.step_vertex[t - 1];
            if v == UNPAIRED {
                if dx != -2 || dy != 0 || dn != 1 {
                    return fail(format!("step {t}: surplus step with dx={dx} dy={dy} dn={dn}"));
                }
            } else {
                let v = v as usize;
                if dx != white[v] as i64 - 2 || dy != black[v] as u64 || dn != 0 {
                    return fail(format!("step {t}: discovery of {v} has wrong increments"));
                }
                if self.eta[v] != t as u64 {
                    return fail(format!("eta of {v} is {} not {t}", self.eta[v]));
                }
            }
        }
        for (k, &tk) in self.tau.iter().enumerate().skip(1) {
            let prev = self.tau[k - 1] as usize;
            if self.x[tk as usize] != -2 * k as i64 {
                return fail(format!("X(τ({k})) = {} not {}", self.x[tk as usize], -2 * k as i64));
            }
            if self.x[prev + 1..tk as usize].iter().any(|&v| v <= -2 * k as i64) {
                return fail(format!("X reaches -2·{k} before τ({k})"));
            }
        }
        // the totals only apply to a completed exploration
        if self.eta.iter().all(|&e| e != u64::MAX) {
            let dw: i64 = white.iter().map(|&d| d as i64).sum();
            let db: u64 = black.iter().map(|&d| d as u64).sum();
            if *self.x.last().unwrap() != dw - 2 * self.steps() as i64 {
                return fail("final X inconsistent with step count".into());
            }
            if *self.y.last().unwrap() != db {
                return fail("final Y differs from total black degree".into());
            }
        }
        Ok(())
    }

    /// Active half-edge count as a càdlàg path in step time.
    ///
    /// A new component jumps to its root degree and stays flat for the root
    /// step; every pairing step jumps by the degree of a newly found vertex and
    /// then drifts down by 2. Its excursions above zero are exactly
    /// `(τ(k-1), τ(k))`.
    pub fn active_path(&self) -> CadlagPath<f64> {
        let steps = self.steps();
        let mut b = CadlagPath::builder(0.0, 0.0, steps as f64);
        for t in 1..=steps as usize {
            let start = self.tau.binary_search(&((t - 1) as u64)).is_ok();
            let found = self.step_vertex[t - 1];
            let jump = if found == UNPAIRED {
                0.0
            } else {
                (self.x[t] - self.x[t - 1] + 2) as f64
            };
            let slope = if start { 0.0 } else { -2.0 };
            b.push((t - 1) as f64, jump, slope).expect("monotone knots");
        }
        b.finish()
    }

    /// `Y` as a càdlàg path in step time with each jump placed mid-step, so
    /// that increments over `[τ(k-1), τ(k)]` are unaffected by endpoint jumps.
    pub fn black_path(&self) -> CadlagPath<f64> {
        let steps = self.steps();
        let mut b = CadlagPath::builder(0.0, 0.0, steps as f64);
        for t in 1..=steps as usize {
            let dy = self.y[t] - self.y[t - 1];
            if dy > 0 {
                b.push(t as f64 - 0.5, dy as f64, 0.0).expect("monotone knots");
            }
        }
        b.finish()
    }

    pub fn write_csv<W: Write>(&self, mut out: W, stride: usize) -> Result<()> {
        writeln!(out, "t,X,Y,N")?;
        let stride = stride.max(1);
        let last = self.steps() as usize;
        for t in (0..=last).step_by(stride) {
            writeln!(out, "{t},{},{},{}", self.x[t], self.y[t], self.surplus[t])?;
        }
        if !last.is_multiple_of(stride) {
            writeln!(out, "{last},{},{},{}", self.x[last], self.y[last], self.surplus[last])?;
        }
        Ok(())
    }
}

/// `t ↦ (a_n⁻¹ X(⌊b_n t⌋), b_n⁻¹ Y(⌊b_n t⌋), N(⌊b_n t⌋))` on `[0, horizon]`.
pub struct RescaledTrace {
    pub x: CadlagPath<f64>,
    pub y: CadlagPath<f64>,
    pub surplus: CadlagPath<f64>,
}

pub fn rescale_trace(
    tr: &ExplorationTrace,
    scaling: &ScalingConstants,
    horizon: f64,
) -> Result<RescaledTrace> {
    let last = (scaling.b_n * horizon).floor();
    if last > tr.steps() as f64 {
        return Err(Error::BeyondHorizon {
            requested: horizon,
            horizon: tr.steps() as f64 / scaling.b_n,
        });
    }
    let last = last as usize;
    let mut bx = CadlagPath::builder(0.0, 0.0, horizon);
    let mut by = CadlagPath::builder(0.0, 0.0, horizon);
    let mut bn = CadlagPath::builder(0.0, 0.0, horizon);
    for t in 1..=last {
        let time = t as f64 / scaling.b_n;
        let dx = (tr.x[t] - tr.x[t - 1]) as f64 / scaling.a_n;
        let dy = (tr.y[t] - tr.y[t - 1]) as f64 / scaling.b_n;
        let dn = (tr.surplus[t] - tr.surplus[t - 1]) as f64;
        bx.push(time, dx, 0.0)?;
        if dy != 0.0 {
            by.push(time, dy, 0.0)?;
        }
        if dn != 0.0 {
            bn.push(time, dn, 0.0)?;
        }
    }
    Ok(RescaledTrace {
        x: bx.finish(),
        y: by.finish(),
        surplus: bn.finish(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscoveryBand {
    pub vertex: usize,
    pub degree: u32,
    pub t: u64,
    pub empirical: f64,
    pub standard_error: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

/// Empirical `P(η_i ≤ t)` for the listed vertices against
/// `d t/ℓ - d²t²/ℓ² ≤ P(η_i ≤ t) ≤ (d/(ℓ-2t_max) + d²/(ℓ-2t_max)²) t`,
/// with 4σ Monte Carlo slack.
pub fn discovery_probability_check(
    seq: &DegreeSequence,
    vertices: &[usize],
    t_values: &[u64],
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<DiscoveryBand>> {
    let t_max = t_values.iter().copied().max().unwrap_or(0);
    let etas: Vec<Result<Vec<u64>>> = replicate(master_seed, replicates, |_, rng| {
        let g = sample_white_matching(seq, rng)?;
        let tr = explore_until(&g, ExploreMode::Fused, t_max, rng)?;
        Ok(vertices.iter().map(|&v| tr.eta[v]).collect())
    });
    let etas: Vec<Vec<u64>> = etas.into_iter().collect::<Result<_>>()?;
    let ell = seq.total_white() as f64;
    let shrunk = ell - 2.0 * t_max as f64;
    let mut out = Vec::new();
    for (j, &v) in vertices.iter().enumerate() {
        let d = seq.white[v] as f64;
        for &t in t_values {
            let hits = etas.iter().filter(|e| e[j] <= t).count();
            let p = hits as f64 / replicates as f64;
            let se = (p * (1.0 - p) / replicates as f64).sqrt().max(0.5 / replicates as f64);
            let tf = t as f64;
            let lower = d * tf / ell - d * d * tf * tf / (ell * ell);
            // the upper bound needs ℓ > 2 t_max; otherwise only the trivial bound is left
            let upper = if t == 0 {
                0.0
            } else if shrunk > 0.0 {
                (d / shrunk + d * d / (shrunk * shrunk)) * tf
            } else {
                1.0
            };
            out.push(DiscoveryBand {
                vertex: v,
                degree: seq.white[v],
                t,
                empirical: p,
                standard_error: se,
                lower,
                upper,
                within: p >= lower - 4.0 * se && p <= upper + 4.0 * se,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::components;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn plain(white: Vec<u32>, black: Vec<u32>) -> DegreeSequence {
        DegreeSequence::plain(white, black).unwrap()
    }

    #[test]
    fn single_self_loop_hand_trace() {
        let seq = plain(vec![2], vec![0]);
        let g = sample_white_matching(&seq, &mut rng_from_seed(1)).unwrap();
        for mode in [ExploreMode::Fused, ExploreMode::Replay] {
            let tr = explore(&g, mode, &mut rng_from_seed(2)).unwrap();
            assert_eq!(tr.x, vec![0, 0, -2]);
            assert_eq!(tr.tau, vec![0, 2]);
            assert_eq!(tr.surplus, vec![0, 0, 1]);
            let c = tr.components();
            assert_eq!((c[0].size, c[0].edge_count, c[0].surplus), (1, 1, 1));
        }
    }

    #[test]
    fn two_leaves_hand_trace() {
        let seq = plain(vec![1, 1], vec![0, 0]);
        let g = sample_white_matching(&seq, &mut rng_from_seed(3)).unwrap();
        let tr = explore(&g, ExploreMode::Replay, &mut rng_from_seed(4)).unwrap();
        assert_eq!(tr.x, vec![0, -1, -2]);
        assert_eq!(tr.tau, vec![0, 2]);
        let c = tr.components()[0];
        assert_eq!((c.edge_count, c.size, c.surplus), (1, 2, 0));
    }

    fn multiset(mut v: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
        v.sort();
        v
    }

    #[test]
    fn replay_matches_union_find() {
        let seq = plain(vec![5, 3, 3, 2, 2, 2, 1, 1, 1, 1, 1], vec![2, 0, 1, 1, 0, 0, 1, 0, 1, 0, 0]);
        for seed in 0..200 {
            let mut rng = rng_from_seed(seed);
            let g = sample_white_matching(&seq, &mut rng).unwrap();
            let tr = explore(&g, ExploreMode::Replay, &mut rng).unwrap();
            tr.check_identities(&seq.white, &seq.black).unwrap();
            assert_eq!(tr.white_match, g.white_match);
            let ex = multiset(tr.components().iter().map(|c| (c.size, c.black_half_edges)).collect());
            let uf = multiset(components(&g).iter().map(|c| (c.size, c.black_half_edges)).collect());
            assert_eq!(ex, uf);
        }
    }

    #[test]
    fn active_path_excursions_are_tau_intervals() {
        let seq = plain(vec![4, 3, 2, 2, 1, 1, 1], vec![1, 1, 0, 2, 0, 0, 0]);
        let mut rng = rng_from_seed(9);
        let g = sample_white_matching(&seq, &mut rng).unwrap();
        let tr = explore(&g, ExploreMode::Replay, &mut rng).unwrap();
        let a = tr.active_path();
        for &t in &tr.tau {
            assert_eq!(a.eval_left(&(t as f64)).unwrap(), 0.0);
        }
        assert!(a.check_no_negative_jumps().is_ok());
    }

    #[test]
    fn rescale_identity_at_unit_scaling() {
        let seq = plain(vec![2, 2, 1, 1], vec![0, 1, 1, 0]);
        let mut rng = rng_from_seed(10);
        let g = sample_white_matching(&seq, &mut rng).unwrap();
        let tr = explore(&g, ExploreMode::Fused, &mut rng).unwrap();
        let r = rescale_trace(&tr, &seq.scaling, tr.steps() as f64).unwrap();
        for t in 0..=tr.steps() {
            assert_eq!(r.x.eval(&(t as f64)).unwrap(), tr.x[t as usize] as f64);
            assert_eq!(r.y.eval(&(t as f64)).unwrap(), tr.y[t as usize] as f64);
        }
        assert!(rescale_trace(&tr, &seq.scaling, tr.steps() as f64 + 1.0).is_err());
    }

    #[test]
    fn discovery_at_time_zero_and_single_vertex() {
        let seq = plain(vec![2], vec![0]);
        let r = discovery_probability_check(&seq, &[0], &[0, 1], 1000, 5).unwrap();
        assert_eq!(r[0].empirical, 0.0);
        assert_eq!((r[0].lower, r[0].upper), (0.0, 0.0));
        assert_eq!(r[1].empirical, 1.0);
    }

    #[test]
    fn csv_stride_keeps_last_row() {
        let seq = plain(vec![2, 1, 1], vec![0, 0, 0]);
        let mut rng = rng_from_seed(11);
        let g = sample_white_matching(&seq, &mut rng).unwrap();
        let tr = explore(&g, ExploreMode::Replay, &mut rng).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,X,Y,N\n0,0,0,0\n"));
        assert!(text.trim_end().ends_with(&format!("{},{},0,{}", tr.steps(), tr.x.last().unwrap(), tr.surplus.last().unwrap())));
    }

    proptest! {
        #[test]
        fn fused_and_replay_identities(
            degrees in proptest::collection::vec((1u32..7, 0u32..4), 1..80),
            seed in any::<u64>(),
        ) {
            let mut white: Vec<u32> = degrees.iter().map(|d| d.0).collect();
            let mut black: Vec<u32> = degrees.iter().map(|d| d.1).collect();
            if white.iter().sum::<u32>() % 2 == 1 { white[0] += 1; }
            if black.iter().sum::<u32>() % 2 == 1 { black[0] += 1; }
            let seq = plain(white, black);
            let mut rng = rng_from_seed(seed);
            let g = sample_white_matching(&seq, &mut rng).unwrap();
            for mode in [ExploreMode::Fused, ExploreMode::Replay] {
                let tr = explore(&g, mode, &mut rng).unwrap();
                prop_assert!(tr.check_identities(&seq.white, &seq.black).is_ok());
                prop_assert_eq!(tr.steps(), tr.component_count() as u64 + seq.total_white() / 2);
                let realised = ColoredMultigraph::with_white_matching(&seq.white, &seq.black, tr.white_match.clone()).unwrap();
                let ex = multiset(tr.components().iter().map(|c| (c.size, c.black_half_edges)).collect());
                let uf = multiset(components(&realised).iter().map(|c| (c.size, c.black_half_edges)).collect());
                prop_assert_eq!(ex, uf);
                for c in tr.components() {
                    prop_assert_eq!(c.size + c.surplus, c.edge_count + 1);
                }
            }
        }
    }
}
