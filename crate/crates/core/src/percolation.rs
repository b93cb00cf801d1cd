//! Black-edge percolation dynamics on top of a fixed white graph.
//!
//! * Dynamic: while `Q` black pairs remain unpaired, an event occurs at rate
//!   `Q(t)` and pairs two distinct unpaired black half-edges chosen uniformly.
//! * Modified: events occur at the constant rate `Q(0)`; each picks a uniform
//!   pair among all `2Q(0)` black half-edges and adds an edge, but the two
//!   half-edges stay available.
//!
//! In the modified process a fixed pair of half-edges is chosen at rate
//! `1/(2Q(0)-1)`, so components with `Y_i` and `Y_j` black half-edges merge at
//! rate `Y_i Y_j / (2Q(0)-1)` independently over pairs: the component sizes
//! follow `MC₂(X, Y, s/(2Q(0)-1))`.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::graph::{components, ColoredMultigraph, DisjointSets};
use crate::rng::replicate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    Dynamic,
    Modified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairingEvent {
    pub time: f64,
    /// Black half-edge ids local to the black color.
    pub a: u32,
    pub b: u32,
}

#[derive(Clone, Debug)]
pub struct PercolationState<'g> {
    pub base: &'g ColoredMultigraph,
    pub mode: Mode,
    pub s_max: f64,
    pub q0: u64,
    /// Unpaired black pairs at `s_max` (dynamic), or `q0` (modified).
    pub q: u64,
    pub event_log: Vec<PairingEvent>,
}

/// Uniform sampling without replacement from the still-unpaired half-edges.
struct Pool {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl Pool {
    fn full(n: usize) -> Self {
        Pool {
            items: (0..n as u32).collect(),
            pos: (0..n as u32).collect(),
        }
    }

    fn contains(&self, h: u32) -> bool {
        self.pos[h as usize] != u32::MAX
    }

    fn remove(&mut self, h: u32) {
        let i = self.pos[h as usize] as usize;
        let last = *self.items.last().unwrap();
        self.items.swap_remove(i);
        if last != h {
            self.pos[last as usize] = i as u32;
        }
        self.pos[h as usize] = u32::MAX;
    }

    fn take<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u32 {
        let h = self.items[rng.random_range(0..self.items.len())];
        self.remove(h);
        h
    }
}

fn check_start(g: &ColoredMultigraph, s_max: f64) -> Result<u64> {
    if !(s_max >= 0.0) {
        return domain("time must be non-negative");
    }
    let total = g.black_total() as u64;
    if total % 2 == 1 {
        return Err(Error::Parity {
            color: "black",
            total,
        });
    }
    Ok(total / 2)
}

fn distinct_pair<R: Rng + ?Sized>(count: u32, rng: &mut R) -> (u32, u32) {
    let a = rng.random_range(0..count);
    let mut b = rng.random_range(0..count - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// Pairs black half-edges at rate `Q(t)` up to time `s_max`.
pub fn run_dynamic<'g, R: Rng + ?Sized>(
    g: &'g ColoredMultigraph,
    s_max: f64,
    rng: &mut R,
) -> Result<PercolationState<'g>> {
    let q0 = check_start(g, s_max)?;
    let mut pool = Pool::full(g.black_total());
    let mut q = q0;
    let mut t = 0.0;
    let mut log = Vec::new();
    while q > 0 {
        let gap: f64 = Exp1.sample(rng);
        t += gap / q as f64;
        if t > s_max {
            break;
        }
        let a = pool.take(rng);
        let b = pool.take(rng);
        log.push(PairingEvent { time: t, a, b });
        q -= 1;
    }
    Ok(PercolationState {
        base: g,
        mode: Mode::Dynamic,
        s_max,
        q0,
        q,
        event_log: log,
    })
}

/// Adds an edge for a uniform pair of black half-edges at rate `Q(0)`, never
/// using the half-edges up.
pub fn run_modified<'g, R: Rng + ?Sized>(
    g: &'g ColoredMultigraph,
    s_max: f64,
    rng: &mut R,
) -> Result<PercolationState<'g>> {
    let q0 = check_start(g, s_max)?;
    let mut log = Vec::new();
    if q0 > 0 {
        let count = g.black_total() as u32;
        let mut t = 0.0;
        loop {
            let gap: f64 = Exp1.sample(rng);
            t += gap / q0 as f64;
            if t > s_max {
                break;
            }
            let (a, b) = distinct_pair(count, rng);
            log.push(PairingEvent { time: t, a, b });
        }
    }
    Ok(PercolationState {
        base: g,
        mode: Mode::Modified,
        s_max,
        q0,
        q: q0,
        event_log: log,
    })
}

#[derive(Clone, Debug)]
pub struct CoupledPair<'g> {
    pub dynamic: PercolationState<'g>,
    pub modified: PercolationState<'g>,
    /// Index into the modified log of every accepted dynamic event.
    pub accepted: Vec<usize>,
}

/// Modified events first; the dynamic process keeps an event only if both of
/// its half-edges are still unpaired there.
///
/// The kept events form a subset of the modified ones and, given acceptance,
/// the kept pair is uniform over unpaired half-edges, so the dynamic side has
/// the jump chain of [`run_dynamic`]. Its clock runs at
/// `Q(2Q-1)/(2Q(0)-1) ≤ Q`, slower than [`run_dynamic`] once pairs are used.
pub fn run_coupled<'g, R: Rng + ?Sized>(
    g: &'g ColoredMultigraph,
    s_max: f64,
    rng: &mut R,
) -> Result<CoupledPair<'g>> {
    let modified = run_modified(g, s_max, rng)?;
    let mut pool = Pool::full(g.black_total());
    let mut kept = Vec::new();
    let mut accepted = Vec::new();
    for (i, e) in modified.event_log.iter().enumerate() {
        if pool.contains(e.a) && pool.contains(e.b) {
            pool.remove(e.a);
            pool.remove(e.b);
            kept.push(*e);
            accepted.push(i);
        }
    }
    let dynamic = PercolationState {
        base: g,
        mode: Mode::Dynamic,
        s_max,
        q0: modified.q0,
        q: modified.q0 - kept.len() as u64,
        event_log: kept,
    };
    let pair = CoupledPair {
        dynamic,
        modified,
        accepted,
    };
    pair.check_subset()?;
    Ok(pair)
}

impl CoupledPair<'_> {
    /// Every dynamic edge is a modified edge at the same time.
    pub fn check_subset(&self) -> Result<()> {
        if self.accepted.len() != self.dynamic.event_log.len() {
            return Err(Error::Invariant("acceptance record out of step".into()));
        }
        for (e, &i) in self.dynamic.event_log.iter().zip(&self.accepted) {
            if self.modified.event_log.get(i) != Some(e) {
                return Err(Error::Invariant(format!(
                    "dynamic edge at {} missing from the modified graph",
                    e.time
                )));
            }
        }
        Ok(())
    }
}

impl PercolationState<'_> {
    pub fn check_invariants(&self) -> Result<()> {
        if self.event_log.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::Invariant("event times not strictly increasing".into()));
        }
        match self.mode {
            Mode::Dynamic => {
                if self.q + self.event_log.len() as u64 != self.q0 {
                    return Err(Error::Invariant("Q + events != Q(0)".into()));
                }
                let mut used = vec![false; self.base.black_total()];
                for e in &self.event_log {
                    for h in [e.a, e.b] {
                        if std::mem::replace(&mut used[h as usize], true) {
                            return Err(Error::Invariant(format!("half-edge {h} paired twice")));
                        }
                    }
                }
            }
            Mode::Modified => {
                if self.q != self.q0 {
                    return Err(Error::Invariant("modified Q must stay constant".into()));
                }
            }
        }
        Ok(())
    }

    /// `Q(t)` along the run.
    pub fn q_at(&self, t: f64) -> u64 {
        match self.mode {
            Mode::Modified => self.q0,
            Mode::Dynamic => {
                self.q0 - self.event_log.partition_point(|e| e.time <= t) as u64
            }
        }
    }

    /// Vertex partition of the white graph plus black edges added by time `t`.
    pub fn partition_at(&self, t: f64) -> DisjointSets {
        let g = self.base;
        let mut dsu = DisjointSets::new(g.n());
        for (a, b) in g.white_edges() {
            dsu.union(g.white_owner(a), g.white_owner(b));
        }
        for e in self.event_log.iter().take_while(|e| e.time <= t) {
            dsu.union(g.black_owner(e.a), g.black_owner(e.b));
        }
        dsu
    }

    /// Component root of every vertex at time `t`.
    pub fn labels_at(&self, t: f64) -> Vec<u32> {
        let mut dsu = self.partition_at(t);
        (0..self.base.n() as u32).map(|v| dsu.find(v)).collect()
    }

    /// Component sizes at time `t`, largest first.
    pub fn ordered_sizes_at(&self, t: f64) -> Vec<u64> {
        crate::stats::block_sizes(&self.labels_at(t))
    }

    pub fn ordered_sizes(&self) -> Vec<u64> {
        self.ordered_sizes_at(self.s_max)
    }

    /// Event log with global half-edge ids (black offset by the white total).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "time,half_edge_a,half_edge_b")?;
        let off = self.base.white_total() as u32;
        for e in &self.event_log {
            writeln!(out, "{},{},{}", e.time, e.a + off, e.b + off)?;
        }
        Ok(())
    }
}

/// `(sizes, black half-edge counts)` of the components of the white graph,
/// in the order of [`components`], plus the component index of every black half-edge.
pub fn initial_blocks(g: &ColoredMultigraph) -> (Vec<u64>, Vec<u64>, Vec<u32>) {
    let comps = components(g);
    let mut label = vec![0u32; g.n()];
    for (k, c) in comps.iter().enumerate() {
        for &v in &c.member_vertices {
            label[v as usize] = k as u32;
        }
    }
    let owner_label = (0..g.black_total() as u32)
        .map(|h| label[g.black_owner(h) as usize])
        .collect();
    (
        comps.iter().map(|c| c.size).collect(),
        comps.iter().map(|c| c.black_half_edges).collect(),
        owner_label,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct QTrajectoryReport {
    pub n: usize,
    pub q0: u64,
    pub horizon: f64,
    pub delta_n: f64,
    pub replicates: usize,
    pub mean_sup_deviation: f64,
    pub exceedance_rate: f64,
    pub exceedance_standard_error: f64,
    /// `2γT/(δ_n² n c_n)` with `γ = 2Q(0)/n`.
    pub bound: f64,
    pub exceedance_within_bound: bool,
    pub mean_q_at_one: f64,
    pub expected_q_at_one: f64,
    pub q_at_one_standard_error: f64,
    pub mean_within_band: bool,
}

/// Pure-death trajectory of `Q` from `Q(0)` up to `t_end`; returns event times.
fn death_times<R: Rng + ?Sized>(q0: u64, t_end: f64, rng: &mut R) -> Vec<f64> {
    let mut q = q0;
    let mut t = 0.0;
    let mut out = Vec::new();
    while q > 0 {
        let gap: f64 = Exp1.sample(rng);
        t += gap / q as f64;
        if t > t_end {
            break;
        }
        out.push(t);
        q -= 1;
    }
    out
}

/// Compares `Q(t)/n` with `(Q(0)/n) e^{-t}` uniformly on `[0, T/c_n]` and
/// `Q(1)/n` with its mean. `Q` only depends on the number of black pairs,
/// so the white graph does not enter.
pub fn q_trajectory_check(
    n: usize,
    q0: u64,
    c_n: f64,
    t_over_cn: f64,
    delta_n: f64,
    replicates: usize,
    master_seed: u64,
) -> QTrajectoryReport {
    let horizon = t_over_cn / c_n;
    let nf = n as f64;
    let q0f = q0 as f64;
    let reps: Vec<(f64, f64)> = replicate(master_seed, replicates, |_, rng| {
        let times = death_times(q0, horizon.max(1.0), rng);
        let mut sup = 0.0f64;
        let mut left = 0.0f64;
        let mut q = q0f;
        for &t in times.iter().filter(|&&t| t <= horizon).chain(std::iter::once(&horizon)) {
            // Q is constant on [left, t) while the comparison curve decreases
            sup = sup
                .max((q - q0f * (-left).exp()).abs())
                .max((q - q0f * (-t).exp()).abs());
            left = t;
            q -= 1.0;
        }
        let q_one = q0f - times.iter().filter(|&&t| t <= 1.0).count() as f64;
        (sup / nf, q_one / nf)
    });
    let r = replicates.max(1) as f64;
    let exceed = reps.iter().filter(|x| x.0 > delta_n).count() as f64 / r;
    let exceed_se = (exceed * (1.0 - exceed) / r).sqrt().max(1.0 / r);
    let gamma = 2.0 * q0f / nf;
    let bound = 2.0 * gamma * t_over_cn / (delta_n * delta_n * nf * c_n);
    let mean_one = reps.iter().map(|x| x.1).sum::<f64>() / r;
    let e1 = (-1.0f64).exp();
    let expected_one = q0f / nf * e1;
    let sd_one = (q0f * e1 * (1.0 - e1)).sqrt() / nf;
    let se_one = sd_one / r.sqrt();
    QTrajectoryReport {
        n,
        q0,
        horizon,
        delta_n,
        replicates,
        mean_sup_deviation: reps.iter().map(|x| x.0).sum::<f64>() / r,
        exceedance_rate: exceed,
        exceedance_standard_error: exceed_se,
        bound,
        exceedance_within_bound: exceed <= bound + 4.0 * exceed_se,
        mean_q_at_one: mean_one,
        expected_q_at_one: expected_one,
        q_at_one_standard_error: se_one,
        mean_within_band: (mean_one - expected_one).abs() <= 3.0 * se_one,
    }
}

/// Frequency over fresh dynamic runs that a black edge joins the two given
/// white components directly by time `s`.
pub fn edge_probability_estimate(
    g: &ColoredMultigraph,
    component_i: &[u32],
    component_j: &[u32],
    s: f64,
    replicates: usize,
    master_seed: u64,
) -> Result<f64> {
    let mut side = vec![0u8; g.n()];
    for &v in component_i {
        side[v as usize] = 1;
    }
    for &v in component_j {
        if side[v as usize] == 1 {
            return domain("components overlap");
        }
        side[v as usize] = 2;
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let hits: Vec<Result<bool>> = replicate(master_seed, replicates, |_, rng| {
        let st = run_dynamic(g, s, rng)?;
        Ok(st.event_log.iter().any(|e| {
            let (x, y) = (side[g.black_owner(e.a) as usize], side[g.black_owner(e.b) as usize]);
            (x == 1 && y == 2) || (x == 2 && y == 1)
        }))
    });
    let hits: Vec<bool> = hits.into_iter().collect::<Result<_>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / replicates.max(1) as f64)
}

/// `1 - exp(-(Y_i/b_n)(Y_j/b_n) s)`.
pub fn edge_probability_limit(y_i: f64, y_j: f64, b_n: f64, s: f64) -> f64 {
    1.0 - (-(y_i / b_n) * (y_j / b_n) * s).exp()
}
