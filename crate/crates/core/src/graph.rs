//! The two-color configuration model and its component structure.
//!
//! Half-edges are numbered per color: vertex `v` owns white half-edges
//! `white_start[v]..white_start[v+1]` and likewise for black. Globally (for
//! export) white ids come first and black ids are offset by the white total.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::degree_model::DegreeSequence;
use crate::error::{domain, Error, Result};

/// Marker for a half-edge without a partner.
pub const UNPAIRED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Color {
    White,
    Black,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColoredMultigraph {
    n: usize,
    white_start: Vec<u32>,
    black_start: Vec<u32>,
    white_owner: Vec<u32>,
    black_owner: Vec<u32>,
    /// Partner of each white half-edge.
    pub white_match: Vec<u32>,
    /// Partner of each black half-edge, `UNPAIRED` for absent edges; `None` before any black pairing.
    pub black_match: Option<Vec<u32>>,
}

fn offsets(degrees: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let mut start = Vec::with_capacity(degrees.len() + 1);
    let mut owner = Vec::new();
    let mut acc = 0u32;
    for (v, &d) in degrees.iter().enumerate() {
        start.push(acc);
        acc += d;
        owner.extend(std::iter::repeat_n(v as u32, d as usize));
    }
    start.push(acc);
    (start, owner)
}

fn uniform_matching<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..count as u32).collect();
    ids.shuffle(rng);
    let mut partner = vec![UNPAIRED; count];
    for pair in ids.chunks_exact(2) {
        partner[pair[0] as usize] = pair[1];
        partner[pair[1] as usize] = pair[0];
    }
    partner
}

impl ColoredMultigraph {
    /// Graph with the given degrees and no edges yet.
    pub fn unpaired(white: &[u32], black: &[u32]) -> Result<Self> {
        if white.len() != black.len() {
            return Err(Error::IndexMismatch(white.len(), black.len()));
        }
        let (white_start, white_owner) = offsets(white);
        let (black_start, black_owner) = offsets(black);
        Ok(ColoredMultigraph {
            n: white.len(),
            white_match: vec![UNPAIRED; white_owner.len()],
            white_start,
            black_start,
            white_owner,
            black_owner,
            black_match: None,
        })
    }

    /// Graph with an explicit white matching, validated.
    pub fn with_white_matching(white: &[u32], black: &[u32], white_match: Vec<u32>) -> Result<Self> {
        let mut g = Self::unpaired(white, black)?;
        if white_match.len() != g.white_owner.len() {
            return Err(Error::IndexMismatch(white_match.len(), g.white_owner.len()));
        }
        g.white_match = white_match;
        g.check_invariants()?;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn white_total(&self) -> usize {
        self.white_owner.len()
    }

    pub fn black_total(&self) -> usize {
        self.black_owner.len()
    }

    pub fn white_degree(&self, v: usize) -> u32 {
        self.white_start[v + 1] - self.white_start[v]
    }

    pub fn black_degree(&self, v: usize) -> u32 {
        self.black_start[v + 1] - self.black_start[v]
    }

    pub fn white_half_edges(&self, v: usize) -> std::ops::Range<u32> {
        self.white_start[v]..self.white_start[v + 1]
    }

    pub fn black_half_edges(&self, v: usize) -> std::ops::Range<u32> {
        self.black_start[v]..self.black_start[v + 1]
    }

    pub fn white_owner(&self, h: u32) -> u32 {
        self.white_owner[h as usize]
    }

    pub fn black_owner(&self, h: u32) -> u32 {
        self.black_owner[h as usize]
    }

    /// Involution without fixed points on paired half-edges, for both colors.
    pub fn check_invariants(&self) -> Result<()> {
        fn involution(m: &[u32], color: &str) -> Result<()> {
            for (h, &p) in m.iter().enumerate() {
                if p == UNPAIRED {
                    continue;
                }
                if p as usize >= m.len() || p as usize == h || m[p as usize] as usize != h {
                    return Err(Error::Invariant(format!(
                        "{color} matching is not a fixed-point-free involution at {h}"
                    )));
                }
            }
            Ok(())
        }
        involution(&self.white_match, "white")?;
        if let Some(b) = &self.black_match {
            if b.len() != self.black_total() {
                return Err(Error::IndexMismatch(b.len(), self.black_total()));
            }
            involution(b, "black")?;
        }
        Ok(())
    }

    /// White edges as pairs of local half-edge ids with `a < b`.
    pub fn white_edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.white_match
            .iter()
            .enumerate()
            .filter(|&(h, &p)| p != UNPAIRED && (h as u32) < p)
            .map(|(h, &p)| (h as u32, p))
    }

    /// Present black edges as pairs of local half-edge ids with `a < b`.
    pub fn black_edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.black_match.iter().flat_map(|m| {
            m.iter()
                .enumerate()
                .filter(|&(h, &p)| p != UNPAIRED && (h as u32) < p)
                .map(|(h, &p)| (h as u32, p))
        })
    }

    /// Pairs every black half-edge uniformly at random.
    pub fn sample_black_matching<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.black_total() % 2 == 1 {
            return Err(Error::Parity {
                color: "black",
                total: self.black_total() as u64,
            });
        }
        self.black_match = Some(uniform_matching(self.black_total(), rng));
        Ok(())
    }

    /// Edge list with global half-edge ids (black offset by the white total).
    pub fn write_edge_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "half_edge_a,half_edge_b,color")?;
        for (a, b) in self.white_edges() {
            writeln!(out, "{a},{b},white")?;
        }
        let off = self.white_total() as u32;
        for (a, b) in self.black_edges() {
            writeln!(out, "{},{},black", a + off, b + off)?;
        }
        Ok(())
    }
}

/// `G_n(0)`: uniform white matching, black half-edges left unpaired.
pub fn sample_white_matching<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    rng: &mut R,
) -> Result<ColoredMultigraph> {
    seq.check_invariants()?;
    let mut g = ColoredMultigraph::unpaired(&seq.white, &seq.black)?;
    g.white_match = uniform_matching(g.white_total(), rng);
    g.check_invariants()?;
    Ok(g)
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = self.parent[x as usize];
        }
        x
    }

    /// Returns the new root, or `None` if already joined.
    pub fn union(&mut self, a: u32, b: u32) -> Option<u32> {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        Some(ra)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentSummary {
    pub member_vertices: Vec<u32>,
    pub size: u64,
    pub black_half_edges: u64,
    pub white_edges: u64,
    /// Black edges present inside the component (zero in `G_n(0)`).
    pub black_edges: u64,
    pub surplus: u64,
}

impl ComponentSummary {
    /// `size = edges + 1 - surplus`.
    pub fn euler_holds(&self) -> bool {
        self.size + self.surplus == self.white_edges + self.black_edges + 1
    }
}

/// Connected components over all present edges, largest first, ties broken
/// by smallest member vertex.
pub fn components(g: &ColoredMultigraph) -> Vec<ComponentSummary> {
    let mut dsu = DisjointSets::new(g.n);
    for (a, b) in g.white_edges() {
        dsu.union(g.white_owner(a), g.white_owner(b));
    }
    for (a, b) in g.black_edges() {
        dsu.union(g.black_owner(a), g.black_owner(b));
    }
    let mut slot = vec![u32::MAX; g.n];
    let mut out: Vec<ComponentSummary> = Vec::new();
    for v in 0..g.n as u32 {
        let r = dsu.find(v) as usize;
        if slot[r] == u32::MAX {
            slot[r] = out.len() as u32;
            out.push(ComponentSummary {
                member_vertices: Vec::new(),
                size: 0,
                black_half_edges: 0,
                white_edges: 0,
                black_edges: 0,
                surplus: 0,
            });
        }
        let c = &mut out[slot[r] as usize];
        c.member_vertices.push(v);
        c.size += 1;
        c.black_half_edges += g.black_degree(v as usize) as u64;
    }
    for (a, _) in g.white_edges() {
        let r = dsu.find(g.white_owner(a)) as usize;
        out[slot[r] as usize].white_edges += 1;
    }
    for (a, _) in g.black_edges() {
        let r = dsu.find(g.black_owner(a)) as usize;
        out[slot[r] as usize].black_edges += 1;
    }
    for c in &mut out {
        c.surplus = c.white_edges + c.black_edges + 1 - c.size;
    }
    // members are pushed in increasing order, so the first is the smallest
    out.sort_by(|a, b| {
        b.size
            .cmp(&a.size)
            .then(a.member_vertices[0].cmp(&b.member_vertices[0]))
    });
    out
}

/// Keeps each black edge independently with probability `p`.
pub fn percolate_black<R: Rng + ?Sized>(
    g: &ColoredMultigraph,
    p: f64,
    rng: &mut R,
) -> Result<ColoredMultigraph> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("keep probability {p} outside [0,1]"));
    }
    let Some(m) = &g.black_match else {
        return Err(Error::Invariant("black matching required".into()));
    };
    let mut kept = m.clone();
    for (h, &partner) in m.iter().enumerate() {
        if partner != UNPAIRED && (h as u32) < partner && !rng.random_bool(p) {
            kept[h] = UNPAIRED;
            kept[partner as usize] = UNPAIRED;
        }
    }
    let mut out = g.clone();
    out.black_match = Some(kept);
    Ok(out)
}
