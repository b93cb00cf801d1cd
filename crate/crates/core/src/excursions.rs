//! Excursions above the running minimum, `Γ↓(f, g)` and excursion point processes.
//!
//! Everything is computed on the knot representation of [`CadlagPath`]: an
//! excursion starts where the reflected path leaves zero and ends where its
//! left limit returns to zero. Both events are knots (the reflection inserts
//! knots at hitting times), so endpoints are exact.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::CadlagPath;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcursionInterval<S> {
    pub l: S,
    pub r: S,
    pub length: S,
    /// `g(r-) - g(l-)`; zero when no companion path was supplied.
    pub g_increment: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Excursions<S> {
    /// Completed excursions in order of appearance.
    pub complete: Vec<ExcursionInterval<S>>,
    /// Start of an excursion still running at the horizon.
    pub unfinished_start: Option<S>,
}

/// Maximal excursion intervals of `f` above its running minimum.
pub fn excursion_decompose<S: Scalar>(f: &CadlagPath<S>) -> Result<Excursions<S>> {
    f.check_no_negative_jumps()?;
    let r = f.reflected();
    let zero = S::zero();
    let mut complete = Vec::new();
    let mut open: Option<S> = None;
    for k in r.knots() {
        if let Some(l) = &open {
            if k.left == zero {
                complete.push(ExcursionInterval {
                    l: l.clone(),
                    r: k.time.clone(),
                    length: k.time.clone() - l.clone(),
                    g_increment: zero.clone(),
                });
                open = None;
            }
        }
        if open.is_none() && (k.value > zero || (k.value == zero && k.slope > zero)) {
            open = Some(k.time.clone());
        }
    }
    Ok(Excursions {
        complete,
        unfinished_start: open,
    })
}

fn check_non_decreasing<S: Scalar>(g: &CadlagPath<S>) -> Result<()> {
    for k in g.knots() {
        if k.value < k.left || k.slope < S::zero() {
            return Err(Error::NotNonDecreasing(k.time.as_f64()));
        }
    }
    Ok(())
}

impl<S: Scalar> Excursions<S> {
    /// Fills `g_increment = g(r-) - g(l-)` for every completed excursion.
    pub fn with_increments(mut self, g: &CadlagPath<S>) -> Result<Self> {
        for e in &mut self.complete {
            e.g_increment = g.eval_left(&e.r)? - g.eval_left(&e.l)?;
        }
        Ok(self)
    }
}

/// `Γ↓(f, g)`: `(length, g-increment)` of every completed excursion, by
/// decreasing length with ties kept in order of appearance.
///
/// Increments use left limits, `g(r-) - g(l-)`, which agrees with
/// `g(r) - g(l)` whenever `g` does not jump at the endpoints.
pub fn gamma_down<S: Scalar>(f: &CadlagPath<S>, g: &CadlagPath<S>) -> Result<Vec<(S, S)>> {
    check_non_decreasing(g)?;
    let ex = excursion_decompose(f)?.with_increments(g)?;
    let mut pairs: Vec<(S, S)> = ex
        .complete
        .into_iter()
        .map(|e| (e.length, e.g_increment))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("comparable lengths"));
    Ok(pairs)
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodnessReport {
    /// Isolated points of the zero set cannot be seen on a finite representation.
    pub isolated_points: &'static str,
    /// Time in `[0, last right endpoint]` spent on a flat running minimum.
    pub flat_minimum_measure: f64,
    /// Time in `[0, last right endpoint]` spent descending along the running
    /// minimum. Positive whenever the sum is truncated; reported only.
    pub descending_minimum_measure: f64,
    /// Right endpoints after which the path does not dip below its minimum
    /// within the window, i.e. strict local minima.
    pub local_minimum_endpoints: usize,
    /// Right endpoints too close to the horizon to test.
    pub unchecked_endpoints: usize,
    /// `(ε, number of excursions longer than ε)`.
    pub counts_above: Vec<(f64, usize)>,
    pub flags: Vec<String>,
}

impl GoodnessReport {
    pub fn is_good(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Checks the finitely checkable parts of goodness.
///
/// `window` is the one-sided neighbourhood used for the local-minimum test
/// (a common choice is `1e-6 · horizon`); `tolerance` bounds the flat measure.
pub fn check_good<S: Scalar>(
    f: &CadlagPath<S>,
    epsilon_grid: &[f64],
    window: f64,
    tolerance: f64,
) -> Result<GoodnessReport> {
    let ex = excursion_decompose(f)?;
    let r = f.reflected();
    let last_r = ex.complete.last().map_or(0.0, |e| e.r.as_f64());
    let horizon = f.horizon().as_f64();

    let (mut flat, mut descending) = (0.0, 0.0);
    let knots = r.knots();
    let orig = f.knots();
    for (i, k) in knots.iter().enumerate() {
        let start = k.time.as_f64();
        if start >= last_r {
            break;
        }
        let end = knots.get(i + 1).map_or(horizon, |n| n.time.as_f64()).min(last_r);
        if k.value.is_zero() && k.slope.is_zero() {
            // sitting on the minimum: flat if the original path is flat there
            let j = orig.partition_point(|o| o.time <= k.time) - 1;
            if orig[j].slope.is_zero() {
                flat += end - start;
            } else {
                descending += end - start;
            }
        }
    }

    let mut local_min = 0;
    let mut unchecked = 0;
    for e in &ex.complete {
        let rt = e.r.as_f64();
        if rt + window > horizon {
            unchecked += 1;
            continue;
        }
        let level = f.eval_left(&e.r)?.as_f64();
        let hi = rt + window;
        let mut lowest = f.eval(&S::from_f64_lossy(hi))?.as_f64();
        for k in orig.iter().filter(|k| {
            let t = k.time.as_f64();
            t > rt && t <= hi
        }) {
            lowest = lowest.min(k.left.as_f64()).min(k.value.as_f64());
        }
        if lowest >= level {
            local_min += 1;
        }
    }

    let counts_above = epsilon_grid
        .iter()
        .map(|&eps| {
            (
                eps,
                ex.complete.iter().filter(|e| e.length.as_f64() > eps).count(),
            )
        })
        .collect();

    let mut flags = Vec::new();
    if flat > tolerance {
        flags.push(format!("running minimum is flat on a set of measure {flat}"));
    }
    if local_min > 0 {
        flags.push(format!("{local_min} excursion endpoints are strict local minima"));
    }
    Ok(GoodnessReport {
        isolated_points: "not checkable",
        flat_minimum_measure: flat,
        descending_minimum_measure: descending,
        local_minimum_endpoints: local_min,
        unchecked_endpoints: unchecked,
        counts_above,
        flags,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Atom<S> {
    pub t: S,
    pub length: S,
    pub g_increment: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcursionPointProcess<S> {
    pub atoms: Vec<Atom<S>>,
}

impl<S: Scalar> ExcursionPointProcess<S> {
    /// One atom per completed excursion at its right endpoint.
    pub fn from_excursions(ex: &Excursions<S>) -> Self {
        ExcursionPointProcess {
            atoms: ex
                .complete
                .iter()
                .map(|e| Atom {
                    t: e.r.clone(),
                    length: e.length.clone(),
                    g_increment: e.g_increment.clone(),
                })
                .collect(),
        }
    }

    /// Atoms by decreasing length, ties by smaller `t`.
    pub fn ordered(&self) -> Vec<Atom<S>> {
        let mut a = self.atoms.clone();
        a.sort_by(|x, y| {
            y.length
                .partial_cmp(&x.length)
                .expect("comparable")
                .then(x.t.partial_cmp(&y.t).expect("comparable"))
        });
        a
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,length,g_increment")?;
        for a in &self.atoms {
            writeln!(
                out,
                "{},{},{}",
                a.t.as_f64(),
                a.length.as_f64(),
                a.g_increment.as_f64()
            )?;
        }
        Ok(())
    }
}

/// Atoms `(t_i, t_i - t_{i-1}, g(t_i-) - g(t_{i-1}-))` with `t_0 = 0`.
///
/// Every `t_i` must be a running-minimum time: `f(t_i-) = inf_{s≤t_i} f(s)`.
pub fn point_process_from_hitting_times<S: Scalar>(
    f: &CadlagPath<S>,
    g: &CadlagPath<S>,
    t_list: &[S],
) -> Result<ExcursionPointProcess<S>> {
    let mut atoms = Vec::with_capacity(t_list.len());
    let mut prev = S::zero();
    let mut g_prev = g.eval_left(&prev)?;
    for (i, t) in t_list.iter().enumerate() {
        if (i > 0 && *t <= prev) || *t < S::zero() {
            return Err(Error::Invariant("hitting times must be increasing".into()));
        }
        let inf = f.running_infimum(t)?;
        let left = f.eval_left(t)?;
        let slack = S::from_f64_lossy(1e-9) * S::max_of(S::one(), inf.abs());
        if left.clone() - inf > slack {
            return Err(Error::NotRunningMinimum { time: t.as_f64() });
        }
        let g_now = g.eval_left(t)?;
        atoms.push(Atom {
            t: t.clone(),
            length: t.clone() - prev.clone(),
            g_increment: g_now.clone() - g_prev,
        });
        prev = t.clone();
        g_prev = g_now;
    }
    Ok(ExcursionPointProcess { atoms })
}

/// Window for [`vague_distance`]: atoms with `t ≤ t_max` and `length ≥ min_length`.
#[derive(Clone, Copy, Debug)]
pub struct Window {
    pub t_max: f64,
    pub min_length: f64,
}

/// Greedy matching distance between the atoms inside the window.
///
/// Atoms of `a` are taken by decreasing length and matched to the unmatched
/// atom of `b` with the nearest length. The result is the largest coordinate
/// gap over matched pairs plus one per unmatched atom.
pub fn vague_distance<S: Scalar>(
    a: &ExcursionPointProcess<S>,
    b: &ExcursionPointProcess<S>,
    window: Window,
) -> f64 {
    let inside = |p: &ExcursionPointProcess<S>| -> Vec<[f64; 3]> {
        p.ordered()
            .iter()
            .map(|x| [x.t.as_f64(), x.length.as_f64(), x.g_increment.as_f64()])
            .filter(|x| x[0] <= window.t_max && x[1] >= window.min_length)
            .collect()
    };
    let aa = inside(a);
    let mut bb: Vec<Option<[f64; 3]>> = inside(b).into_iter().map(Some).collect();
    let mut worst = 0.0f64;
    let mut unmatched = 0usize;
    for x in &aa {
        let best = bb
            .iter()
            .enumerate()
            .filter_map(|(j, y)| y.map(|y| (j, (y[1] - x[1]).abs())))
            .min_by(|p, q| p.1.total_cmp(&q.1));
        match best {
            Some((j, _)) => {
                let y = bb[j].take().unwrap();
                let gap = (0..3).map(|c| (x[c] - y[c]).abs()).fold(0.0, f64::max);
                worst = worst.max(gap);
            }
            None => unmatched += 1,
        }
    }
    unmatched += bb.iter().filter(|y| y.is_some()).count();
    worst + unmatched as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_bigint::BigInt;

    fn q(a: i64) -> Rational {
        Rational::from_integer(BigInt::from(a))
    }

    #[test]
    fn pure_down_drift_has_no_excursions() {
        let f = CadlagPath::linear(0.0, -1.0, 10.0);
        let ex = excursion_decompose(&f).unwrap();
        assert!(ex.complete.is_empty());
        assert!(ex.unfinished_start.is_none());
        let rep = check_good(&f, &[1.0], 1e-5, 1e-9).unwrap();
        assert!(rep.is_good());
    }

    #[test]
    fn single_jump_then_drift() {
        let mut b = CadlagPath::builder(q(0), q(-1), q(5));
        b.push(q(1), q(2), q(-1)).unwrap();
        let f = b.finish();
        let ex = excursion_decompose(&f).unwrap();
        assert_eq!(ex.complete.len(), 1);
        assert_eq!((ex.complete[0].l.clone(), ex.complete[0].r.clone()), (q(1), q(3)));
        assert_eq!(ex.complete[0].length, q(2));
    }

    #[test]
    fn negative_jump_rejected() {
        let mut b = CadlagPath::builder(0.0, 0.0, 2.0);
        b.push(1.0, -1.0, 0.0).unwrap();
        assert!(matches!(excursion_decompose(&b.finish()), Err(Error::NegativeJump { .. })));
    }

    fn two_excursions() -> (CadlagPath<f64>, CadlagPath<f64>) {
        // lengths 3 then 1, starting at t = 0 and t = 4
        let mut f = CadlagPath::builder(0.0, -1.0, 6.0);
        f.push(0.0, 3.0, -1.0).unwrap();
        f.push(4.0, 1.0, -1.0).unwrap();
        let mut g = CadlagPath::builder(0.0, 0.0, 6.0);
        g.push(1.0, 5.0, 0.0).unwrap();
        g.push(4.5, 2.0, 0.0).unwrap();
        (f.finish(), g.finish())
    }

    #[test]
    fn gamma_down_hand_construction() {
        let (f, g) = two_excursions();
        assert_eq!(gamma_down(&f, &g).unwrap(), vec![(3.0, 5.0), (1.0, 2.0)]);
        let zero = CadlagPath::linear(0.0, 0.0, 6.0);
        assert!(gamma_down(&f, &zero).unwrap().iter().all(|p| p.1 == 0.0));
        let ident = CadlagPath::linear(0.0, 1.0, 6.0);
        assert!(gamma_down(&f, &ident).unwrap().iter().all(|p| p.0 == p.1));
        let mut bad = CadlagPath::builder(0.0, 0.0, 6.0);
        bad.push(1.0, -1.0, 0.0).unwrap();
        assert!(matches!(gamma_down(&f, &bad.finish()), Err(Error::NotNonDecreasing(_))));
    }

    #[test]
    fn flat_minimum_is_flagged() {
        // excursion, flat stretch of length 2 on the minimum, excursion
        let mut f = CadlagPath::builder(0.0, -1.0, 8.0);
        f.push(0.0, 1.0, -1.0).unwrap();
        f.push(1.0, 0.0, 0.0).unwrap();
        f.push(3.0, 1.0, -1.0).unwrap();
        let rep = check_good(&f.finish(), &[0.5], 1e-6, 1e-9).unwrap();
        assert!((rep.flat_minimum_measure - 2.0).abs() < 1e-12);
        assert!(!rep.is_good());
    }

    #[test]
    fn jump_at_endpoint_is_a_local_minimum() {
        let mut f = CadlagPath::builder(0.0, -1.0, 8.0);
        f.push(0.0, 1.0, -1.0).unwrap();
        f.push(1.0, 1.0, -1.0).unwrap();
        let rep = check_good(&f.finish(), &[], 0.1, 1e-9).unwrap();
        assert_eq!(rep.local_minimum_endpoints, 1);
    }

    #[test]
    fn hitting_time_atoms() {
        let (f, g) = two_excursions();
        let ex = excursion_decompose(&f).unwrap().with_increments(&g).unwrap();
        let t_list: Vec<f64> = ex.complete.iter().map(|e| e.r).collect();
        let pp = point_process_from_hitting_times(&f, &g, &t_list).unwrap();
        // the excursions are separated by a descending stretch, so atom lengths
        // include it; the increments agree
        assert_eq!(pp.atoms[0].length, 3.0);
        assert_eq!(pp.atoms[1].length, 2.0);
        assert_eq!(pp.atoms[1].g_increment, 2.0);
        assert!(matches!(
            point_process_from_hitting_times(&f, &g, &[1.0]),
            Err(Error::NotRunningMinimum { .. })
        ));

        let global = point_process_from_hitting_times(&f, &g, &[6.0]).unwrap();
        assert_eq!(global.atoms, vec![Atom { t: 6.0, length: 6.0, g_increment: 7.0 }]);
    }

    #[test]
    fn vague_distance_basics() {
        let a = ExcursionPointProcess {
            atoms: vec![
                Atom { t: 1.0, length: 1.0, g_increment: 0.5 },
                Atom { t: 3.0, length: 2.0, g_increment: 1.0 },
            ],
        };
        let w = Window { t_max: 10.0, min_length: 0.1 };
        assert_eq!(vague_distance(&a, &a, w), 0.0);
        let mut b = a.clone();
        b.atoms[1].length += 0.25;
        assert!((vague_distance(&a, &b, w) - 0.25).abs() < 1e-12);
        b.atoms.pop();
        assert!(vague_distance(&a, &b, w) >= 1.0);
    }
}
