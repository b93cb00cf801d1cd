//! Càdlàg paths made of linear pieces and jumps.
//!
//! A path on `[0, horizon]` is stored as knots. Each knot records its time,
//! the left limit there, the right value, and the slope that holds until the
//! next knot. Left limits are stored rather than recomputed so that exact
//! zeros produced by the reflection survive floating-point evaluation.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Knot<S> {
    pub time: S,
    pub left: S,
    pub value: S,
    pub slope: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CadlagPath<S> {
    origin: S,
    knots: Vec<Knot<S>>,
    horizon: S,
}

pub struct PathBuilder<S> {
    origin: S,
    knots: Vec<Knot<S>>,
    horizon: S,
}

impl<S: Scalar> PathBuilder<S> {
    /// Continues from the last knot along its slope up to `time`, jumps by
    /// `jump` there and sets a new slope. Pushing at the time of the last knot
    /// merges the jump into it.
    pub fn push(&mut self, time: S, jump: S, slope: S) -> Result<&mut Self> {
        let last = self.knots.last_mut().expect("builder starts with a knot");
        if time < last.time {
            return Err(Error::Invariant("knot times must be non-decreasing".into()));
        }
        if time > self.horizon {
            return Err(Error::BeyondHorizon {
                requested: time.as_f64(),
                horizon: self.horizon.as_f64(),
            });
        }
        if time == last.time {
            last.value = last.value.clone() + jump;
            last.slope = slope;
        } else {
            let left = last.value.clone() + last.slope.clone() * (time.clone() - last.time.clone());
            let value = left.clone() + jump;
            self.knots.push(Knot {
                time,
                left,
                value,
                slope,
            });
        }
        Ok(self)
    }

    pub fn finish(self) -> CadlagPath<S> {
        CadlagPath {
            origin: self.origin,
            knots: self.knots,
            horizon: self.horizon,
        }
    }
}

impl<S: Scalar> CadlagPath<S> {
    pub fn builder(origin: S, initial_slope: S, horizon: S) -> PathBuilder<S> {
        PathBuilder {
            knots: vec![Knot {
                time: S::zero(),
                left: origin.clone(),
                value: origin.clone(),
                slope: initial_slope,
            }],
            origin,
            horizon,
        }
    }

    /// Validates explicit knots: first at time 0, strictly increasing, within the horizon.
    pub fn from_knots(origin: S, knots: Vec<Knot<S>>, horizon: S) -> Result<Self> {
        match knots.first() {
            Some(k) if k.time.is_zero() => {}
            _ => return Err(Error::Invariant("first knot must sit at time 0".into())),
        }
        if knots.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::Invariant("knot times must be strictly increasing".into()));
        }
        if knots.last().unwrap().time > horizon {
            return Err(Error::Invariant("knot beyond horizon".into()));
        }
        if knots[0].left != origin {
            return Err(Error::Invariant("left limit at 0 must equal the origin".into()));
        }
        Ok(CadlagPath {
            origin,
            knots,
            horizon,
        })
    }

    pub fn linear(start: S, slope: S, horizon: S) -> Self {
        Self::builder(start, slope, horizon).finish()
    }

    pub fn origin(&self) -> &S {
        &self.origin
    }

    pub fn horizon(&self) -> &S {
        &self.horizon
    }

    pub fn knots(&self) -> &[Knot<S>] {
        &self.knots
    }

    fn knot_index(&self, t: &S) -> usize {
        self.knots.partition_point(|k| k.time <= *t) - 1
    }

    fn check_time(&self, t: &S) -> Result<()> {
        if *t < S::zero() || *t > self.horizon {
            return Err(Error::BeyondHorizon {
                requested: t.as_f64(),
                horizon: self.horizon.as_f64(),
            });
        }
        Ok(())
    }

    /// Right-continuous value `f(t)`.
    pub fn eval(&self, t: &S) -> Result<S> {
        self.check_time(t)?;
        let k = &self.knots[self.knot_index(t)];
        Ok(k.value.clone() + k.slope.clone() * (t.clone() - k.time.clone()))
    }

    /// Left limit `f(t-)`; at time 0 this is the origin.
    pub fn eval_left(&self, t: &S) -> Result<S> {
        self.check_time(t)?;
        let i = self.knot_index(t);
        let k = &self.knots[i];
        if k.time == *t {
            return Ok(k.left.clone());
        }
        Ok(k.value.clone() + k.slope.clone() * (t.clone() - k.time.clone()))
    }

    /// Value at the horizon, `f(T)`.
    pub fn terminal(&self) -> S {
        let k = self.knots.last().unwrap();
        k.value.clone() + k.slope.clone() * (self.horizon.clone() - k.time.clone())
    }

    /// Non-zero jumps as `(time, size)`.
    pub fn jumps(&self) -> Vec<(S, S)> {
        self.knots
            .iter()
            .filter(|k| k.value != k.left)
            .map(|k| (k.time.clone(), k.value.clone() - k.left.clone()))
            .collect()
    }

    /// Fails on the first negative jump.
    pub fn check_no_negative_jumps(&self) -> Result<()> {
        for k in &self.knots {
            if k.value < k.left {
                return Err(Error::NegativeJump {
                    time: k.time.as_f64(),
                    size: (k.value.clone() - k.left.clone()).as_f64(),
                });
            }
        }
        Ok(())
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.knots
            .iter()
            .all(|k| k.value >= k.left && k.slope >= S::zero())
    }

    /// `t ↦ value_scale · f(time_scale · t)` on `[0, horizon/time_scale]`.
    pub fn rescale(&self, time_scale: S, value_scale: S) -> Self {
        let knots = self
            .knots
            .iter()
            .map(|k| Knot {
                time: k.time.clone() / time_scale.clone(),
                left: k.left.clone() * value_scale.clone(),
                value: k.value.clone() * value_scale.clone(),
                slope: k.slope.clone() * value_scale.clone() * time_scale.clone(),
            })
            .collect();
        CadlagPath {
            origin: self.origin.clone() * value_scale,
            knots,
            horizon: self.horizon.clone() / time_scale,
        }
    }

    /// The same path cut at an earlier horizon.
    pub fn truncate(&self, horizon: S) -> Result<Self> {
        self.check_time(&horizon)?;
        let keep = self.knots.partition_point(|k| k.time <= horizon);
        Ok(CadlagPath {
            origin: self.origin.clone(),
            knots: self.knots[..keep].to_vec(),
            horizon,
        })
    }

    /// `f - inf_{s≤t} f(s)`, exact on the knot representation.
    ///
    /// Where a negative slope carries the path down to its running minimum a
    /// knot is inserted whose left limit and value are exactly zero.
    pub fn reflected(&self) -> Self {
        let zero = S::zero();
        let mut out = Vec::with_capacity(self.knots.len() * 2);
        let mut m = self.origin.clone();
        // true while the path sits on its running minimum with non-positive slope
        let mut tracking = false;
        for (idx, k) in self.knots.iter().enumerate() {
            let m_before = if tracking {
                k.left.clone()
            } else {
                S::min_of(m.clone(), k.left.clone())
            };
            let left = if tracking || k.left <= m_before {
                zero.clone()
            } else {
                k.left.clone() - m_before.clone()
            };
            m = S::min_of(m_before, k.value.clone());
            let value = if k.value <= m {
                zero.clone()
            } else {
                k.value.clone() - m.clone()
            };
            // a hit exactly at the next knot is handled by that knot's left limit,
            // but a hit exactly at the horizon still needs its own knot
            let hits_before = |hit: &S| match self.knots.get(idx + 1) {
                Some(next) => *hit < next.time,
                None => *hit <= self.horizon,
            };
            tracking = false;
            if k.slope >= zero {
                out.push(Knot {
                    time: k.time.clone(),
                    left,
                    value,
                    slope: k.slope.clone(),
                });
            } else if value.is_zero() {
                out.push(Knot {
                    time: k.time.clone(),
                    left,
                    value,
                    slope: zero.clone(),
                });
                tracking = true;
            } else {
                let hit = k.time.clone() + value.clone() / (-k.slope.clone());
                out.push(Knot {
                    time: k.time.clone(),
                    left,
                    value,
                    slope: k.slope.clone(),
                });
                if hits_before(&hit) && hit > k.time {
                    out.push(Knot {
                        time: hit,
                        left: zero.clone(),
                        value: zero.clone(),
                        slope: zero.clone(),
                    });
                    tracking = true;
                }
            }
        }
        CadlagPath {
            origin: zero,
            knots: out,
            horizon: self.horizon.clone(),
        }
    }

    /// Running infimum `inf_{s≤t} f(s)` at a single time.
    pub fn running_infimum(&self, t: &S) -> Result<S> {
        self.check_time(t)?;
        let mut m = self.origin.clone();
        for (idx, k) in self.knots.iter().enumerate() {
            if k.time > *t {
                break;
            }
            m = S::min_of(m, k.left.clone());
            let end = match self.knots.get(idx + 1) {
                Some(next) if next.time <= *t => next.time.clone(),
                _ => t.clone(),
            };
            let at_end = k.value.clone() + k.slope.clone() * (end - k.time.clone());
            m = S::min_of(m, S::min_of(k.value.clone(), at_end));
        }
        Ok(m)
    }

    /// Values on `0, step, 2·step, …` up to the horizon plus the horizon itself.
    pub fn sample_grid(&self, step: &S) -> Vec<(S, S)> {
        let mut out = Vec::new();
        let mut t = S::zero();
        let mut i = 0u64;
        while t < self.horizon {
            out.push((t.clone(), self.eval(&t).expect("inside horizon")));
            i += 1;
            t = step.clone() * S::from_u64(i).expect("grid index fits");
        }
        out.push((self.horizon.clone(), self.terminal()));
        out
    }

    pub fn write_knots_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,left,value,slope")?;
        for k in &self.knots {
            writeln!(
                out,
                "{},{},{},{}",
                k.time.as_f64(),
                k.left.as_f64(),
                k.value.as_f64(),
                k.slope.as_f64()
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(BigInt::from(a), BigInt::from(b))
    }

    fn sawtooth() -> CadlagPath<f64> {
        // jump 2 at t = 0 then drift -1 for three time units
        let mut b = CadlagPath::builder(0.0, -1.0, 3.0);
        b.push(0.0, 2.0, -1.0).unwrap();
        b.finish()
    }

    #[test]
    fn eval_and_left_limits() {
        let mut b = CadlagPath::builder(1.0, 0.5, 4.0);
        b.push(2.0, 3.0, -1.0).unwrap();
        let p = b.finish();
        assert_eq!(p.eval(&1.0).unwrap(), 1.5);
        assert_eq!(p.eval_left(&2.0).unwrap(), 2.0);
        assert_eq!(p.eval(&2.0).unwrap(), 5.0);
        assert_eq!(p.eval(&4.0).unwrap(), 3.0);
        assert_eq!(p.terminal(), 3.0);
        assert_eq!(p.jumps(), vec![(2.0, 3.0)]);
        assert!(p.eval(&4.5).is_err());
    }

    #[test]
    fn reflected_sawtooth_by_hand() {
        let r = sawtooth().reflected();
        let got: Vec<f64> = [0.0, 1.0, 2.0, 3.0].iter().map(|t| r.eval(t).unwrap()).collect();
        assert_eq!(got, vec![2.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.eval_left(&2.0).unwrap(), 0.0);
    }

    #[test]
    fn reflected_of_monotone_paths() {
        let up = CadlagPath::linear(3.0, 2.0, 5.0);
        let r = up.reflected();
        for t in [0.0, 1.0, 2.5, 5.0] {
            assert_eq!(r.eval(&t).unwrap(), up.eval(&t).unwrap() - 3.0);
        }
        let down = CadlagPath::linear(0.0, -1.0, 5.0);
        let r = down.reflected();
        for t in [0.0, 1.0, 2.5, 5.0] {
            assert_eq!(r.eval(&t).unwrap(), 0.0);
        }
    }

    #[test]
    fn rescale_slope() {
        // X(t) = -2t rescaled by a_n = 2 (values) and b_n = 4 (time)
        let p = CadlagPath::linear(0.0, -2.0, 8.0);
        let r = p.rescale(4.0, 0.5);
        assert_eq!(r.knots()[0].slope, -4.0);
        assert_eq!(*r.horizon(), 2.0);
    }

    #[test]
    fn exact_rational_reflection() {
        let mut b = CadlagPath::builder(q(0, 1), q(-1, 3), q(5, 1));
        b.push(q(1, 1), q(1, 1), q(-1, 3)).unwrap();
        let r = b.finish().reflected();
        // f(1) = -1/3 + 1 = 2/3, min so far -1/3, reflected 1 at t=1, hits 0 at t=4
        assert_eq!(r.eval(&q(1, 1)).unwrap(), q(1, 1));
        assert_eq!(r.eval_left(&q(4, 1)).unwrap(), q(0, 1));
        assert_eq!(r.eval(&q(5, 1)).unwrap(), q(0, 1));
    }

    #[test]
    fn running_infimum_matches_reflection() {
        let p = sawtooth();
        assert_eq!(p.running_infimum(&1.0).unwrap(), 0.0);
        assert_eq!(p.running_infimum(&3.0).unwrap(), -1.0);
    }

    proptest! {
        #[test]
        fn reflected_is_path_minus_running_infimum(
            steps in proptest::collection::vec((0.01f64..1.0, 0.0f64..2.0, -2.0f64..1.0), 1..30),
        ) {
            let horizon: f64 = steps.iter().map(|s| s.0).sum::<f64>() + 0.5;
            let mut b = CadlagPath::builder(0.0, -1.0, horizon);
            let mut t = 0.0;
            for (dt, jump, slope) in &steps {
                t += dt;
                b.push(t, *jump, *slope).unwrap();
            }
            let p = b.finish();
            let r = p.reflected();
            let mut s = 0.0;
            while s <= horizon {
                let want = p.eval(&s).unwrap() - p.running_infimum(&s).unwrap();
                let got = r.eval(&s).unwrap();
                prop_assert!(got >= 0.0);
                prop_assert!((got - want).abs() < 1e-9, "t={s} got={got} want={want}");
                s += horizon / 97.0;
            }
        }
    }
}
