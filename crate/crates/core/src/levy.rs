//! The thinned Lévy pair `(X, Y)` and the surplus process `N` driven by it.
//!
//! With `ξ_i ~ Exp(θ_i)` independent,
//!
//! ```text
//! X(t) = Σ_i θ_i (1[ξ_i ≤ κt] - θ_i t/κ) + λt
//! Y(t) = Σ_i β_i 1[ξ_i ≤ κt] + αt
//! ```
//!
//! summed over the first `K_max` hubs. Paths are event driven: every hub jump
//! is a knot and the drift between knots is exact.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::degree_model::LimitParameters;
use crate::error::{domain, Error, Result};
use crate::path::CadlagPath;

/// Where hub `i` jumps given its clock `ξ_i ~ Exp(θ_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClockConvention {
    /// Jump at `ξ_i / κ`, i.e. indicator `1[ξ_i ≤ κt]` (hub rate `θ_i κ`).
    AsWritten,
    /// Jump at `κ ξ_i`, i.e. indicator `1[ξ_i ≤ t/κ]` (hub rate `θ_i / κ`).
    ///
    /// This is the rate at which the exploration walk, rescaled by `b_n`,
    /// actually finds hub `i`, and the rate whose compensator is `θ_i² t/κ`.
    DiscoveryRate,
}

impl ClockConvention {
    pub fn jump_time(self, xi: f64, kappa: f64) -> f64 {
        match self {
            ClockConvention::AsWritten => xi / kappa,
            ClockConvention::DiscoveryRate => xi * kappa,
        }
    }

    /// Rate of the exponential jump time of a hub with parameter `θ`.
    pub fn hub_rate(self, theta: f64, kappa: f64) -> f64 {
        match self {
            ClockConvention::AsWritten => theta * kappa,
            ClockConvention::DiscoveryRate => theta / kappa,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ThinnedLevyRealization {
    pub xi: Vec<f64>,
    pub jump_times: Vec<f64>,
    pub x: CadlagPath<f64>,
    pub y: CadlagPath<f64>,
    pub params: LimitParameters,
    pub convention: ClockConvention,
}

/// Drift of `X` between jumps: `λ - Σ_{i≤K} θ_i²/κ`.
pub fn drift(params: &LimitParameters) -> f64 {
    params.lambda - params.theta_power_sum(2) / params.kappa
}

/// Samples the first `k_max` clocks in index order (so a larger `k_max`
/// extends a smaller one on the same seed) and builds both paths on `[0, horizon]`.
pub fn sample_thinned_levy<R: Rng + ?Sized>(
    params: &LimitParameters,
    k_max: usize,
    horizon: f64,
    convention: ClockConvention,
    rng: &mut R,
) -> Result<ThinnedLevyRealization> {
    if k_max == 0 {
        return domain("k_max must be at least 1");
    }
    if !(horizon > 0.0) {
        return domain("horizon must be positive");
    }
    params.validate()?;
    let params = params.truncated(k_max);
    let xi: Vec<f64> = params
        .theta
        .iter()
        .map(|&th| {
            let e: f64 = Exp1.sample(rng);
            e / th
        })
        .collect();
    Ok(realization_from_clocks(params, xi, horizon, convention))
}

/// Builds the paths from given clock values.
pub fn realization_from_clocks(
    params: LimitParameters,
    xi: Vec<f64>,
    horizon: f64,
    convention: ClockConvention,
) -> ThinnedLevyRealization {
    let jump_times: Vec<f64> = xi
        .iter()
        .map(|&x| convention.jump_time(x, params.kappa))
        .collect();
    let mut order: Vec<usize> = (0..xi.len()).filter(|&i| jump_times[i] <= horizon).collect();
    order.sort_by(|&a, &b| jump_times[a].total_cmp(&jump_times[b]));
    let slope = drift(&params);
    let mut bx = CadlagPath::builder(0.0, slope, horizon);
    let mut by = CadlagPath::builder(0.0, params.alpha, horizon);
    for &i in &order {
        bx.push(jump_times[i], params.theta[i], slope)
            .expect("sorted jump times inside horizon");
        if params.beta[i] != 0.0 {
            by.push(jump_times[i], params.beta[i], params.alpha)
                .expect("sorted jump times inside horizon");
        }
    }
    ThinnedLevyRealization {
        xi,
        jump_times,
        x: bx.finish(),
        y: by.finish(),
        params,
        convention,
    }
}

impl ThinnedLevyRealization {
    /// `X(t)` evaluated straight from the defining sum.
    pub fn formula_x(&self, t: f64) -> f64 {
        let p = &self.params;
        let mut s = p.lambda * t;
        for (i, &th) in p.theta.iter().enumerate() {
            let hit = if self.jump_times[i] <= t { 1.0 } else { 0.0 };
            s += th * (hit - th * t / p.kappa);
        }
        s
    }

    /// `Y(t)` evaluated straight from the defining sum.
    pub fn formula_y(&self, t: f64) -> f64 {
        let p = &self.params;
        let mut s = p.alpha * t;
        for (i, &b) in p.beta.iter().enumerate() {
            if self.jump_times[i] <= t {
                s += b;
            }
        }
        s
    }

    /// Largest residual between the paths and the defining sums over a grid.
    pub fn max_residual(&self, grid_step: f64) -> f64 {
        let mut worst = 0.0f64;
        for (t, v) in self.x.sample_grid(&grid_step) {
            worst = worst.max((v - self.formula_x(t)).abs());
        }
        for (t, v) in self.y.sample_grid(&grid_step) {
            worst = worst.max((v - self.formula_y(t)).abs());
        }
        worst
    }

    /// Every jump time of `Y` is a jump time of `X`.
    pub fn y_jumps_within_x_jumps(&self) -> bool {
        let xj: Vec<f64> = self.x.jumps().into_iter().map(|j| j.0).collect();
        self.y
            .jumps()
            .iter()
            .all(|(t, _)| xj.binary_search_by(|p| p.total_cmp(t)).is_ok())
    }
}

/// `E[Y(t)] = αt + Σ β_i P(hub i has jumped by t)`.
pub fn expected_y(params: &LimitParameters, t: f64, convention: ClockConvention) -> f64 {
    let mut s = params.alpha * t;
    for (&th, &b) in params.theta.iter().zip(&params.beta) {
        s += b * (1.0 - (-convention.hub_rate(th, params.kappa) * t).exp());
    }
    s
}

/// `E[X(t)] = λt + Σ θ_i (P(hub i has jumped by t) - θ_i t/κ)`.
pub fn expected_x(params: &LimitParameters, t: f64, convention: ClockConvention) -> f64 {
    let mut s = params.lambda * t;
    for &th in &params.theta {
        let p = 1.0 - (-convention.hub_rate(th, params.kappa) * t).exp();
        s += th * (p - th * t / params.kappa);
    }
    s
}

/// Pathwise bound on `|X_{K'}(T) - X_K(T)|` when both truncations share clocks:
/// `Σ_{K<i≤K'} θ_i (1 + θ_i T/κ)`.
pub fn truncation_bound(params: &LimitParameters, k: usize, k_prime: usize, horizon: f64) -> f64 {
    let hi = k_prime.min(params.k_max());
    params.theta[k.min(hi)..hi]
        .iter()
        .map(|&th| th * (1.0 + th * horizon / params.kappa))
        .sum()
}

/// `X - inf X`, non-negative.
pub fn reflected(x: &CadlagPath<f64>) -> CadlagPath<f64> {
    x.reflected()
}

/// Counting path with conditional intensity `(X(t) - inf_{s≤t} X(s)) dt`.
///
/// On each linear piece of the reflected path the rate is dominated by its
/// larger endpoint; candidate points from that rate are kept with probability
/// `height / bound`.
pub fn sample_surplus_process<R: Rng + ?Sized>(
    x: &CadlagPath<f64>,
    rng: &mut R,
) -> Result<CadlagPath<f64>> {
    surplus_from_height(&x.reflected(), rng)
}

/// Same as [`sample_surplus_process`] but driven by a given non-negative height path.
pub fn surplus_from_height<R: Rng + ?Sized>(
    height: &CadlagPath<f64>,
    rng: &mut R,
) -> Result<CadlagPath<f64>> {
    let horizon = *height.horizon();
    let knots = height.knots();
    let mut b = CadlagPath::builder(0.0, 0.0, horizon);
    for (i, k) in knots.iter().enumerate() {
        if k.value < 0.0 || k.left < 0.0 {
            return Err(Error::Invariant(format!(
                "reflected height negative at t={}",
                k.time
            )));
        }
        let end = knots.get(i + 1).map_or(horizon, |n| n.time);
        let at_end = k.value + k.slope * (end - k.time);
        if at_end < -1e-12 {
            return Err(Error::Invariant(format!("reflected height negative before t={end}")));
        }
        let bound = k.value.max(at_end);
        if bound <= 0.0 {
            continue;
        }
        let mut t = k.time;
        loop {
            let gap: f64 = Exp1.sample(rng);
            t += gap / bound;
            if t >= end {
                break;
            }
            let h = k.value + k.slope * (t - k.time);
            if rng.random::<f64>() * bound < h {
                b.push(t, 1.0, 0.0)?;
            }
        }
    }
    Ok(b.finish())
}

/// Writes `t,X,Y,N` on a grid of `grid_step`.
pub fn write_limit_csv<W: Write>(
    real: &ThinnedLevyRealization,
    surplus: Option<&CadlagPath<f64>>,
    grid_step: f64,
    mut out: W,
) -> Result<()> {
    writeln!(out, "t,X,Y,N")?;
    for (t, xv) in real.x.sample_grid(&grid_step) {
        let yv = real.y.eval(&t)?;
        let nv = match surplus {
            Some(n) => n.eval(&t)?,
            None => 0.0,
        };
        writeln!(out, "{t},{xv},{yv},{nv}")?;
    }
    Ok(())
}
