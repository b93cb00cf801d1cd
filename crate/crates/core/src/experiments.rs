//! Desk-scale convergence experiments for the component sizes of `G_n(0)` and
//! of the percolated graph `G_n(μγ_n/c_n)`.
//!
//! Finite-n side: one degree sequence per `n` (hubs `d_i = round(θ_i a_n)`,
//! black `round(β_i b_n)`, i.i.d. bulk, tuned to `ν_n = 1 + λ/c_n`), fresh
//! white matchings per replicate. Limit side: the thinned Lévy pair with the
//! same hub profile under [`ClockConvention::DiscoveryRate`], decomposed into
//! `Γ↓(X, Y)`; for the percolated graph the blocks are then coalesced by
//! `MC₂(·, μ)`.
//!
//! Every theorem here is a distributional limit without a rate, so the
//! acceptance signal is the trend of the KS statistic across `n`, not its size.

use serde::{Deserialize, Serialize};

use crate::degree_model::{
    build_degree_sequence, make_scaling, tune_to_criticality, BulkSpec, DegreeSequence,
    DiscreteLaw, LimitParameters, ScalingConstants,
};
use crate::error::{domain, Result};
use crate::excursions::gamma_down;
use crate::graph::{components, sample_white_matching, ColoredMultigraph};
use crate::levy::{sample_thinned_levy, ClockConvention, ThinnedLevyRealization};
use crate::mcmw::{mcmw_rank_one, MassWeightVector};
use crate::percolation::run_dynamic;
use crate::rng::{replicate, seed_stream, stream_rng};
use crate::stats::{ks_two_sample, KsResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_grid: Vec<usize>,
    pub tau: f64,
    /// Value of the slowly varying function, held constant across `n`.
    pub l_value: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Finite-n replicates per grid point.
    pub replicates: usize,
    pub limit_replicates: usize,
    pub seed: u64,
    /// Hubs kept in the limit process.
    pub k_max: usize,
    /// Vertex `i` is a hub at size `n` when `θ_i a_n` reaches this degree.
    pub hub_min_degree: f64,
    /// Size of the sequence the limit constants `κ, α, γ` are read from.
    pub reference_n: usize,
    /// Top coordinates compared; the rest counts as tail mass.
    pub top_j: usize,
    pub theta_scale: f64,
    pub beta_scale: f64,
    pub beta_rho: f64,
    pub limit_horizon: f64,
    pub bulk: BulkSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_grid: vec![1_000, 10_000, 100_000],
            tau: 3.5,
            l_value: 1.0,
            lambda: 0.0,
            mu: 1.0,
            replicates: 1_000,
            limit_replicates: 20_000,
            seed: 1,
            k_max: 10_000,
            hub_min_degree: 4.0,
            reference_n: 1_000_000,
            top_j: 20,
            theta_scale: 0.5,
            beta_scale: 0.5,
            beta_rho: 2.0,
            limit_horizon: 1000.0,
            bulk: BulkSpec {
                white: DiscreteLaw::from_weights(1, &[0.5, 0.3, 0.2]).expect("valid law"),
                black: DiscreteLaw::from_weights(0, &[0.5, 0.5]).expect("valid law"),
            },
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return domain("n_grid is empty");
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return domain("n_grid must be increasing");
        }
        if self.replicates == 0 || self.limit_replicates == 0 {
            return domain("replicates must be at least 1");
        }
        if self.top_j == 0 || self.k_max == 0 {
            return domain("top_j and k_max must be at least 1");
        }
        if !(self.mu >= 0.0) {
            return domain("mu must be non-negative");
        }
        if !(self.limit_horizon > 0.0) {
            return domain("limit_horizon must be positive");
        }
        if !(self.hub_min_degree >= 1.0) {
            return domain("hub_min_degree must be at least 1");
        }
        for &n in &self.n_grid {
            make_scaling(n, self.tau, self.l_value)?;
        }
        self.profile(0.0, 0.0, 1.0, 0.0)?;
        Ok(())
    }

    fn profile(&self, alpha: f64, lambda: f64, kappa: f64, gamma: f64) -> Result<LimitParameters> {
        LimitParameters::power_law(
            self.tau,
            self.k_max,
            self.theta_scale,
            self.beta_scale,
            self.beta_rho,
            alpha,
            lambda,
            kappa,
            gamma,
        )
    }

    /// Number of hubs at size `n`: indices with `θ_i a_n ≥ hub_min_degree`.
    pub fn hub_count(&self, scaling: &ScalingConstants) -> usize {
        let e = 1.0 / (self.tau - 1.0);
        let ratio = self.theta_scale * scaling.a_n / self.hub_min_degree;
        let k = if ratio < 1.0 { 0.0 } else { ratio.powf(1.0 / e).floor() };
        (k as usize).min(self.k_max).min(scaling.n / 2)
    }

    /// Degree sequence for grid size `n`, tuned to `ν_n = 1 + λ/c_n`.
    pub fn degree_sequence(&self, n: usize) -> Result<DegreeSequence> {
        let scaling = make_scaling(n, self.tau, self.l_value)?;
        let mut rng = stream_rng(self.seed, STREAM_DEGREES ^ n as u64);
        let seq = build_degree_sequence(
            scaling,
            self.profile(0.0, self.lambda, 1.0, 0.0)?,
            self.hub_count(&scaling),
            &self.bulk,
            &mut rng,
        )?;
        tune_to_criticality(&seq, self.lambda)
    }

    /// Limit profile. `κ = ℓ/n`, `γ = n⁻¹ Σ d^(b)` and the black drift
    /// `α = Σ_{non-hubs} d^(w) d^(b) / ℓ` are read off the tuned sequence of
    /// size `reference_n`.
    pub fn limit_parameters(&self) -> Result<LimitParameters> {
        let seq = self.degree_sequence(self.reference_n)?;
        let ell = seq.total_white() as f64;
        let n = seq.len() as f64;
        let hubs = seq.hub_count;
        // hubs sit at the front after arrange(): their degrees dominate
        let alpha = seq.white[hubs..]
            .iter()
            .zip(&seq.black[hubs..])
            .map(|(&w, &b)| w as f64 * b as f64)
            .sum::<f64>()
            / ell;
        self.profile(alpha, self.lambda, ell / n, seq.total_black() as f64 / n)
    }
}

const STREAM_DEGREES: u64 = 1 << 40;
const STREAM_GRAPH: u64 = 2 << 40;
const STREAM_PERCOLATION: u64 = 3 << 40;
const STREAM_LIMIT: u64 = 4 << 40;
const STREAM_COALESCENT: u64 = 5 << 40;

/// White graph of replicate `rep` at the size of `seq`, as used by [`finite_samples`].
pub fn replicate_graph(
    config: &ExperimentConfig,
    seq: &DegreeSequence,
    rep: usize,
) -> Result<ColoredMultigraph> {
    let graph_seed = seed_stream(config.seed, STREAM_GRAPH ^ seq.len() as u64);
    sample_white_matching(seq, &mut stream_rng(graph_seed, rep as u64))
}

/// Limit realization of replicate `rep`, as used by [`limit_samples`].
pub fn limit_realization(config: &ExperimentConfig, rep: usize) -> Result<ThinnedLevyRealization> {
    let levy_seed = seed_stream(config.seed, STREAM_LIMIT);
    sample_thinned_levy(
        &config.limit_parameters()?,
        config.k_max,
        config.limit_horizon,
        ClockConvention::DiscoveryRate,
        &mut stream_rng(levy_seed, rep as u64),
    )
}

/// Rescaled `(size, black half-edges)` of the components, largest first.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RescaledSample {
    pub pairs: Vec<(f64, f64)>,
    /// `Σ_{j > J} (x_j² + y_j²)` of the discarded coordinates.
    pub tail_mass: f64,
}

impl RescaledSample {
    fn from_pairs(mut pairs: Vec<(f64, f64)>, top_j: usize) -> Self {
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let tail_mass = pairs.iter().skip(top_j).map(|(x, y)| x * x + y * y).sum();
        pairs.truncate(top_j);
        RescaledSample { pairs, tail_mass }
    }

    pub fn size(&self, j: usize) -> f64 {
        self.pairs.get(j).map_or(0.0, |p| p.0)
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.pairs.get(j).map_or(0.0, |p| p.1)
    }
}

/// `b_n⁻¹(#C(j), #H^(b)(C(j)))` for the white graph and, when `mu > 0`, the
/// component sizes after percolating black edges up to `μγ_n/c_n`.
pub fn finite_samples(
    config: &ExperimentConfig,
    seq: &DegreeSequence,
    mu: f64,
) -> Result<Vec<RescaledSample>> {
    let b_n = seq.scaling.b_n;
    let gamma_n = seq.total_black() as f64 / seq.len() as f64;
    let s = mu * gamma_n / seq.scaling.c_n;
    let graph_seed = seed_stream(config.seed, STREAM_GRAPH ^ seq.len() as u64);
    let perc_seed = seed_stream(config.seed, STREAM_PERCOLATION ^ seq.len() as u64);
    let out: Vec<Result<RescaledSample>> = replicate(graph_seed, config.replicates, |i, rng| {
        let g = sample_white_matching(seq, rng)?;
        let pairs = if mu == 0.0 {
            components(&g)
                .iter()
                .map(|c| (c.size as f64 / b_n, c.black_half_edges as f64 / b_n))
                .collect()
        } else {
            let mut prng = stream_rng(perc_seed, i as u64);
            let st = run_dynamic(&g, s, &mut prng)?;
            let mut dsu = st.partition_at(s);
            let mut acc = vec![(0.0, 0.0); g.n()];
            for v in 0..g.n() {
                let r = dsu.find(v as u32) as usize;
                acc[r].0 += 1.0;
                acc[r].1 += g.black_degree(v) as f64;
            }
            acc.into_iter()
                .filter(|p| p.0 > 0.0)
                .map(|(x, y)| (x / b_n, y / b_n))
                .collect()
        };
        Ok(RescaledSample::from_pairs(pairs, config.top_j))
    });
    out.into_iter().collect()
}

/// `Γ↓(X, Y)` samples, optionally coalesced by `MC₂(·, μ)` (weights carried along).
pub fn limit_samples(config: &ExperimentConfig, mu: f64) -> Result<Vec<RescaledSample>> {
    let params = config.limit_parameters()?;
    let levy_seed = seed_stream(config.seed, STREAM_LIMIT);
    let mc_seed = seed_stream(config.seed, STREAM_COALESCENT);
    let out: Vec<Result<RescaledSample>> =
        replicate(levy_seed, config.limit_replicates, |i, rng| {
            let real = sample_thinned_levy(
                &params,
                config.k_max,
                config.limit_horizon,
                ClockConvention::DiscoveryRate,
                rng,
            )?;
            let mut pairs = gamma_down(&real.x, &real.y)?;
            if mu > 0.0 && pairs.len() > 1 {
                let v = MassWeightVector::new(
                    pairs.iter().map(|p| p.0).collect(),
                    pairs.iter().map(|p| p.1).collect(),
                )?;
                let (_, mut sys) = mcmw_rank_one(&v, mu, &mut stream_rng(mc_seed, i as u64))?;
                pairs = sys.blocks();
            }
            Ok(RescaledSample::from_pairs(pairs, config.top_j))
        });
    out.into_iter().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GridPointReport {
    pub n: usize,
    pub scaling: ScalingConstants,
    pub criticality: f64,
    /// KS between finite and limit marginals of the `j`-th largest size, `j < 3`.
    pub ks_sizes: Vec<KsResult>,
    /// KS for the black half-edge count of the largest component.
    pub ks_largest_weight: KsResult,
    pub mean_largest_finite: f64,
    pub mean_largest_limit: f64,
    pub mean_tail_mass: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendReport {
    /// `(n_small, n_large, ks(n_large) <= ks(n_small))` over all ordered pairs.
    pub comparisons: Vec<(usize, usize, bool)>,
    pub holding: usize,
    /// At least two comparisons hold (or all of them when fewer than three exist).
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub mu: f64,
    pub grid: Vec<GridPointReport>,
    pub limit_mean_tail_mass: f64,
    pub trend: TrendReport,
}

/// One line of the JSON output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonRecord {
    pub experiment: String,
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub tail_mass: f64,
    pub seed: u64,
}

impl ExperimentReport {
    pub fn records(&self) -> Vec<JsonRecord> {
        self.grid
            .iter()
            .map(|g| JsonRecord {
                experiment: self.experiment.clone(),
                n: g.n,
                statistic: g.ks_sizes[0].statistic,
                p_value: g.ks_sizes[0].p_value,
                tail_mass: g.mean_tail_mass,
                seed: g.seed,
            })
            .collect()
    }
}

/// Non-increasing KS statistic over every pair of grid points.
pub fn evaluate_trend(n_grid: &[usize], statistic: &[f64]) -> TrendReport {
    let mut comparisons = Vec::new();
    for a in 0..statistic.len() {
        for b in a + 1..statistic.len() {
            comparisons.push((n_grid[a], n_grid[b], statistic[b] <= statistic[a]));
        }
    }
    let holding = comparisons.iter().filter(|c| c.2).count();
    let needed = comparisons.len().min(2);
    TrendReport {
        pass: holding >= needed,
        comparisons,
        holding,
    }
}

fn column(samples: &[RescaledSample], f: impl Fn(&RescaledSample) -> f64) -> Vec<f64> {
    samples.iter().map(f).collect()
}

fn run(config: &ExperimentConfig, name: &str, mu: f64) -> Result<ExperimentReport> {
    config.validate()?;
    let limit = limit_samples(config, mu)?;
    let mut grid = Vec::new();
    for &n in &config.n_grid {
        let seq = config.degree_sequence(n)?;
        let finite = finite_samples(config, &seq, mu)?;
        let ks_sizes = (0..3)
            .map(|j| ks_two_sample(&column(&finite, |s| s.size(j)), &column(&limit, |s| s.size(j))))
            .collect::<Result<Vec<_>>>()?;
        let ks_largest_weight =
            ks_two_sample(&column(&finite, |s| s.weight(0)), &column(&limit, |s| s.weight(0)))?;
        let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        grid.push(GridPointReport {
            n,
            scaling: seq.scaling,
            criticality: crate::degree_model::criticality(&seq),
            ks_sizes,
            ks_largest_weight,
            mean_largest_finite: mean(column(&finite, |s| s.size(0))),
            mean_largest_limit: mean(column(&limit, |s| s.size(0))),
            mean_tail_mass: mean(column(&finite, |s| s.tail_mass)),
            seed: config.seed,
        });
    }
    let stats: Vec<f64> = grid.iter().map(|g| g.ks_sizes[0].statistic).collect();
    Ok(ExperimentReport {
        experiment: name.to_string(),
        mu,
        limit_mean_tail_mass: column(&limit, |s| s.tail_mass).iter().sum::<f64>()
            / limit.len() as f64,
        trend: evaluate_trend(&config.n_grid, &stats),
        grid,
    })
}

/// Largest components of `G_n(0)` against `Γ↓(X, Y)`.
pub fn theorem_1_6_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run(config, "thm16", 0.0)
}

/// Largest components after black percolation up to `μγ_n/c_n` against
/// `MC₂(Γ↓(X, Y), μ)`. With `μ = 0` this is the white-graph experiment.
pub fn theorem_1_7_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run(config, "thm17", config.mu)
}
