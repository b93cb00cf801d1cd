//! One function per experiment; each returns the files it wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use hcm_core::degree_model::{criticality, read_degree_csv, validate_assumptions, BulkSpec, DegreeSequence, DiscreteLaw};
use hcm_core::excursions::gamma_down;
use hcm_core::experiments::{
    limit_realization, replicate_graph, theorem_1_6_experiment, theorem_1_7_experiment,
    ExperimentConfig, ExperimentReport,
};
use hcm_core::exploration::{explore, ExploreMode};
use hcm_core::levy::{expected_y, sample_surplus_process, sample_thinned_levy, write_limit_csv, ClockConvention};
use hcm_core::mcmw::{mcmw_graphical, mcmw_rank_one, susceptibility, MassWeightVector};
use hcm_core::percolation::{run_coupled, run_dynamic, run_modified, PercolationState};
use hcm_core::rng::{replicate, seed_stream, stream_rng};

use crate::{CliError, Config};

pub struct RunOptions {
    pub out_dir: PathBuf,
    pub dump_graph: bool,
    pub dump_trace: Option<usize>,
    pub dump_limit_path: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    config_hash: String,
    master_seed: u64,
    versions: [(&'static str, &'static str); 2],
    threads: usize,
    started_unix: f64,
    finished_unix: f64,
    outputs: Vec<String>,
}

const STREAM_TRACE: u64 = 0x7472_6163_6500;
const STREAM_PERCOLATE: u64 = 0x7065_7263_0000;
const STREAM_SURPLUS: u64 = 0x7375_7270_0000;

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn file(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut f = self.file(name)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }
}

pub fn run(cfg: &Config, opts: &RunOptions) -> Result<(), CliError> {
    let started = now();
    let experiment: String = cfg.require("experiment")?;
    let seed: u64 = cfg.get_or("seed", 1)?;
    let ec = experiment_config(cfg, seed)?;
    fs::create_dir_all(&opts.out_dir)?;
    let mut out = Outputs {
        dir: opts.out_dir.clone(),
        written: Vec::new(),
    };
    // every key is read before any heavy work starts, so typos fail fast
    let job = Job::read(&experiment, cfg)?;
    cfg.check_all_used()?;
    match job {
        Job::Theorem(mu_kind) => theorem(&ec, mu_kind, opts, &mut out)?,
        Job::Mcmw(j) => mcmw(&j, seed, &mut out)?,
        Job::Percolate(j) => percolate(&ec, &j, seed, &mut out)?,
        Job::Levy(j) => levy(&ec, &j, seed, opts, &mut out)?,
        Job::Degrees(j) => degrees(&ec, &j, &mut out)?,
    }
    let manifest = Manifest {
        experiment: &experiment,
        config_hash: cfg.hash(),
        master_seed: seed,
        versions: [
            ("hcm-core", hcm_core::VERSION),
            ("hcm-cli", env!("CARGO_PKG_VERSION")),
        ],
        threads: rayon::current_num_threads(),
        started_unix: started,
        finished_unix: now(),
        outputs: out.written.clone(),
    };
    let mut f = BufWriter::new(File::create(out.dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn law(cfg: &Config, key: &str, start: u32, default: &DiscreteLaw) -> Result<DiscreteLaw, CliError> {
    match cfg.list::<f64>(key)? {
        None => Ok(default.clone()),
        Some(w) => Ok(DiscreteLaw::from_weights(start, &w)?),
    }
}

/// Experiment parameters from the config; missing keys keep the defaults.
pub fn experiment_config(cfg: &Config, seed: u64) -> Result<ExperimentConfig, CliError> {
    let d = ExperimentConfig::default();
    let ec = ExperimentConfig {
        n_grid: cfg.list("n_grid")?.unwrap_or(d.n_grid),
        tau: cfg.get_or("tau", d.tau)?,
        l_value: cfg.get_or("L", d.l_value)?,
        lambda: cfg.get_or("lambda", d.lambda)?,
        mu: cfg.get_or("mu", d.mu)?,
        replicates: cfg.get_or("replicates", d.replicates)?,
        limit_replicates: cfg.get_or("limit_replicates", d.limit_replicates)?,
        seed,
        k_max: cfg.get_or("k_max", d.k_max)?,
        hub_min_degree: cfg.get_or("hub_min_degree", d.hub_min_degree)?,
        reference_n: cfg.get_or("reference_n", d.reference_n)?,
        top_j: cfg.get_or("top_j", d.top_j)?,
        theta_scale: cfg.get_or("theta_scale", d.theta_scale)?,
        beta_scale: cfg.get_or("beta_scale", d.beta_scale)?,
        beta_rho: cfg.get_or("beta_rho", d.beta_rho)?,
        limit_horizon: cfg.get_or("limit_horizon", d.limit_horizon)?,
        bulk: BulkSpec {
            white: law(cfg, "bulk_white", 1, &d.bulk.white)?,
            black: law(cfg, "bulk_black", 0, &d.bulk.black)?,
        },
    };
    ec.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(ec)
}

enum Job {
    Theorem(bool),
    Mcmw(McmwJob),
    Percolate(PercolateJob),
    Levy(LevyJob),
    Degrees(DegreesJob),
}

struct McmwJob {
    masses: Vec<f64>,
    weights: Vec<f64>,
    time: f64,
    reps: usize,
    shared_clocks: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum PercMode {
    Dynamic,
    Modified,
    Coupled,
}

struct PercolateJob {
    n: usize,
    mode: PercMode,
    time: Option<f64>,
    mu: Option<f64>,
    reps: usize,
}

struct LevyJob {
    reps: usize,
    grid_step: f64,
    convention: ClockConvention,
}

struct DegreesJob {
    degrees_file: Option<PathBuf>,
    k: usize,
    tolerance: f64,
}

impl Job {
    fn read(name: &str, cfg: &Config) -> Result<Job, CliError> {
        Ok(match name {
            "thm16" => Job::Theorem(false),
            "thm17" => Job::Theorem(true),
            "mcmw" => {
                let masses: Vec<f64> = cfg
                    .list("masses")?
                    .ok_or_else(|| CliError::Config("mcmw needs masses".into()))?;
                let weights = cfg.list("weights")?.unwrap_or_else(|| masses.clone());
                let coupling: String = cfg.get_or("coupling", "xi".to_string())?;
                let shared_clocks = match coupling.as_str() {
                    "xi" => true,
                    "none" => false,
                    other => return Err(CliError::Config(format!("coupling must be xi or none, got {other}"))),
                };
                Job::Mcmw(McmwJob {
                    masses,
                    weights,
                    time: cfg.require("time")?,
                    reps: cfg.get_or("reps", 1)?,
                    shared_clocks,
                })
            }
            "percolate" => {
                let mode = match cfg.get_or("mode", "dynamic".to_string())?.as_str() {
                    "dynamic" => PercMode::Dynamic,
                    "modified" => PercMode::Modified,
                    "coupled" => PercMode::Coupled,
                    other => return Err(CliError::Config(format!("unknown mode {other}"))),
                };
                let time = cfg.get("time")?;
                let mu = if cfg.contains("mu") { cfg.get("mu")? } else { None };
                if time.is_some() == mu.is_some() {
                    return Err(CliError::Config("percolate needs exactly one of time, mu".into()));
                }
                let n_default = cfg.list::<usize>("n_grid")?.and_then(|g| g.first().copied());
                Job::Percolate(PercolateJob {
                    n: cfg.get("n")?.or(n_default).unwrap_or(1_000),
                    mode,
                    time,
                    mu,
                    reps: cfg.get_or("reps", 1)?,
                })
            }
            "levy" => {
                let convention = match cfg.get_or("convention", "discovery_rate".to_string())?.as_str() {
                    "discovery_rate" => ClockConvention::DiscoveryRate,
                    "as_written" => ClockConvention::AsWritten,
                    other => return Err(CliError::Config(format!("unknown convention {other}"))),
                };
                Job::Levy(LevyJob {
                    reps: cfg.get_or("reps", 1)?,
                    grid_step: cfg.get_or("grid_step", 0.1)?,
                    convention,
                })
            }
            "validate-degrees" => Job::Degrees(DegreesJob {
                degrees_file: cfg.get::<String>("degrees_file")?.map(PathBuf::from),
                k: cfg.get_or("assumption_k", 20)?,
                tolerance: cfg.get_or("tolerance", 0.1)?,
            }),
            other => return Err(CliError::Config(format!("unknown experiment {other}"))),
        })
    }
}

fn theorem(ec: &ExperimentConfig, percolated: bool, opts: &RunOptions, out: &mut Outputs) -> Result<(), CliError> {
    let report: ExperimentReport = if percolated {
        theorem_1_7_experiment(ec)?
    } else {
        theorem_1_6_experiment(ec)?
    };
    let name = report.experiment.clone();
    let records = report.records();
    out.json(&format!("{name}_records.json"), &records)?;
    let mut csv = out.file(&format!("{name}_records.csv"))?;
    writeln!(csv, "experiment,n,statistic,p_value,tail_mass,seed")?;
    for r in &records {
        writeln!(csv, "{},{},{},{},{},{}", r.experiment, r.n, r.statistic, r.p_value, r.tail_mass, r.seed)?;
    }
    csv.flush()?;
    out.json(&format!("{name}_report.json"), &report)?;
    for &n in &ec.n_grid {
        if !opts.dump_graph && opts.dump_trace.is_none() {
            break;
        }
        let seq = ec.degree_sequence(n)?;
        let g = replicate_graph(ec, &seq, 0)?;
        if opts.dump_graph {
            let mut f = out.file(&format!("graph_n{n}.csv"))?;
            g.write_edge_csv(&mut f)?;
            f.flush()?;
        }
        if let Some(stride) = opts.dump_trace {
            let tr = explore(&g, ExploreMode::Replay, &mut stream_rng(seed_stream(ec.seed, STREAM_TRACE), n as u64))?;
            tr.check_identities(&seq.white, &seq.black)?;
            let mut f = out.file(&format!("trace_n{n}.csv"))?;
            tr.write_csv(&mut f, stride.max(1))?;
            f.flush()?;
        }
    }
    if opts.dump_limit_path {
        let real = limit_realization(ec, 0)?;
        let surplus = sample_surplus_process(&real.x, &mut stream_rng(seed_stream(ec.seed, STREAM_SURPLUS), 0))?;
        let mut f = out.file("limit_path.csv")?;
        write_limit_csv(&real, Some(&surplus), 0.1, &mut f)?;
        f.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct McmwSummary {
    replicates: usize,
    time: f64,
    coupling: &'static str,
    mean_largest: f64,
    mean_susceptibility: f64,
}

fn mcmw(j: &McmwJob, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let v = MassWeightVector::new(j.masses.clone(), j.weights.clone())?;
    let runs: Vec<Result<Vec<f64>, hcm_core::Error>> = replicate(seed, j.reps, |_, rng| {
        let (masses, mut sys) = if j.shared_clocks {
            mcmw_graphical(&v, j.time, rng)?
        } else {
            mcmw_rank_one(&v, j.time, rng)?
        };
        sys.check_conservation()?;
        Ok(masses)
    });
    let runs: Vec<Vec<f64>> = runs.into_iter().collect::<Result<_, _>>()?;
    let mut f = out.file("mcmw_masses.csv")?;
    writeln!(f, "replicate,rank,mass")?;
    for (r, m) in runs.iter().enumerate() {
        for (k, x) in m.iter().enumerate() {
            writeln!(f, "{r},{},{x}", k + 1)?;
        }
    }
    f.flush()?;
    let reps = runs.len().max(1) as f64;
    out.json(
        "mcmw_summary.json",
        &McmwSummary {
            replicates: runs.len(),
            time: j.time,
            coupling: if j.shared_clocks { "xi" } else { "none" },
            mean_largest: runs.iter().map(|m| m[0]).sum::<f64>() / reps,
            mean_susceptibility: runs.iter().map(|m| susceptibility(m)).sum::<f64>() / reps,
        },
    )
}

#[derive(Serialize)]
struct PercolateSummary {
    n: usize,
    mode: &'static str,
    time: f64,
    q0: u64,
    b_n: f64,
    c_n: f64,
    gamma_n: f64,
    replicates: usize,
    mean_largest_dynamic: Option<f64>,
    mean_largest_modified: Option<f64>,
}

fn write_events(out: &mut Outputs, name: &str, st: &PercolationState) -> Result<(), CliError> {
    let mut f = out.file(name)?;
    st.write_csv(&mut f)?;
    f.flush()?;
    Ok(())
}

fn percolate(ec: &ExperimentConfig, j: &PercolateJob, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let seq = ec.degree_sequence(j.n)?;
    let gamma_n = seq.total_black() as f64 / seq.len() as f64;
    let s = match (j.time, j.mu) {
        (Some(t), _) => t,
        (None, Some(mu)) => mu * gamma_n / seq.scaling.c_n,
        (None, None) => unreachable!("checked when reading the job"),
    };
    let master = seed_stream(seed, STREAM_PERCOLATE);
    type Row = (Option<Vec<u64>>, Option<Vec<u64>>);
    let rows: Vec<Result<Row, hcm_core::Error>> = replicate(master, j.reps, |rep, rng| {
        let g = replicate_graph(ec, &seq, rep)?;
        Ok(match j.mode {
            PercMode::Dynamic => {
                let st = run_dynamic(&g, s, rng)?;
                st.check_invariants()?;
                (Some(st.ordered_sizes()), None)
            }
            PercMode::Modified => {
                let st = run_modified(&g, s, rng)?;
                st.check_invariants()?;
                (None, Some(st.ordered_sizes()))
            }
            PercMode::Coupled => {
                let c = run_coupled(&g, s, rng)?;
                c.dynamic.check_invariants()?;
                c.modified.check_invariants()?;
                (Some(c.dynamic.ordered_sizes()), Some(c.modified.ordered_sizes()))
            }
        })
    });
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_, _>>()?;

    let mut f = out.file("percolate_sizes.csv")?;
    writeln!(f, "replicate,process,rank,size")?;
    for (r, (d, m)) in rows.iter().enumerate() {
        for (label, sizes) in [("dynamic", d), ("modified", m)] {
            if let Some(sizes) = sizes {
                for (k, x) in sizes.iter().take(ec.top_j).enumerate() {
                    writeln!(f, "{r},{label},{},{x}", k + 1)?;
                }
            }
        }
    }
    f.flush()?;

    // event log of the first replicate, rerun on its own stream
    let g = replicate_graph(ec, &seq, 0)?;
    let mut rng = stream_rng(master, 0);
    match j.mode {
        PercMode::Dynamic => write_events(out, "percolate_events.csv", &run_dynamic(&g, s, &mut rng)?)?,
        PercMode::Modified => write_events(out, "percolate_events.csv", &run_modified(&g, s, &mut rng)?)?,
        PercMode::Coupled => {
            let c = run_coupled(&g, s, &mut rng)?;
            write_events(out, "percolate_events_dynamic.csv", &c.dynamic)?;
            write_events(out, "percolate_events_modified.csv", &c.modified)?;
        }
    }

    let mean = |pick: &dyn Fn(&Row) -> Option<u64>| -> Option<f64> {
        let v: Vec<u64> = rows.iter().filter_map(pick).collect();
        (!v.is_empty()).then(|| v.iter().sum::<u64>() as f64 / v.len() as f64)
    };
    out.json(
        "percolate_summary.json",
        &PercolateSummary {
            n: j.n,
            mode: match j.mode {
                PercMode::Dynamic => "dynamic",
                PercMode::Modified => "modified",
                PercMode::Coupled => "coupled",
            },
            time: s,
            q0: seq.total_black() / 2,
            b_n: seq.scaling.b_n,
            c_n: seq.scaling.c_n,
            gamma_n,
            replicates: rows.len(),
            mean_largest_dynamic: mean(&|r| r.0.as_ref().map(|v| v[0])),
            mean_largest_modified: mean(&|r| r.1.as_ref().map(|v| v[0])),
        },
    )
}

#[derive(Serialize)]
struct LevySummary {
    replicates: usize,
    horizon: f64,
    convention: ClockConvention,
    mean_y_at_one: f64,
    expected_y_at_one: f64,
    mean_largest_excursion: f64,
}

fn levy(ec: &ExperimentConfig, j: &LevyJob, seed: u64, opts: &RunOptions, out: &mut Outputs) -> Result<(), CliError> {
    let params = ec.limit_parameters()?;
    let t_one = 1.0f64.min(ec.limit_horizon);
    type Row = (f64, Vec<(f64, f64)>);
    let rows: Vec<Result<Row, hcm_core::Error>> = replicate(seed, j.reps, |_, rng| {
        let real = sample_thinned_levy(&params, ec.k_max, ec.limit_horizon, j.convention, rng)?;
        let mut ex = gamma_down(&real.x, &real.y)?;
        ex.truncate(ec.top_j);
        Ok((real.y.eval(&t_one)?, ex))
    });
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_, _>>()?;
    let mut f = out.file("levy_excursions.csv")?;
    writeln!(f, "replicate,rank,length,y_increment")?;
    for (r, (_, ex)) in rows.iter().enumerate() {
        for (k, (len, dy)) in ex.iter().enumerate() {
            writeln!(f, "{r},{},{len},{dy}", k + 1)?;
        }
    }
    f.flush()?;
    let mut rng = stream_rng(seed, 0);
    let real = sample_thinned_levy(&params, ec.k_max, ec.limit_horizon, j.convention, &mut rng)?;
    if opts.dump_limit_path || j.reps > 0 {
        let surplus = sample_surplus_process(&real.x, &mut stream_rng(seed_stream(seed, STREAM_SURPLUS), 0))?;
        let mut f = out.file("levy_path.csv")?;
        write_limit_csv(&real, Some(&surplus), j.grid_step, &mut f)?;
        f.flush()?;
    }
    let reps = rows.len().max(1) as f64;
    out.json(
        "levy_summary.json",
        &LevySummary {
            replicates: rows.len(),
            horizon: ec.limit_horizon,
            convention: j.convention,
            mean_y_at_one: rows.iter().map(|r| r.0).sum::<f64>() / reps,
            expected_y_at_one: expected_y(&params, t_one, j.convention),
            mean_largest_excursion: rows.iter().map(|r| r.1.first().map_or(0.0, |e| e.0)).sum::<f64>() / reps,
        },
    )
}

#[derive(Serialize)]
struct DegreeCheck {
    n: usize,
    hub_count: usize,
    criticality: f64,
    report: hcm_core::degree_model::AssumptionReport,
}

fn degrees(ec: &ExperimentConfig, j: &DegreesJob, out: &mut Outputs) -> Result<(), CliError> {
    let limits = ec.limit_parameters()?;
    let mut seqs: Vec<DegreeSequence> = Vec::new();
    if let Some(path) = &j.degrees_file {
        let file = File::open(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let (white, black) = read_degree_csv(std::io::BufReader::new(file))?;
        let scaling = hcm_core::degree_model::make_scaling(white.len(), ec.tau, ec.l_value)?;
        seqs.push(DegreeSequence::from_degrees(white, black, scaling, limits.clone())?);
    } else {
        for &n in &ec.n_grid {
            let mut seq = ec.degree_sequence(n)?;
            seq.limits = limits.clone();
            seqs.push(seq);
        }
    }
    let mut checks = Vec::new();
    for seq in &seqs {
        let n = seq.len();
        let mut f = out.file(&format!("degrees_n{n}.csv"))?;
        seq.write_csv(&mut f)?;
        f.flush()?;
        checks.push(DegreeCheck {
            n,
            hub_count: seq.hub_count,
            criticality: criticality(seq),
            report: validate_assumptions(seq, j.k, j.tolerance),
        });
    }
    out.json("assumptions.json", &checks)
}
