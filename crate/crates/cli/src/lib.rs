//! Command-line runner for the `hcm-core` experiments.
//!
//! Options come from a flat `key = value` file and from flags; flags win.
//! Every job writes its result files plus `manifest.json` into the output
//! directory. Result files depend only on the effective configuration and the
//! master seed; the manifest also records wall-clock timestamps and the thread
//! count, so it is the one file that differs between identical runs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 failure during the run.

pub mod config;
pub mod jobs;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::Config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(#[from] hcm_core::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(hcm_core::Error::Domain(_)) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hcm", version, about = "Percolation on the hierarchical configuration model")]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (default: `out`).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Write the edge list of the first replicate graph per size.
    #[arg(long, global = true)]
    pub dump_graph: bool,
    /// Write the exploration walk of the first replicate graph, every STRIDE steps.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "1", value_name = "STRIDE")]
    pub dump_trace: Option<usize>,
    /// Write the first limit path `(t, X, Y, N)`.
    #[arg(long, global = true)]
    pub dump_limit_path: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment named by the `experiment` key of the config.
    Run,
    /// Component sizes of the white graph against `Γ↓(X, Y)`.
    Thm16,
    /// Percolated component sizes against `MC₂(Γ↓(X, Y), μ)`.
    Thm17,
    /// Sample the multiplicative coalescent with mass and weight.
    Mcmw(McmwArgs),
    /// Run the black-edge percolation dynamics on a generated graph.
    Percolate(PercolateArgs),
    /// Sample the thinned Lévy limit and its excursions.
    Levy,
    /// Build degree sequences and report the moment diagnostics.
    ValidateDegrees,
}

#[derive(Debug, Args)]
pub struct McmwArgs {
    /// Comma-separated masses.
    #[arg(long)]
    pub masses: Option<String>,
    /// Comma-separated weights (default: the masses).
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// `xi`: pair clocks streamed in a fixed order, so equal seeds couple runs;
    /// `none`: independent fast sampler.
    #[arg(long, value_parser = ["xi", "none"])]
    pub coupling: Option<String>,
}

#[derive(Debug, Args)]
pub struct PercolateArgs {
    #[arg(long, value_parser = ["dynamic", "modified", "coupled"])]
    pub mode: Option<String>,
    /// Percolation time `s`.
    #[arg(long, conflicts_with = "mu")]
    pub time: Option<f64>,
    /// Sets `s = μ γ_n / c_n`.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Graph size.
    #[arg(long)]
    pub n: Option<usize>,
}

fn effective_config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.set("seed", s.to_string());
    }
    let name = match &cli.command {
        Command::Run => None,
        Command::Thm16 => Some("thm16"),
        Command::Thm17 => Some("thm17"),
        Command::Levy => Some("levy"),
        Command::ValidateDegrees => Some("validate-degrees"),
        Command::Mcmw(a) => {
            let pairs = [
                ("masses", a.masses.clone()),
                ("weights", a.weights.clone()),
                ("time", a.time.map(|v| v.to_string())),
                ("reps", a.reps.map(|v| v.to_string())),
                ("coupling", a.coupling.clone()),
            ];
            for (k, v) in pairs {
                if let Some(v) = v {
                    cfg.set(k, v);
                }
            }
            Some("mcmw")
        }
        Command::Percolate(a) => {
            let pairs = [
                ("mode", a.mode.clone()),
                ("time", a.time.map(|v| v.to_string())),
                ("mu", a.mu.map(|v| v.to_string())),
                ("reps", a.reps.map(|v| v.to_string())),
                ("n", a.n.map(|v| v.to_string())),
            ];
            for (k, v) in pairs {
                if let Some(v) = v {
                    cfg.set(k, v);
                }
            }
            Some("percolate")
        }
    };
    if let Some(name) = name {
        if let Some(existing) = cfg.entries().get("experiment") {
            if existing != name {
                return Err(CliError::Config(format!(
                    "subcommand {name} conflicts with experiment = {existing}"
                )));
            }
        }
        cfg.set("experiment", name);
    }
    Ok(cfg)
}

/// Parses arguments, runs the job and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hcm: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    let opts = jobs::RunOptions {
        out_dir: cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
        dump_graph: cli.dump_graph,
        dump_trace: cli.dump_trace,
        dump_limit_path: cli.dump_limit_path,
    };
    match cli.threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| jobs::run(&cfg, &opts)),
        None => jobs::run(&cfg, &opts),
    }
}
