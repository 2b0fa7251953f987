//! `sinrlab` batch runner: reads an experiment config, evaluates every sweep
//! point and writes `results.csv`, `manifest.json` and optional curve files.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical
//! non-convergence (results are still written), 4 I/O error.

mod config;
mod experiments;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;
use serde_json::Value;
use sinrlab::sim::derive_seed;
use thiserror::Error;

use config::{ExperimentConfig, Kind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sinrlab", version, about = "SINR analysis and simulation of Poisson bipolar networks with queues")]
struct Args {
    /// experiment to run
    #[arg(value_enum)]
    kind: Kind,
    /// JSON or TOML experiment file; a previous manifest.json also works
    #[arg(long)]
    config: Option<PathBuf>,
    /// override a config key, e.g. `--set params.theta_db=5`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    slots: Option<u64>,
    /// worker threads for sweep points
    #[arg(long, env = "SINRLAB_JOBS")]
    jobs: Option<usize>,
}

#[derive(Serialize)]
struct SeedRecord {
    master: u64,
    realizations: usize,
    /// [topology seed, dynamics seed] per realization, shared by every point
    derived: Vec<[u64; 2]>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    kind: Kind,
    config: &'a ExperimentConfig,
    seeds: Option<SeedRecord>,
    jobs: usize,
    started_unix: u64,
    wall_time_s: f64,
    rows: usize,
    converged: bool,
    failures: Vec<String>,
    files: Vec<String>,
}

fn resolve(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut tree = match &args.config {
        Some(path) => config::load_tree(path)?,
        None => Value::Object(Default::default()),
    };
    for s in &args.sets {
        config::apply_set(&mut tree, s)?;
    }
    let mut cfg = config::from_tree(tree)?;
    cfg.kind = Some(args.kind);
    if let Some(s) = args.seed {
        cfg.sim.seed = s;
    }
    if let Some(n) = args.realizations {
        cfg.sim.realizations = n;
    }
    if let Some(n) = args.slots {
        cfg.sim.slots = n;
    }
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    if cfg.out.is_none() {
        return Err(CliError::Config("no output directory: pass --out or set `out`".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn uses_simulation(cfg: &ExperimentConfig, kind: Kind) -> bool {
    matches!(kind, Kind::Simulate | Kind::Compare) || (kind == Kind::Meta && cfg.meta.simulate)
}

fn run(args: Args) -> Result<bool, CliError> {
    let cfg = resolve(&args)?;
    let kind = args.kind;
    let out = cfg.out.clone().expect("checked in resolve");
    fs::create_dir_all(out.join("curves")).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let jobs = cfg
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let results = pool.install(|| experiments::run(&cfg, kind, &out))?;
    let wall_time_s = clock.elapsed().as_secs_f64();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut files = vec!["results.csv".to_string(), "manifest.json".to_string()];
    for r in results {
        rows.extend(r.rows);
        failures.extend(r.failures);
        files.extend(r.files);
    }
    output::write_rows(&out.join("results.csv"), &rows)?;
    let converged = rows.iter().all(|r| r.converged);
    let seeds = uses_simulation(&cfg, kind).then(|| SeedRecord {
        master: cfg.sim.seed,
        realizations: cfg.sim.realizations,
        derived: (0..cfg.sim.realizations as u64)
            .map(|k| [derive_seed(cfg.sim.seed, 2 * k), derive_seed(cfg.sim.seed, 2 * k + 1)])
            .collect(),
    });
    let manifest = Manifest {
        tool: "sinrlab",
        version: env!("CARGO_PKG_VERSION"),
        kind,
        config: &cfg,
        seeds,
        jobs,
        started_unix,
        wall_time_s,
        rows: rows.len(),
        converged,
        failures,
        files,
    };
    output::write_json(&out.join("manifest.json"), &manifest)?;
    for f in &manifest.failures {
        eprintln!("warning: {f}");
    }
    eprintln!("{} rows written to {} in {wall_time_s:.1} s", rows.len(), out.display());
    Ok(converged)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some solvers did not converge; see manifest.json");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
