//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input (state, channel or
//! config), 3 optimizer failure, 4 oracle check failed.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::channels::{apply_local, evolve_expectation, transmission_matrix, ChannelKind};
use crate::correlations::{correlation_report, gmqd_bruteforce, gmqd_eig, gmqd_svd, OptimizerConfig, Side};
use crate::dynamics::{self, SweepConfig};
use crate::error::DynamicsError;
use crate::states::{expectation_matrix, DensityMatrix, StateSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("optimizer failure: {0}")]
    Optimizer(String),
    #[error("oracle check failed: {0}")]
    OracleFailed(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Optimizer(_) => 3,
            CliError::OracleFailed(_) => 4,
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Optimizer { .. } => CliError::Optimizer(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "qdlab", version, about = "Two-qubit discord, geometric discord and concurrence under decoherence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Correlation report of a single state as JSON.
    Compute(ComputeArgs),
    /// Sweep the channel strength and write a CSV with kink annotations.
    Sweep(SweepArgs),
    /// Cross-check the independent computation routes on random states.
    Oracle(OracleArgs),
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OptimizerArgs {
    /// Seed for randomized optimizers; falls back to QDLAB_SEED, then 0.
    #[arg(long, env = "QDLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// JSON file with OptimizerConfig overrides.
    #[arg(long)]
    pub optimizer: Option<PathBuf>,
}

impl OptimizerArgs {
    fn resolve(&self) -> Result<OptimizerConfig, CliError> {
        let mut cfg = match &self.optimizer {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("optimizer config: {e}")))?
            }
            None => OptimizerConfig::default(),
        };
        cfg.seed = self.seed;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ComputeArgs {
    /// State JSON file, or inline JSON starting with '{'.
    #[arg(long)]
    pub state: String,
    #[arg(long, default_value = "A")]
    pub side: Side,
    #[command(flatten)]
    pub opt: OptimizerArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// State JSON file, or inline JSON starting with '{'.
    #[arg(long)]
    pub state: String,
    #[arg(long, default_value = "pdc")]
    pub channel: ChannelKind,
    #[arg(long, default_value_t = 0.0)]
    pub p_start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_end: f64,
    #[arg(long, default_value_t = dynamics::DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long, default_value = "A")]
    pub side: Side,
    #[arg(long, default_value_t = dynamics::DEFAULT_KINK_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = dynamics::DEFAULT_ANGLE_TOL)]
    pub angle_tol: f64,
    #[command(flatten)]
    pub opt: OptimizerArgs,
    /// CSV output path; a manifest is written next to it. Stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 100)]
    pub n_states: usize,
    /// How many of the states also get the brute-force minimization.
    #[arg(long, default_value_t = 50)]
    pub bf_states: usize,
    #[arg(long, env = "QDLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub route_tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub bf_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub picture_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}

pub fn load_state(arg: &str) -> Result<DensityMatrix, CliError> {
    parse_state_spec(arg)?
        .build()
        .map_err(|e| CliError::Invalid(format!("invalid state: {e}")))
}

fn parse_state_spec(arg: &str) -> Result<StateSpec, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        let path = Path::new(arg);
        fs::read_to_string(path).map_err(|e| io_err(path, e))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("state JSON: {e}")))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_manifest(command: &str, config: serde_json::Value, seed: u64, out: &Path) -> Result<(), CliError> {
    let manifest = RunManifest {
        command: command.into(),
        config,
        seed,
        version: VERSION.into(),
        outputs: vec![out.to_path_buf()],
    };
    let path = RunManifest::path_for(out);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
}

pub fn cmd_compute(args: &ComputeArgs) -> Result<String, CliError> {
    let rho = load_state(&args.state)?;
    let cfg = args.opt.resolve()?;
    let report = correlation_report(&rho, args.side, &cfg).map_err(|e| CliError::Optimizer(e.to_string()))?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    emit(args.out.as_deref(), &text)?;
    if let Some(out) = &args.out {
        write_manifest("compute", serde_json::to_value(args).expect("args serialize"), cfg.seed, out)?;
    }
    Ok(text)
}

pub fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, CliError> {
    let state = parse_state_spec(&args.state)?;
    let mut cfg = SweepConfig::new(state, args.channel);
    cfg.p_start = args.p_start;
    cfg.p_end = args.p_end;
    cfg.steps = args.steps;
    cfg.side = args.side;
    cfg.kink_threshold = args.threshold;
    cfg.angle_tol = args.angle_tol;
    cfg.optimizer = args.opt.resolve()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String, CliError> {
    let cfg = sweep_config(args)?;
    let rows = dynamics::sweep(&cfg)?;
    let kinks = dynamics::analyze(&rows, cfg.kink_threshold, cfg.angle_tol)?;
    let text = dynamics::to_csv_string(&rows, &kinks);
    emit(args.out.as_deref(), &text)?;
    if let Some(out) = &args.out {
        write_manifest("sweep", serde_json::to_value(args).expect("args serialize"), cfg.optimizer.seed, out)?;
    }
    Ok(text)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub n_states: usize,
    pub bf_states: usize,
    pub seed: u64,
    pub max_route_gap: f64,
    pub max_bruteforce_gap: f64,
    pub min_bruteforce_excess: f64,
    pub max_picture_gap: f64,
    pub route_tol: f64,
    pub bf_tol: f64,
    pub picture_tol: f64,
    pub pass: bool,
    /// Check with the largest tolerance overrun and the state that caused it.
    pub worst: Option<serde_json::Value>,
}

fn picture_gap(rho: &DensityMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for kind in [ChannelKind::Adc, ChannelKind::Pdc, ChannelKind::Dpc] {
        for i in 0..=10 {
            let ch = kind.build(i as f64 / 10.0).expect("p on the unit grid");
            let m = transmission_matrix(&ch);
            let kraus = expectation_matrix(&apply_local(&ch, &ch, rho));
            let heis = evolve_expectation(&m, &expectation_matrix(rho), &m);
            worst = worst.max((kraus.entries - heis.entries).abs().max());
        }
    }
    worst
}

pub fn run_oracle(args: &OracleArgs) -> Result<OracleSummary, CliError> {
    if args.n_states == 0 {
        return Err(CliError::Invalid("n_states must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let states: Vec<DensityMatrix> = (0..args.n_states).map(|_| DensityMatrix::random(&mut rng)).collect();

    let route: Vec<f64> = states.iter().map(|r| (gmqd_svd(r).0 - gmqd_eig(r).value).abs()).collect();
    let picture: Vec<f64> = states.par_iter().map(picture_gap).collect();
    let n_bf = args.bf_states.min(args.n_states);
    let bf: Vec<f64> = states[..n_bf]
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let cfg = OptimizerConfig {
                seed: args.seed.wrapping_add(i as u64),
                ..OptimizerConfig::default()
            };
            gmqd_bruteforce(r, &cfg)
                .map(|(v, _)| v - gmqd_svd(r).0)
                .map_err(|e| CliError::Optimizer(e.to_string()))
        })
        .collect::<Result<_, _>>()?;

    let argmax = |v: &[f64], f: fn(f64) -> f64| {
        v.iter()
            .enumerate()
            .map(|(i, x)| (i, f(*x)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    };
    let (ri, rmax) = argmax(&route, |x| x);
    let (pi, pmax) = argmax(&picture, |x| x);
    let (bi, bmax) = argmax(&bf, f64::abs);
    let bmin = bf.iter().copied().fold(f64::INFINITY, f64::min);

    let checks = [
        ("route", ri, rmax, args.route_tol),
        ("picture", pi, pmax, args.picture_tol),
        ("bruteforce", bi, if bf.is_empty() { 0.0 } else { bmax }, args.bf_tol),
    ];
    let failing: Vec<_> = checks.iter().filter(|c| c.2 > c.3).collect();
    let worst = failing
        .iter()
        .max_by(|a, b| (a.2 / a.3).total_cmp(&(b.2 / b.3)))
        .map(|c| {
            json!({
                "check": c.0,
                "value": c.2,
                "tolerance": c.3,
                "state": StateSpec::from_density(&states[c.1]),
            })
        });

    Ok(OracleSummary {
        n_states: args.n_states,
        bf_states: n_bf,
        seed: args.seed,
        max_route_gap: rmax,
        max_bruteforce_gap: if bf.is_empty() { 0.0 } else { bmax },
        min_bruteforce_excess: if bf.is_empty() { 0.0 } else { bmin },
        max_picture_gap: pmax,
        route_tol: args.route_tol,
        bf_tol: args.bf_tol,
        picture_tol: args.picture_tol,
        pass: failing.is_empty(),
        worst,
    })
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<String, CliError> {
    let summary = run_oracle(args)?;
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    emit(args.out.as_deref(), &text)?;
    if let Some(out) = &args.out {
        write_manifest("oracle", serde_json::to_value(args).expect("args serialize"), args.seed, out)?;
    }
    if summary.pass {
        Ok(text)
    } else {
        let worst = summary.worst.map(|w| w.to_string()).unwrap_or_default();
        Err(CliError::OracleFailed(worst))
    }
}

pub fn cmd_replay(manifest: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(manifest).map_err(|e| io_err(manifest, e))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("manifest: {e}")))?;
    let bad = |e: serde_json::Error| CliError::Invalid(format!("manifest config: {e}"));
    match m.command.as_str() {
        "compute" => cmd_compute(&serde_json::from_value(m.config).map_err(bad)?),
        "sweep" => cmd_sweep(&serde_json::from_value(m.config).map_err(bad)?),
        "oracle" => cmd_oracle(&serde_json::from_value(m.config).map_err(bad)?),
        other => Err(CliError::Invalid(format!("unknown command '{other}' in manifest"))),
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Compute(a) => cmd_compute(a).map(drop),
        Command::Sweep(a) => cmd_sweep(a).map(drop),
        Command::Oracle(a) => cmd_oracle(a).map(drop),
        Command::Replay { manifest } => cmd_replay(manifest).map(drop),
    }
}
