//! `rliff` command line: `simulate`, `train`, `reliability`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::load_config;
use crate::csvio::{read_trajectory, trajectory_to_string};
use crate::error::Error;
use crate::eval::{
    evaluate_methods, run_reliability, simulate_trajectory, ExperimentConfig, Method, ReliabilityReport,
    RunReport,
};
use crate::model::Scenario;
use crate::sim::EnvironmentSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rliff", version, about = "Q-learning fusion of RSSI, PDR and AoA tracking paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Key-value configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// rectangular | diagonal_a | diagonal_b | random (overrides the config).
    #[arg(long)]
    scenario: Option<String>,
    /// env1 | env2 | env3 room preset (overrides the config).
    #[arg(long)]
    env: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate ground truth and the three tracker paths, write them as CSV.
    Simulate(Common),
    /// Learn fusion weights on a trajectory CSV and write a JSON run report.
    Train {
        /// Trajectory CSV (see `simulate` for the schema).
        trajectory: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat the simulate-and-train experiment over several seeds.
    Reliability {
        #[command(flatten)]
        common: Common,
        /// Per-episode reward traces as CSV; defaults to `<out>` with a `.traces.csv` extension.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: e.to_string(),
        }
    }
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Train { trajectory, common } => cmd_train(&trajectory, &common),
        Command::Reliability { common, traces } => {
            let traces = traces.unwrap_or_else(|| common.out.with_extension("traces.csv"));
            cmd_reliability(&common, &traces)
        }
    }
}

fn resolve_config(c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &c.config {
        Some(path) => load_config(path).map_err(|e| match e {
            Error::Io { path, source } => {
                CliError::usage(format!("cannot read config {}: {source}", path.display()))
            }
            other => CliError::usage(other.to_string()),
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(env) = &c.env {
        let preset = EnvironmentSpec::preset(env).ok_or_else(|| {
            CliError::usage(format!("--env: unknown environment '{env}' (expected env1 | env2 | env3)"))
        })?;
        cfg.env = EnvironmentSpec {
            speed: cfg.env.speed,
            n_steps: cfg.env.n_steps,
            ..preset
        };
    }
    if let Some(s) = &c.scenario {
        cfg.scenario = s
            .parse::<Scenario>()
            .map_err(|e| CliError::usage(format!("--scenario: {e}")))?;
    }
    if let Some(seed) = c.seed {
        cfg = cfg.with_seed(seed);
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::runtime(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::runtime)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn cmd_simulate(c: &Common) -> Result<(), CliError> {
    let cfg = resolve_config(c)?;
    let traj = simulate_trajectory(&cfg.env, cfg.scenario, &cfg.noise).map_err(CliError::runtime)?;
    write_atomic(&c.out, trajectory_to_string(&traj).as_bytes())?;
    println!(
        "wrote {} records ({} / {}) to {}",
        traj.len(),
        cfg.env.env_id,
        cfg.scenario,
        c.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    config: &'a ExperimentConfig,
    n_records: usize,
    reports: &'a [RunReport],
}

fn cmd_train(trajectory: &Path, c: &Common) -> Result<(), CliError> {
    let cfg = resolve_config(c)?;
    let file = std::fs::File::open(trajectory)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", trajectory.display())))?;
    let traj = read_trajectory(std::io::BufReader::new(file), &cfg.env.env_id, cfg.scenario)
        .map_err(|e| CliError::runtime(format!("{}: {e}", trajectory.display())))?;
    let reports = evaluate_methods(&traj, &cfg.learning, cfg.test_episodes).map_err(CliError::runtime)?;
    let out = TrainOutput {
        config: &cfg,
        n_records: traj.len(),
        reports: &reports,
    };
    write_atomic(&c.out, &to_json(&out)?)?;
    for r in &reports {
        let w = r.weights.map(|w| w.to_string()).unwrap_or_default();
        println!("{:<7} mse={:.6} {w}", r.method.label(), r.mse);
    }
    Ok(())
}

#[derive(Serialize)]
struct ReliabilityOutput<'a> {
    config: &'a ExperimentConfig,
    report: &'a ReliabilityReport,
}

/// Per-episode mean and spread across repetitions for each fusion method.
pub fn traces_csv(report: &ReliabilityReport) -> String {
    let methods = Method::FUSION;
    let mut out = String::from("episode");
    for m in methods {
        let _ = write!(out, ",{m}_reward_mean,{m}_reward_std,{m}_mse_mean");
    }
    out.push('\n');
    let episodes = report.runs[&Method::RlIff][0].episode_rewards.len();
    for e in 0..episodes {
        let _ = write!(out, "{e}");
        for m in methods {
            let runs = &report.runs[&m];
            let n = runs.len() as f64;
            let rewards: Vec<f64> = runs.iter().map(|r| r.episode_rewards[e] as f64).collect();
            let mean = rewards.iter().sum::<f64>() / n;
            let std = (rewards.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let mse = runs.iter().map(|r| r.episode_mses[e]).sum::<f64>() / n;
            let _ = write!(out, ",{mean:.6},{std:.6},{mse:.6}");
        }
        out.push('\n');
    }
    out
}

fn cmd_reliability(c: &Common, traces: &Path) -> Result<(), CliError> {
    let cfg = resolve_config(c)?;
    if cfg.repetitions < 2 {
        return Err(CliError::usage(format!(
            "repetitions must be at least 2, got {}",
            cfg.repetitions
        )));
    }
    let report = run_reliability(&cfg, cfg.repetitions).map_err(CliError::runtime)?;
    write_atomic(traces, traces_csv(&report).as_bytes())?;
    let out = ReliabilityOutput {
        config: &cfg,
        report: &report.without_traces(),
    };
    write_atomic(&c.out, &to_json(&out)?)?;
    for (m, s) in &report.summary {
        let stab = report
            .stability
            .get(m)
            .map(|v| format!(" stability={v:.3}"))
            .unwrap_or_default();
        println!(
            "{:<7} mse mean={:.6} std={:.6} min={:.6} max={:.6}{stab}",
            m.label(),
            s.mean,
            s.std,
            s.min,
            s.max
        );
    }
    Ok(())
}
