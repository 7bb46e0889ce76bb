//! Command-line front end for the pooling analysis library.

mod config;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pooling_core::cos::MixedEvaluator;
use pooling_core::pareto::{self, Metric, PolicyKind};
use pooling_core::sim::{simulate, simulate_mixed, SimScenario};
use pooling_core::{coc, Error, SharingConfig};

use config::{ConfigError, KSpec, PolicySpec, Study};
use output::{fmt, Format, Table};

#[derive(Parser)]
#[command(
    name = "pooling",
    version,
    about = "Exact and simulated performance of partially pooled multi-server systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Study configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Overrides the simulation seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker parallelism for sweeps (currently evaluated sequentially).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic metrics at the configured sharing points.
    Metrics,
    /// Pareto frontier over the configuration grid.
    Frontier,
    /// Kalai-Smorodinsky bargaining point.
    Ksbs,
    /// Discrete-event simulation of the configured scenario.
    Simulate,
    /// Re-derive published reference tables and figure data.
    Reproduce {
        #[arg(value_enum)]
        target: reproduce::Target,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("POOLING_LOG")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Anything that stops a command, mapped onto the documented exit codes:
/// 2 for configuration problems, 3 for unstable systems.
enum CliError {
    Config(ConfigError),
    Core(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(Error::Unstable(_)) => ExitCode::from(3),
            CliError::Config(e) if e.unstable => ExitCode::from(3),
            _ => ExitCode::from(2),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    if cli.jobs == 0 {
        return Err(CliError::Config(ConfigError::new("--jobs must be positive")));
    }
    if let Command::Reproduce { target } = cli.command {
        let result = reproduce::run(target)?;
        result.table.write(cli.out.as_deref(), cli.format)?;
        return Ok(if result.within_tolerance {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        });
    }
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| {
            CliError::Config(ConfigError::new("--config is required for this command"))
        })?;
    let study = config::load(config_path)?;
    let out = cli.out.clone().or_else(|| study.out.clone());
    let table = match cli.command {
        Command::Metrics => cmd_metrics(&study)?,
        Command::Frontier => cmd_frontier(&study)?,
        Command::Ksbs => cmd_ksbs(&study)?,
        Command::Simulate => cmd_simulate(&study, cli.seed)?,
        Command::Reproduce { .. } => unreachable!(),
    };
    table.write(out.as_deref(), cli.format)?;
    Ok(ExitCode::SUCCESS)
}

fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::Wait => "wait",
        Metric::Delay => "delay",
    }
}

fn study_points(study: &Study) -> Vec<(f64, f64)> {
    match study.k {
        KSpec::Pair([k1, k2]) => vec![(k1, k2)],
        KSpec::Grid { grid } => {
            let axis = |n: u32| -> Vec<f64> {
                let cells = (1.0 / grid).round().max(1.0) as usize;
                (0..=cells)
                    .map(|i| n as f64 * i as f64 / cells as f64)
                    .collect()
            };
            let mut pts = Vec::new();
            for &k1 in &axis(study.p1.servers()) {
                for &k2 in &axis(study.p2.servers()) {
                    pts.push((k1, k2));
                }
            }
            pts
        }
    }
}

fn analytic_pair(study: &Study, k1: f64, k2: f64) -> Result<[f64; 2], Error> {
    match (study.policy.kind(), study.metric) {
        (PolicyKind::CancelOnComplete, Metric::Delay) => {
            coc::mean_response_both(&study.p1, &study.p2, &SharingConfig { k1, k2 })
        }
        (PolicyKind::CancelOnStart, Metric::Wait) => {
            MixedEvaluator::new(&study.p1, &study.p2).waiting(k1, k2)
        }
        (PolicyKind::CancelOnComplete, Metric::Wait) => Err(Error::Unsupported(
            "waiting probability is not computed for cancel-on-complete".into(),
        )),
        (PolicyKind::CancelOnStart, Metric::Delay) => Err(Error::Unsupported(
            "mean response time is not computed for time-shared cancel-on-start".into(),
        )),
    }
}

fn cmd_metrics(study: &Study) -> Result<Table, CliError> {
    let mut table = Table::new(["policy", "k1", "k2", "metric", "b1", "b2"]);
    for (k1, k2) in study_points(study) {
        let [b1, b2] = analytic_pair(study, k1, k2)?;
        table.push([
            study.policy.name().to_string(),
            fmt(k1),
            fmt(k2),
            metric_name(study.metric).to_string(),
            fmt(b1),
            fmt(b2),
        ]);
    }
    Ok(table)
}

fn frontier_table(points: &[pareto::ParetoPoint], policy: PolicySpec) -> Table {
    let mut table = Table::new(["policy", "k1", "k2", "B1", "B2", "undominated", "is_ksbs"]);
    for p in points {
        table.push([
            policy.name().to_string(),
            fmt(p.k1),
            fmt(p.k2),
            fmt(p.b1),
            fmt(p.b2),
            p.undominated.to_string(),
            p.is_ksbs.to_string(),
        ]);
    }
    table
}

fn cmd_frontier(study: &Study) -> Result<Table, CliError> {
    let frontier = pareto::pareto_frontier(
        &study.p1,
        &study.p2,
        study.policy.kind(),
        study.metric,
        study.grid_step(),
    )?;
    Ok(frontier_table(&frontier, study.policy))
}

fn cmd_ksbs(study: &Study) -> Result<Table, CliError> {
    let point = pareto::ksbs(
        &study.p1,
        &study.p2,
        study.policy.kind(),
        study.metric,
        study.grid_step(),
    )?;
    Ok(frontier_table(std::slice::from_ref(&point), study.policy))
}

fn cmd_simulate(study: &Study, seed_override: Option<u64>) -> Result<Table, CliError> {
    let sim = study
        .sim
        .as_ref()
        .ok_or_else(|| {
            CliError::Config(ConfigError::new("simulate requires a \"sim\" block"))
        })?;
    let KSpec::Pair([k1, k2]) = study.k else {
        return Err(CliError::Config(ConfigError::new(
            "simulate requires an explicit \"k\" pair, not a grid",
        )));
    };
    let seed = seed_override.or(sim.seed).unwrap_or(0);
    let scenario = SimScenario {
        p1: study.p1.clone(),
        p2: study.p2.clone(),
        cfg: SharingConfig {
            k1: k1.floor(),
            k2: k2.floor(),
        },
        policy: study.policy.sim_policy(),
        horizon: sim.horizon,
        warmup: sim.warmup.unwrap_or(sim.horizon / 10),
        seed,
        replications: sim.replications.unwrap_or(1),
    };
    let integral = k1.fract() == 0.0 && k2.fract() == 0.0;
    let result = if integral {
        let mut scenario = scenario;
        scenario.cfg = SharingConfig { k1, k2 };
        simulate(&scenario)?
    } else {
        simulate_mixed(&scenario, k1, k2, sim.switch_cycles.unwrap_or(100))?
    };
    let mut table = Table::new([
        "policy", "k1", "k2", "metric", "estimate", "stderr", "ci_lo", "ci_hi", "jobs", "seed",
    ]);
    let metrics = [
        ("wait_1", result.wait[0], result.jobs[0]),
        ("wait_2", result.wait[1], result.jobs[1]),
        ("response_1", result.response[0], result.jobs[0]),
        ("response_2", result.response[1], result.jobs[1]),
    ];
    for (name, est, jobs) in metrics {
        let (lo, hi) = est.ci95();
        table.push([
            study.policy.name().to_string(),
            fmt(k1),
            fmt(k2),
            name.to_string(),
            fmt(est.value),
            fmt(est.stderr),
            fmt(lo),
            fmt(hi),
            jobs.to_string(),
            seed.to_string(),
        ]);
    }
    Ok(table)
}
