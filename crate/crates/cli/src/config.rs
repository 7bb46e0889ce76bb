//! JSON study configuration shared by all subcommands.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use pooling_core::erlang::ProviderParams;
use pooling_core::pareto::{default_grid_step, Metric, PolicyKind};
use pooling_core::sim::Policy;

/// Configuration or environment problem; maps to exit code 2, or 3 when
/// the configured system is unstable.
#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
    pub unstable: bool,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        ConfigError {
            message: message.into(),
            unstable: false,
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub providers: Vec<ProviderSpec>,
    pub policy: PolicySpec,
    #[serde(default)]
    pub metric: Option<MetricSpec>,
    pub k: KSpec,
    #[serde(default)]
    pub sim: Option<SimSpec>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSpec {
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub standalone_wait: Option<f64>,
    #[serde(default = "default_nu")]
    pub nu: f64,
    pub n: u32,
}

fn default_nu() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
pub enum PolicySpec {
    #[serde(rename = "coc")]
    CancelOnComplete,
    #[serde(rename = "cos")]
    CancelOnStart,
}

impl PolicySpec {
    pub fn kind(self) -> PolicyKind {
        match self {
            PolicySpec::CancelOnComplete => PolicyKind::CancelOnComplete,
            PolicySpec::CancelOnStart => PolicyKind::CancelOnStart,
        }
    }

    pub fn sim_policy(self) -> Policy {
        match self {
            PolicySpec::CancelOnComplete => Policy::CancelOnComplete,
            PolicySpec::CancelOnStart => Policy::CancelOnStart,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicySpec::CancelOnComplete => "coc",
            PolicySpec::CancelOnStart => "cos",
        }
    }

    /// Metric naturally attached to the policy's analysis.
    pub fn default_metric(self) -> Metric {
        match self {
            PolicySpec::CancelOnComplete => Metric::Delay,
            PolicySpec::CancelOnStart => Metric::Wait,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
pub enum MetricSpec {
    #[serde(rename = "wait")]
    Wait,
    #[serde(rename = "delay")]
    Delay,
}

impl MetricSpec {
    pub fn metric(self) -> Metric {
        match self {
            MetricSpec::Wait => Metric::Wait,
            MetricSpec::Delay => Metric::Delay,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Pair([f64; 2]),
    Grid { grid: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub horizon: u64,
    #[serde(default)]
    pub warmup: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub replications: Option<u32>,
    #[serde(default)]
    pub switch_cycles: Option<u32>,
}

/// Fully resolved study: explicit arrival rates and metric.
pub struct Study {
    pub p1: ProviderParams,
    pub p2: ProviderParams,
    pub policy: PolicySpec,
    pub metric: Metric,
    pub k: KSpec,
    pub sim: Option<SimSpec>,
    pub out: Option<PathBuf>,
}

impl Study {
    pub fn grid_step(&self) -> f64 {
        match self.k {
            KSpec::Grid { grid } => grid,
            KSpec::Pair(_) => default_grid_step(self.p1.servers(), self.p2.servers()),
        }
    }
}

pub fn load(path: &Path) -> Result<Study, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(format!("{}: {e}", path.display())))?;
    let cfg: StudyConfig = serde_json::from_str(&text).map_err(|e| {
        ConfigError::new(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    resolve(cfg)
}

fn resolve(cfg: StudyConfig) -> Result<Study, ConfigError> {
    if cfg.providers.len() != 2 {
        return Err(ConfigError::new(format!(
            "expected exactly two providers, got {}",
            cfg.providers.len()
        )));
    }
    let mut params = Vec::new();
    for (i, p) in cfg.providers.iter().enumerate() {
        let built = match (p.lambda, p.standalone_wait) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(format!(
                    "provider {}: lambda and standalone_wait are mutually exclusive",
                    i + 1
                )))
            }
            (None, None) => {
                return Err(ConfigError::new(format!(
                    "provider {}: one of lambda or standalone_wait is required",
                    i + 1
                )))
            }
            (Some(lambda), None) => ProviderParams::new(lambda, p.nu, p.n),
            (None, Some(target)) => ProviderParams::from_standalone_wait(target, p.nu, p.n),
        };
        params.push(built.map_err(|e| ConfigError {
            message: format!("provider {}: {e}", i + 1),
            unstable: matches!(e, pooling_core::Error::Unstable(_)),
        })?);
    }
    let p2 = params.pop().unwrap();
    let p1 = params.pop().unwrap();
    if let KSpec::Pair([k1, k2]) = cfg.k {
        if !(0.0..=p1.servers() as f64).contains(&k1)
            || !(0.0..=p2.servers() as f64).contains(&k2)
        {
            return Err(ConfigError::new(format!(
                "k = ({k1}, {k2}) outside [0, {}] x [0, {}]",
                p1.servers(),
                p2.servers()
            )));
        }
    }
    if let KSpec::Grid { grid } = cfg.k {
        if !(grid > 0.0 && grid <= 1.0) {
            return Err(ConfigError::new(format!("grid step {grid} outside (0, 1]")));
        }
    }
    let metric = cfg
        .metric
        .map(MetricSpec::metric)
        .unwrap_or_else(|| cfg.policy.default_metric());
    Ok(Study {
        p1,
        p2,
        policy: cfg.policy,
        metric,
        k: cfg.k,
        sim: cfg.sim,
        out: cfg.out,
    })
}
