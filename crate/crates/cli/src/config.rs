//! Declarative run configuration.
//!
//! One TOML file describes a full experiment: the synthetic problem, the
//! weighting strategy with its hyperparameters, the optimizer, and where
//! artifacts go. Unknown keys are hard errors; a silently ignored typo in
//! a hyperparameter would invalidate the experiment.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use go4align::testbed::{OptimizerKind, SyntheticProblem, TrainConfig};
use go4align::weighters::{
    ClusterEngine, WeighterState, DEFAULT_BETA, DEFAULT_DWA_TEMPERATURE, DEFAULT_LLOYD_RESTARTS,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub strategy: StrategyConfig,
    pub optimizer: OptimizerConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub shared_dim: usize,
    pub head_dim: usize,
    pub rows: usize,
    /// One positive scale constant per task; the task count is its length.
    pub scales: Vec<f64>,
    pub data_std: f64,
    pub seed: u64,
    /// Tasks listed together share identical data.
    #[serde(default)]
    pub duplicate_groups: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    /// ls | si | rlw | dwa | uw | go4align | agrm+<base>
    pub name: String,
    pub beta: Option<f64>,
    pub k: Option<KSpec>,
    pub cadence: Option<usize>,
    pub temperature: Option<f64>,
    pub engine: Option<EngineSpec>,
    pub restarts: Option<usize>,
    /// Seed for strategy-internal randomness (rlw draws, lloyd restarts);
    /// derived from the problem seed when absent.
    pub strategy_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Explicit(usize),
    Rule(ElbowKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElbowKeyword {
    Elbow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineSpec {
    Exact,
    Lloyd,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerSpec,
    pub learning_rate: f64,
    pub iterations: usize,
    #[serde(default = "default_epoch_len")]
    pub epoch_len: usize,
    #[serde(default = "default_init_std")]
    pub init_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerSpec {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Convergence threshold as a fraction of each task's initial gap
    /// above its optimum.
    #[serde(default = "default_threshold_rel")]
    pub threshold_rel: f64,
}

fn default_epoch_len() -> usize {
    50
}

fn default_init_std() -> f64 {
    1.0
}

fn default_threshold_rel() -> f64 {
    0.15
}

/// Strategy families, used for validating which hyperparameters apply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyKind {
    Ls,
    Si,
    Rlw,
    Dwa,
    Uw,
    Go4Align,
    AgrmWrap(Box<StrategyKind>),
}

impl StrategyKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "ls" => StrategyKind::Ls,
            "si" => StrategyKind::Si,
            "rlw" => StrategyKind::Rlw,
            "dwa" => StrategyKind::Dwa,
            "uw" => StrategyKind::Uw,
            "go4align" => StrategyKind::Go4Align,
            other => match other.strip_prefix("agrm+") {
                Some(base) => {
                    let inner = StrategyKind::parse(base)?;
                    if inner.groups() {
                        bail!("agrm wrapper requires a non-grouping base strategy, got {base:?}");
                    }
                    StrategyKind::AgrmWrap(Box::new(inner))
                }
                None => bail!(
                    "unknown strategy {name:?} (expected ls, si, rlw, dwa, uw, go4align, or agrm+<base>)"
                ),
            },
        })
    }

    /// Whether the strategy performs group assignment (and thus needs k).
    pub fn groups(&self) -> bool {
        matches!(self, StrategyKind::Go4Align | StrategyKind::AgrmWrap(_))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn task_count(&self) -> usize {
        self.problem.scales.len()
    }

    pub fn strategy_kind(&self) -> Result<StrategyKind> {
        StrategyKind::parse(&self.strategy.name)
    }

    fn validate(&self) -> Result<()> {
        let m = self.task_count();
        if m < 2 {
            bail!("problem.scales must list at least two tasks, got {m}");
        }
        let kind = self.strategy_kind()?;
        let s = &self.strategy;
        if let Some(KSpec::Explicit(k)) = s.k {
            if !(2 <= k && k <= m) {
                bail!("strategy.k = {k} must satisfy 2 <= k <= {m}");
            }
        }
        if !kind.groups() {
            for (set, field) in [
                (s.k.is_some(), "k"),
                (s.cadence.is_some(), "cadence"),
                (s.engine.is_some(), "engine"),
                (s.restarts.is_some(), "restarts"),
            ] {
                if set {
                    bail!(
                        "strategy.{field} only applies to grouping strategies, not {:?}",
                        s.name
                    );
                }
            }
        }
        if s.beta.is_some() && !matches!(kind, StrategyKind::Go4Align) {
            bail!("strategy.beta only applies to go4align, not {:?}", s.name);
        }
        let is_dwa = matches!(kind, StrategyKind::Dwa)
            || matches!(&kind, StrategyKind::AgrmWrap(b) if **b == StrategyKind::Dwa);
        if s.temperature.is_some() && !is_dwa {
            bail!("strategy.temperature only applies to dwa, not {:?}", s.name);
        }
        if !(self.output.threshold_rel > 0.0 && self.output.threshold_rel < 1.0) {
            bail!(
                "output.threshold_rel must be in (0, 1), got {}",
                self.output.threshold_rel
            );
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<SyntheticProblem> {
        let p = &self.problem;
        SyntheticProblem::random_with_duplicates(
            p.shared_dim,
            p.head_dim,
            p.rows,
            &p.scales,
            p.data_std,
            p.seed,
            &p.duplicate_groups,
        )
        .context("invalid problem configuration")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            optimizer: match self.optimizer.kind {
                OptimizerSpec::Sgd => OptimizerKind::Sgd,
                OptimizerSpec::Adam => OptimizerKind::Adam,
            },
            learning_rate: self.optimizer.learning_rate,
            iterations: self.optimizer.iterations,
            epoch_len: self.optimizer.epoch_len,
            init_std: self.optimizer.init_std,
        }
    }

    /// Seed for the parameter initialization inside `train`.
    pub fn train_seed(&self) -> u64 {
        self.problem.seed.wrapping_add(1)
    }

    fn strategy_seed(&self) -> u64 {
        self.strategy
            .strategy_seed
            .unwrap_or_else(|| self.problem.seed.wrapping_add(2))
    }

    fn cluster_engine(&self) -> ClusterEngine {
        match self.strategy.engine.unwrap_or(EngineSpec::Exact) {
            EngineSpec::Exact => ClusterEngine::Exact,
            EngineSpec::Lloyd => ClusterEngine::Lloyd {
                restarts: self.strategy.restarts.unwrap_or(DEFAULT_LLOYD_RESTARTS),
                seed: self.strategy_seed(),
            },
        }
    }

    /// Instantiate the configured strategy with an explicit group count
    /// (ignored by non-grouping strategies).
    pub fn build_weighter(&self, k: usize) -> Result<WeighterState> {
        self.build_weighter_kind(&self.strategy_kind()?, k)
    }

    fn build_weighter_kind(&self, kind: &StrategyKind, k: usize) -> Result<WeighterState> {
        let m = self.task_count();
        let state = match kind {
            StrategyKind::Ls => WeighterState::ls(m)?,
            StrategyKind::Si => WeighterState::si(m)?,
            StrategyKind::Rlw => WeighterState::rlw(m, self.strategy_seed())?,
            StrategyKind::Dwa => WeighterState::dwa(
                m,
                self.strategy.temperature.unwrap_or(DEFAULT_DWA_TEMPERATURE),
                self.optimizer.epoch_len,
            )?,
            StrategyKind::Uw => WeighterState::uw(m)?,
            StrategyKind::Go4Align => WeighterState::go4align(
                m,
                self.strategy.beta.unwrap_or(DEFAULT_BETA),
                k,
                self.strategy.cadence.unwrap_or(1),
                self.cluster_engine(),
            )?,
            StrategyKind::AgrmWrap(base) => {
                let inner = self.build_weighter_kind(base, k)?;
                WeighterState::agrm_wrap(inner, k)?
            }
        };
        Ok(state)
    }
}
