//! Group-weighted multi-task loss scaling.
//!
//! The pipeline turns per-task risk values into per-task loss weights in
//! three stages: risk-guided indicators ([`indicators`]), exact 1-D
//! clustering into groups with right-inverse group weights ([`grouping`]),
//! and strategy state machines that run it all per iteration alongside
//! loss-oriented baselines ([`weighters`]). A synthetic quadratic testbed
//! ([`testbed`]) exercises the full bi-level loop with analytic gradients,
//! and [`metrics`] computes the overall-performance aggregates used to
//! compare methods, with published benchmark tables embedded for
//! regression checks.

pub mod error;
pub mod grouping;
pub mod indicators;
pub mod metrics;
pub mod testbed;
pub mod weighters;

pub use error::{Error, Result};
pub use grouping::Grouping;
pub use indicators::{IndicatorState, TaskRiskVector};
pub use metrics::{MetricDirection, MetricTable, RankTies};
pub use testbed::{
    OptimizerKind, Params, SyntheticProblem, TrainConfig, Trajectory, VectorOptimizer,
};
pub use weighters::{ClusterEngine, WeighterOutput, WeighterState};
