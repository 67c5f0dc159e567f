//! The `run` command and the shared training/scoring machinery.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use go4align::error::Error as CoreError;
use go4align::metrics::{self, MetricDirection};
use go4align::testbed::{self, epochs_to_converge, format_float, SyntheticProblem, Trajectory};

use crate::config::{KSpec, RunConfig};

/// Outcome of one training run at one group count.
pub struct ScoredRun {
    pub trajectory: Trajectory,
    /// Average relative drop against the per-task optima, in percent;
    /// lower is better.
    pub score: f64,
}

/// Train the configured strategy at group count `k` and score the result.
/// A diverged run scores positive infinity.
pub fn run_scored(
    config: &RunConfig,
    problem: &SyntheticProblem,
    optima: &[f64],
    k: usize,
) -> Result<Option<ScoredRun>> {
    let mut weighter = config.build_weighter(k)?;
    match testbed::train(problem, &mut weighter, &config.train_config(), config.train_seed()) {
        Ok(trajectory) => {
            let score = relative_drop_pct(&trajectory, optima)?;
            Ok(Some(ScoredRun { trajectory, score }))
        }
        Err(CoreError::Divergence { iteration }) => {
            log::warn!("run with k={k} diverged at iteration {iteration}");
            Ok(None)
        }
        Err(other) => Err(other.into()),
    }
}

/// Average relative drop of the final-epoch mean risks against the
/// closed-form per-task optima, in percent (the overall-performance
/// analogue for the synthetic testbed; every direction is lower-better).
pub fn relative_drop_pct(trajectory: &Trajectory, optima: &[f64]) -> Result<f64> {
    let means = trajectory.epoch_mean_risks();
    let last = means
        .last()
        .context("trajectory has no epochs to score")?;
    let directions = vec![MetricDirection::LowerBetter; optima.len()];
    Ok(metrics::delta_m(last, optima, &directions)?)
}

/// Resolve the configured group count, sweeping all candidates through the
/// elbow rule when asked for. Returns the chosen k plus the score curve
/// (when a sweep happened).
pub fn resolve_k(
    config: &RunConfig,
    problem: &SyntheticProblem,
    optima: &[f64],
) -> Result<(usize, Option<BTreeMap<usize, f64>>)> {
    let m = config.task_count();
    match config.strategy.k {
        Some(KSpec::Explicit(k)) => Ok((k, None)),
        Some(KSpec::Rule(_)) | None => {
            let mut scores = BTreeMap::new();
            for k in 2..=m {
                if let Some(run) = run_scored(config, problem, optima, k)? {
                    if run.score.is_finite() {
                        scores.insert(k, run.score);
                    }
                }
            }
            if scores.is_empty() {
                bail!("every candidate group count diverged; lower the learning rate");
            }
            let chosen = metrics::elbow_select(&scores)?;
            Ok((chosen, Some(scores)))
        }
    }
}

/// Per-task convergence thresholds: optimum plus a fraction of the initial
/// gap above it.
pub fn convergence_thresholds(
    trajectory: &Trajectory,
    optima: &[f64],
    rel: f64,
) -> Option<Vec<f64>> {
    let first = &trajectory.records.first()?.risks;
    Some(
        optima
            .iter()
            .zip(first)
            .map(|(opt, init)| opt + rel * (init - opt).max(0.0))
            .collect(),
    )
}

pub fn cmd_run(config_path: &Path) -> Result<i32> {
    let config = RunConfig::load(config_path)?;
    let problem = config.build_problem()?;
    let optima = problem.per_task_optima();
    let kind = config.strategy_kind()?;

    let (k, sweep) = if kind.groups() {
        let (k, sweep) = resolve_k(&config, &problem, &optima)?;
        log::info!("group count k = {k}");
        (k, sweep)
    } else {
        // Placeholder; non-grouping strategies ignore it.
        (2.min(config.task_count()), None)
    };

    let mut weighter = config.build_weighter(k)?;
    let trajectory = match testbed::train(
        &problem,
        &mut weighter,
        &config.train_config(),
        config.train_seed(),
    ) {
        Ok(t) => t,
        Err(CoreError::Divergence { iteration }) => {
            eprintln!("training diverged at iteration {iteration}");
            return Ok(1);
        }
        Err(other) => return Err(other.into()),
    };

    let dir = &config.output.dir;
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output dir {}", dir.display()))?;
    std::fs::write(dir.join("trajectory.csv"), trajectory.to_csv_string())?;

    let summary = summary_csv(&config, &trajectory, &optima, kind.groups().then_some(k))?;
    std::fs::write(dir.join("summary.csv"), summary)?;
    if let Some(scores) = sweep {
        std::fs::write(dir.join("sweep.csv"), crate::sweep::sweep_csv(&scores, k))?;
    }

    println!(
        "run complete: {} iterations, artifacts in {} ({:.3}s)",
        trajectory.records.len(),
        dir.display(),
        trajectory.wall_time.as_secs_f64()
    );
    Ok(0)
}

/// Key/value summary: per-task final risks, optima and relative drops, the
/// overall drop, and the convergence spread. Wall time is deliberately
/// excluded so reruns are byte-identical.
fn summary_csv(
    config: &RunConfig,
    trajectory: &Trajectory,
    optima: &[f64],
    k: Option<usize>,
) -> Result<String> {
    let m = trajectory.m;
    let mut out = String::from("key,value\n");
    out.push_str(&format!("strategy,{}\n", config.strategy.name));
    out.push_str(&format!("tasks,{m}\n"));
    out.push_str(&format!("iterations,{}\n", trajectory.records.len()));
    out.push_str(&format!("epoch_len,{}\n", trajectory.epoch_len));
    if let Some(k) = k {
        out.push_str(&format!("k,{k}\n"));
    }

    let final_means = trajectory
        .epoch_mean_risks()
        .last()
        .cloned()
        .unwrap_or_else(|| vec![f64::NAN; m]);
    for task in 0..m {
        out.push_str(&format!(
            "task{task}_final_risk,{}\n",
            format_float(final_means[task])
        ));
        out.push_str(&format!("task{task}_optimum,{}\n", format_float(optima[task])));
        let drop = (final_means[task] - optima[task]) / optima[task] * 100.0;
        out.push_str(&format!("task{task}_drop_pct,{}\n", format_float(drop)));
    }
    if !trajectory.records.is_empty() {
        out.push_str(&format!(
            "delta_m_pct,{}\n",
            format_float(relative_drop_pct(trajectory, optima)?)
        ));
        let thresholds = convergence_thresholds(trajectory, optima, config.output.threshold_rel)
            .context("empty trajectory")?;
        let epochs = epochs_to_converge(trajectory, &thresholds)?;
        for (task, e) in epochs.iter().enumerate() {
            out.push_str(&format!("task{task}_epochs_to_converge,{e}\n"));
        }
        out.push_str(&format!(
            "convergence_difference,{}\n",
            format_float(metrics::convergence_difference(&epochs)?)
        ));
    }
    Ok(out)
}
