//! The `sweep-k` command: score every candidate group count and pick the
//! elbow.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use go4align::metrics;
use go4align::testbed::format_float;

use crate::config::{KSpec, RunConfig};
use crate::run::run_scored;

pub fn cmd_sweep_k(config_path: &Path) -> Result<i32> {
    let config = RunConfig::load(config_path)?;
    if !config.strategy_kind()?.groups() {
        bail!(
            "sweep-k needs a grouping strategy (go4align or agrm+<base>), got {:?}",
            config.strategy.name
        );
    }
    if matches!(config.strategy.k, Some(KSpec::Explicit(_))) {
        bail!("sweep-k needs strategy.k = \"elbow\" (or absent), not an explicit k");
    }

    let problem = config.build_problem()?;
    let optima = problem.per_task_optima();
    let m = config.task_count();

    let mut scores = BTreeMap::new();
    for k in 2..=m {
        match run_scored(&config, &problem, &optima, k)? {
            Some(run) if run.score.is_finite() => {
                scores.insert(k, run.score);
            }
            _ => {
                log::warn!("excluding diverged candidate k={k} from the elbow curve");
            }
        }
    }
    if scores.is_empty() {
        bail!("every candidate group count diverged; lower the learning rate");
    }
    let chosen = metrics::elbow_select(&scores)?;

    let dir = &config.output.dir;
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output dir {}", dir.display()))?;
    std::fs::write(dir.join("sweep.csv"), sweep_csv(&scores, chosen))?;

    for (k, score) in &scores {
        println!("k={k} score={score:.6}");
    }
    println!("selected k = {chosen}");
    Ok(0)
}

pub fn sweep_csv(scores: &BTreeMap<usize, f64>, chosen: usize) -> String {
    let mut out = String::from("k,score,selected\n");
    for (k, score) in scores {
        out.push_str(&format!(
            "{k},{},{}\n",
            format_float(*score),
            u8::from(*k == chosen)
        ));
    }
    out
}
