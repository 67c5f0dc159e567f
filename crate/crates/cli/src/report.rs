//! The `report` command: derive per-epoch risk-share reports from a
//! trajectory CSV written by `run`.

use std::path::Path;

use anyhow::{Context, Result};

use go4align::metrics;
use go4align::testbed::{format_float, Trajectory};

pub fn cmd_report(trajectory_path: &Path, epoch_len: usize, out_dir: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(trajectory_path)
        .with_context(|| format!("cannot read trajectory {}", trajectory_path.display()))?;
    let trajectory = Trajectory::parse_csv(&text, epoch_len)?;
    let (unscaled, scaled) = metrics::risk_ratios(&trajectory)?;

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output dir {}", out_dir.display()))?;
    std::fs::write(
        out_dir.join("risk_ratios_unscaled.csv"),
        ratios_csv(&unscaled),
    )?;
    std::fs::write(out_dir.join("risk_ratios_scaled.csv"), ratios_csv(&scaled))?;

    println!(
        "report complete: {} epochs over {} tasks, artifacts in {}",
        unscaled.len(),
        trajectory.m,
        out_dir.display()
    );
    Ok(0)
}

fn ratios_csv(rows: &[Vec<f64>]) -> String {
    let m = rows.first().map_or(0, Vec::len);
    let mut out = String::from("epoch");
    for task in 0..m {
        out.push_str(&format!(",share_{task}"));
    }
    out.push('\n');
    for (epoch, row) in rows.iter().enumerate() {
        out.push_str(&epoch.to_string());
        for v in row {
            out.push_str(&format!(",{}", format_float(*v)));
        }
        out.push('\n');
    }
    out
}
