//! The `verify-tables` command: recompute every aggregate cell of the
//! embedded benchmark tables and compare against the published columns.

use anyhow::Result;

use go4align::metrics::{self, MetricTable, RankTies};

struct CellCheck {
    table: &'static str,
    method: String,
    metric: &'static str,
    recomputed: f64,
    published: f64,
    tolerance: f64,
}

impl CellCheck {
    fn pass(&self) -> bool {
        (self.recomputed - self.published).abs() <= self.tolerance
    }
}

/// Tolerances: the published aggregates were computed from unrounded task
/// metrics, so recomputation from the rounded table cells carries rounding
/// slack. NYUv2 mean ranks have no ties and reproduce to the printed
/// precision; CityScapes has tied method rows and uses competition (min)
/// ranking, which reproduces its published column exactly.
fn check_table(name: &'static str, csv: &str, mr_tol: f64, ties: RankTies) -> Result<Vec<CellCheck>> {
    let table = MetricTable::parse_csv(csv)?;
    let mut checks = Vec::new();
    for (i, method) in table.methods.iter().enumerate() {
        if let Some(published) = table.published_delta_m[i] {
            let recomputed =
                metrics::delta_m(&table.values[i], &table.baseline, &table.directions)?;
            let tolerance = if name == "nyuv2" && method == "LS" {
                0.01
            } else {
                0.15
            };
            checks.push(CellCheck {
                table: name,
                method: method.clone(),
                metric: "delta_m",
                recomputed,
                published,
                tolerance,
            });
        }
        if let Some(published) = table.published_mr[i] {
            let recomputed = metrics::mean_rank(&table, method, ties)?;
            checks.push(CellCheck {
                table: name,
                method: method.clone(),
                metric: "mean_rank",
                recomputed,
                published,
                tolerance: mr_tol,
            });
        }
    }
    Ok(checks)
}

pub fn cmd_verify_tables() -> Result<i32> {
    let mut checks = check_table("nyuv2", metrics::NYUV2_TABLE, 0.01, RankTies::Mean)?;
    checks.extend(check_table(
        "cityscapes",
        metrics::CITYSCAPES_TABLE,
        0.15,
        RankTies::Min,
    )?);

    let mut failures = 0;
    for check in &checks {
        let verdict = if check.pass() { "PASS" } else { "FAIL" };
        println!(
            "{} {} {}: recomputed {:.4} published {:.2} tol {:.2} {}",
            check.table,
            check.method,
            check.metric,
            check.recomputed,
            check.published,
            check.tolerance,
            verdict
        );
        if !check.pass() {
            failures += 1;
        }
    }
    println!(
        "{} cells checked, {} failed",
        checks.len(),
        failures
    );
    Ok(if failures == 0 { 0 } else { 1 })
}
