//! Overall multi-task performance metrics and the published-table fixtures.
//!
//! Two headline aggregates summarize a method across heterogeneous task
//! metrics: the average relative performance drop against a single-task
//! baseline (sign-adjusted per metric direction, in percent) and the mean
//! rank among all compared methods. Embedded fixtures carry published
//! benchmark tables for NYUv2 and CityScapes so both aggregates can be
//! regression-checked cell by cell against their published columns.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::testbed::Trajectory;

/// Published NYUv2 results: 13 methods x 9 task metrics plus the
/// single-task baseline row and the published MR / relative-drop columns.
pub const NYUV2_TABLE: &str = include_str!("../fixtures/nyuv2.csv");

/// Published CityScapes results: 12 methods x 4 task metrics.
pub const CITYSCAPES_TABLE: &str = include_str!("../fixtures/cityscapes.csv");

/// Fraction of the score range treated as "as good as the minimum" when
/// the elbow rule falls back to the plateau reading.
pub const ELBOW_PLATEAU_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricDirection {
    HigherBetter,
    LowerBetter,
}

/// Tie handling for [`mean_rank`]. `Min` gives every tied method the best
/// position in the tie block (competition ranking); `Mean` spreads the tie
/// block's positions evenly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankTies {
    Mean,
    Min,
}

/// A methods-by-metrics value table with a designated baseline row and
/// optional published aggregate columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub metrics: Vec<String>,
    pub directions: Vec<MetricDirection>,
    pub methods: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub baseline: Vec<f64>,
    pub published_mr: Vec<Option<f64>>,
    pub published_delta_m: Vec<Option<f64>>,
}

impl MetricTable {
    /// Parse the fixture CSV layout: a metric-name header with trailing
    /// `MR,DeltaM` columns, a `direction` row of 1/0 flags, the `STL`
    /// baseline row, then one row per method.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty metric table".into()))?;
        let header_fields: Vec<&str> = header.split(',').collect();
        if header_fields.len() < 4
            || header_fields[0] != "method"
            || header_fields[header_fields.len() - 2] != "MR"
            || header_fields[header_fields.len() - 1] != "DeltaM"
        {
            return Err(Error::InvalidInput(
                "metric table header must be method,<metrics...>,MR,DeltaM".into(),
            ));
        }
        let metric_count = header_fields.len() - 3;
        let metrics: Vec<String> = header_fields[1..=metric_count]
            .iter()
            .map(|s| s.to_string())
            .collect();

        let direction_row = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("missing direction row".into()))?;
        let direction_fields: Vec<&str> = direction_row.split(',').collect();
        if direction_fields.len() != header_fields.len() || direction_fields[0] != "direction" {
            return Err(Error::InvalidInput("malformed direction row".into()));
        }
        let directions = direction_fields[1..=metric_count]
            .iter()
            .map(|s| match *s {
                "1" => Ok(MetricDirection::HigherBetter),
                "0" => Ok(MetricDirection::LowerBetter),
                other => Err(Error::InvalidInput(format!(
                    "direction flag must be 0 or 1, got {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;

        let mut methods = Vec::new();
        let mut values = Vec::new();
        let mut baseline = None;
        let mut published_mr = Vec::new();
        let mut published_delta_m = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != header_fields.len() {
                return Err(Error::InvalidInput(format!(
                    "row {:?} has {} fields, expected {}",
                    fields[0],
                    fields.len(),
                    header_fields.len()
                )));
            }
            let row: Vec<f64> = fields[1..=metric_count]
                .iter()
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        Error::InvalidInput(format!("bad value {s:?} in row {:?}", fields[0]))
                    })
                })
                .collect::<Result<_>>()?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "metric table cell",
                });
            }
            let parse_opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some).map_err(|_| {
                        Error::InvalidInput(format!("bad aggregate {s:?} in row {:?}", fields[0]))
                    })
                }
            };
            if fields[0] == "STL" {
                baseline = Some(row);
            } else {
                methods.push(fields[0].to_string());
                values.push(row);
                published_mr.push(parse_opt(fields[header_fields.len() - 2])?);
                published_delta_m.push(parse_opt(fields[header_fields.len() - 1])?);
            }
        }
        let baseline =
            baseline.ok_or_else(|| Error::InvalidInput("missing STL baseline row".into()))?;
        if methods.is_empty() {
            return Err(Error::InvalidInput("no method rows".into()));
        }
        Ok(Self {
            metrics,
            directions,
            methods,
            values,
            baseline,
            published_mr,
            published_delta_m,
        })
    }

    pub fn method_row(&self, method: &str) -> Option<&[f64]> {
        self.methods
            .iter()
            .position(|m| m == method)
            .map(|i| self.values[i].as_slice())
    }
}

/// Average relative performance drop against the baseline, in percent.
/// Negative means the method beats the baseline on balance.
pub fn delta_m(method: &[f64], baseline: &[f64], directions: &[MetricDirection]) -> Result<f64> {
    if method.len() != baseline.len() || method.len() != directions.len() {
        return Err(Error::DimensionMismatch {
            expected: directions.len(),
            got: method.len(),
        });
    }
    if method.is_empty() {
        return Err(Error::InvalidInput("empty metric rows".into()));
    }
    let mut total = 0.0;
    for (index, ((&m, &b), &direction)) in
        method.iter().zip(baseline).zip(directions).enumerate()
    {
        if b == 0.0 {
            return Err(Error::ZeroBaseline { index });
        }
        let drop = (m - b) / b;
        total += match direction {
            MetricDirection::HigherBetter => -drop,
            MetricDirection::LowerBetter => drop,
        };
    }
    Ok(100.0 * total / method.len() as f64)
}

/// Ranks of one column of values (best = 1), respecting the direction.
fn column_ranks(values: &[f64], direction: MetricDirection, ties: RankTies) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| match direction {
        MetricDirection::HigherBetter => values[b].total_cmp(&values[a]),
        MetricDirection::LowerBetter => values[a].total_cmp(&values[b]),
    });
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = match ties {
            RankTies::Min => (i + 1) as f64,
            RankTies::Mean => (i + 1 + j + 1) as f64 / 2.0,
        };
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Mean rank of `method` across all metrics, ranked among the table's
/// methods (the baseline row never participates).
pub fn mean_rank(table: &MetricTable, method: &str, ties: RankTies) -> Result<f64> {
    let position = table
        .methods
        .iter()
        .position(|m| m == method)
        .ok_or_else(|| Error::InvalidInput(format!("unknown method {method:?}")))?;
    if table.metrics.is_empty() || table.methods.is_empty() {
        return Err(Error::InvalidInput("empty metric table".into()));
    }
    let mut total = 0.0;
    for (metric, &direction) in table.directions.iter().enumerate() {
        let column: Vec<f64> = table.values.iter().map(|row| row[metric]).collect();
        total += column_ranks(&column, direction, ties)[position];
    }
    Ok(total / table.metrics.len() as f64)
}

/// Population standard deviation of per-task epochs-to-convergence; the
/// spread is the misalignment proxy.
pub fn convergence_difference(epochs: &[usize]) -> Result<f64> {
    if epochs.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two tasks to measure convergence spread".into(),
        ));
    }
    let n = epochs.len() as f64;
    let mean = epochs.iter().map(|&e| e as f64).sum::<f64>() / n;
    let variance = epochs
        .iter()
        .map(|&e| {
            let d = e as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(variance.sqrt())
}

/// Per-epoch share of each task in the total risk, before scaling and
/// after (`weights * risks`). Every row sums to one.
pub fn risk_ratios(trajectory: &Trajectory) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if trajectory.records.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let normalize = |rows: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        rows.into_iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                row.into_iter().map(|v| v / total).collect()
            })
            .collect()
    };
    Ok((
        normalize(trajectory.epoch_mean_risks()),
        normalize(trajectory.epoch_mean_scaled()),
    ))
}

/// Pick the group count at the knee of a lower-is-better score curve.
///
/// The knee is the interior point maximizing the discrete second forward
/// difference. When no interior point curves upward (flat or degenerate
/// curves) the smallest k whose score is within a small tolerance of the
/// minimum wins; with fewer than three points the argmin is returned
/// directly, smallest k on ties.
pub fn elbow_select(scores: &BTreeMap<usize, f64>) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("empty score curve".into()));
    }
    if scores.values().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "elbow scores",
        });
    }
    let ks: Vec<usize> = scores.keys().cloned().collect();
    let vals: Vec<f64> = scores.values().cloned().collect();

    if ks.len() < 3 {
        let mut best = 0;
        for i in 1..ks.len() {
            if vals[i] < vals[best] {
                best = i;
            }
        }
        return Ok(ks[best]);
    }

    let mut knee: Option<(usize, f64)> = None;
    for i in 1..ks.len() - 1 {
        let curvature = vals[i + 1] - 2.0 * vals[i] + vals[i - 1];
        if curvature > 0.0 && knee.as_ref().is_none_or(|&(_, c)| curvature > c) {
            knee = Some((i, curvature));
        }
    }
    if let Some((i, _)) = knee {
        return Ok(ks[i]);
    }

    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tolerance = ELBOW_PLATEAU_TOLERANCE * (max - min);
    for (i, &v) in vals.iter().enumerate() {
        if v <= min + tolerance {
            return Ok(ks[i]);
        }
    }
    unreachable!("minimum is always within tolerance of itself")
}
