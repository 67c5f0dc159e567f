//! Synthetic multi-task problems with analytic gradients.
//!
//! Each task is a quadratic over shared parameters plus a private head:
//! `L_m = s_m * (0.5 * ||A_m x - b_m||^2 + 0.5 * ||h_m - c_m||^2)` with a
//! per-task scale constant `s_m`. Scale constants spanning several orders
//! of magnitude manufacture the task-imbalance phenomenon at desk scale,
//! and the per-task optimum has a closed form, so relative drops against a
//! single-task baseline need no second training run.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::indicators::TaskRiskVector;
use crate::weighters::{WeighterOutput, WeighterState};

/// Any risk above this (or any non-finite risk) aborts training.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Data of one task: least-squares block on the shared parameters plus a
/// quadratic pull of the head toward its target.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub design: DMatrix<f64>,
    pub target: DVector<f64>,
    pub head_target: DVector<f64>,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProblem {
    pub tasks: Vec<TaskData>,
    pub shared_dim: usize,
    pub head_dim: usize,
}

impl SyntheticProblem {
    pub fn new(tasks: Vec<TaskData>, shared_dim: usize, head_dim: usize) -> Result<Self> {
        if tasks.len() < 2 {
            return Err(Error::InvalidTaskCount { got: tasks.len() });
        }
        for (index, task) in tasks.iter().enumerate() {
            if task.design.ncols() != shared_dim
                || task.design.nrows() != task.target.len()
                || task.head_target.len() != head_dim
            {
                return Err(Error::InvalidInput(format!(
                    "task {index} data does not match dims (shared {shared_dim}, head {head_dim})"
                )));
            }
            if !(task.scale.is_finite() && task.scale > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "task {index} scale must be positive, got {}",
                    task.scale
                )));
            }
        }
        Ok(Self {
            tasks,
            shared_dim,
            head_dim,
        })
    }

    /// Random problem instance. With `rows > shared_dim` the per-task
    /// least-squares system is inconsistent almost surely, so every
    /// single-task optimum stays strictly positive and relative drops
    /// against it are well defined.
    ///
    /// `data_std` sets the magnitude of targets and head targets. Together
    /// with a matching parameter initialization it controls the absolute
    /// risk range; keep `scale * data_std^2` within a few orders of one so
    /// history-sensitive strategies operate in their intended regime.
    pub fn random(
        shared_dim: usize,
        head_dim: usize,
        rows: usize,
        scales: &[f64],
        data_std: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::random_with_duplicates(shared_dim, head_dim, rows, scales, data_std, seed, &[])
    }

    /// Random instance where every task listed in one duplicate group
    /// shares identical data (scales stay per-task). Useful for building
    /// problems with known task similarity structure.
    pub fn random_with_duplicates(
        shared_dim: usize,
        head_dim: usize,
        rows: usize,
        scales: &[f64],
        data_std: f64,
        seed: u64,
        duplicate_groups: &[Vec<usize>],
    ) -> Result<Self> {
        let m = scales.len();
        if m < 2 {
            return Err(Error::InvalidTaskCount { got: m });
        }
        if shared_dim == 0 || head_dim == 0 || rows == 0 {
            return Err(Error::InvalidInput(
                "dimensions and row count must be positive".into(),
            ));
        }
        if !(data_std.is_finite() && data_std > 0.0) {
            return Err(Error::InvalidInput(format!(
                "data std must be positive, got {data_std}"
            )));
        }
        let mut source: Vec<usize> = (0..m).collect();
        let mut seen = vec![false; m];
        for group in duplicate_groups {
            let Some(&leader) = group.first() else {
                continue;
            };
            for &member in group {
                if member >= m {
                    return Err(Error::InvalidInput(format!(
                        "duplicate group member {member} out of range for {m} tasks"
                    )));
                }
                if seen[member] {
                    return Err(Error::InvalidInput(format!(
                        "task {member} appears in more than one duplicate group"
                    )));
                }
                seen[member] = true;
                source[member] = leader;
            }
        }

        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let col_scale = 1.0 / (rows as f64).sqrt();
        let mut bases: Vec<Option<(DMatrix<f64>, DVector<f64>, DVector<f64>)>> = vec![None; m];
        for &leader in &source {
            if bases[leader].is_none() {
                let design = DMatrix::from_fn(rows, shared_dim, |_, _| {
                    col_scale * rng.sample::<f64, _>(StandardNormal)
                });
                let target =
                    DVector::from_fn(rows, |_, _| data_std * rng.sample::<f64, _>(StandardNormal));
                let head_target = DVector::from_fn(head_dim, |_, _| {
                    data_std * rng.sample::<f64, _>(StandardNormal)
                });
                bases[leader] = Some((design, target, head_target));
            }
        }
        let tasks = source
            .iter()
            .zip(scales)
            .map(|(&leader, &scale)| {
                let (design, target, head_target) =
                    bases[leader].clone().expect("leader data generated");
                TaskData {
                    design,
                    target,
                    head_target,
                    scale,
                }
            })
            .collect();
        Self::new(tasks, shared_dim, head_dim)
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    /// Closed-form single-task optima: least-squares residual on the
    /// shared block (head term vanishes at its target).
    pub fn per_task_optima(&self) -> Vec<f64> {
        self.tasks
            .iter()
            .map(|task| {
                let svd = task.design.clone().svd(true, true);
                let theta = svd
                    .solve(&task.target, 1e-12)
                    .expect("svd solve of finite design");
                let residual = &task.target - &task.design * theta;
                task.scale * 0.5 * residual.norm_squared()
            })
            .collect()
    }
}

/// Shared parameters plus one head per task.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub shared: DVector<f64>,
    pub heads: Vec<DVector<f64>>,
}

impl Params {
    /// Normal initialization with the given standard deviation. All heads
    /// start from one common draw, so tasks with identical data evolve
    /// exactly symmetrically.
    pub fn init(problem: &SyntheticProblem, seed: u64, std: f64) -> Self {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let shared = DVector::from_fn(problem.shared_dim, |_, _| {
            std * rng.sample::<f64, _>(StandardNormal)
        });
        let head = DVector::from_fn(problem.head_dim, |_, _| {
            std * rng.sample::<f64, _>(StandardNormal)
        });
        Params {
            shared,
            heads: vec![head; problem.task_count()],
        }
    }

    fn check_shapes(&self, problem: &SyntheticProblem) -> Result<()> {
        if self.shared.len() != problem.shared_dim || self.heads.len() != problem.task_count() {
            return Err(Error::DimensionMismatch {
                expected: problem.shared_dim,
                got: self.shared.len(),
            });
        }
        for head in &self.heads {
            if head.len() != problem.head_dim {
                return Err(Error::DimensionMismatch {
                    expected: problem.head_dim,
                    got: head.len(),
                });
            }
        }
        Ok(())
    }

    fn flatten(&self) -> Vec<f64> {
        let mut flat: Vec<f64> = self.shared.iter().cloned().collect();
        for head in &self.heads {
            flat.extend(head.iter().cloned());
        }
        flat
    }

    fn assign_from_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for v in self.shared.iter_mut() {
            *v = flat[offset];
            offset += 1;
        }
        for head in &mut self.heads {
            for v in head.iter_mut() {
                *v = flat[offset];
                offset += 1;
            }
        }
    }
}

/// Gradient of the weighted risk sum, split into the shared block and one
/// block per head.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGradients {
    pub shared: DVector<f64>,
    pub heads: Vec<DVector<f64>>,
}

impl TaskGradients {
    fn flatten(&self) -> Vec<f64> {
        let mut flat: Vec<f64> = self.shared.iter().cloned().collect();
        for head in &self.heads {
            flat.extend(head.iter().cloned());
        }
        flat
    }
}

/// Raw per-task risk values (no clamping, no validation of magnitude).
pub fn task_risk_values(problem: &SyntheticProblem, params: &Params) -> Result<Vec<f64>> {
    params.check_shapes(problem)?;
    Ok(problem
        .tasks
        .iter()
        .zip(&params.heads)
        .map(|(task, head)| {
            let residual = &task.design * &params.shared - &task.target;
            let head_residual = head - &task.head_target;
            task.scale * 0.5 * (residual.norm_squared() + head_residual.norm_squared())
        })
        .collect())
}

/// Exact risk evaluation packaged for the weighting layer.
pub fn task_risks(
    problem: &SyntheticProblem,
    params: &Params,
    iteration: u64,
) -> Result<TaskRiskVector> {
    TaskRiskVector::new(task_risk_values(problem, params)?, iteration)
}

/// Gradient of `sum_m weights_m * L_m` with the weights held constant:
/// the shared block accumulates every task, each head sees only its own.
pub fn weighted_gradient(
    problem: &SyntheticProblem,
    params: &Params,
    weights: &[f64],
) -> Result<TaskGradients> {
    params.check_shapes(problem)?;
    if weights.len() != problem.task_count() {
        return Err(Error::DimensionMismatch {
            expected: problem.task_count(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite {
            what: "task weights",
        });
    }
    if let Some(index) = weights.iter().position(|&w| w < 0.0) {
        return Err(Error::InvalidInput(format!(
            "negative weight at task {index}"
        )));
    }
    let mut shared = DVector::zeros(problem.shared_dim);
    let mut heads = Vec::with_capacity(problem.task_count());
    for ((task, head), &weight) in problem.tasks.iter().zip(&params.heads).zip(weights) {
        let residual = &task.design * &params.shared - &task.target;
        shared += task.design.transpose() * residual * (weight * task.scale);
        heads.push((head - &task.head_target) * (weight * task.scale));
    }
    Ok(TaskGradients { shared, heads })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Adam constants: conventional bias-corrected moments.
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

/// First-order optimizer over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct VectorOptimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    m1: Vec<f64>,
    m2: Vec<f64>,
    step: u64,
}

impl VectorOptimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, dim: usize) -> Self {
        Self {
            kind,
            learning_rate,
            m1: vec![0.0; dim],
            m2: vec![0.0; dim],
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.learning_rate * g;
                }
            }
            OptimizerKind::Adam => {
                self.step += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
                let c2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
                for ((p, g), (m1, m2)) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(self.m1.iter_mut().zip(self.m2.iter_mut()))
                {
                    *m1 = ADAM_BETA1 * *m1 + (1.0 - ADAM_BETA1) * g;
                    *m2 = ADAM_BETA2 * *m2 + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = *m1 / c1;
                    let v_hat = *m2 / c2;
                    *p -= self.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub iterations: usize,
    pub epoch_len: usize,
    /// Standard deviation of the parameter initialization; measured
    /// against the problem's `data_std` it sets the initial risk range.
    pub init_std: f64,
}

/// One iteration of a run: raw risks, the weights applied, grouping labels
/// when the strategy formed groups, and the scaled risks `weights * risks`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub risks: Vec<f64>,
    pub weights: Vec<f64>,
    pub labels: Option<Vec<usize>>,
    pub scaled: Vec<f64>,
}

/// Full record of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub m: usize,
    pub epoch_len: usize,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub final_params: Option<Params>,
    pub wall_time: Duration,
}

impl Trajectory {
    pub fn epoch_count(&self) -> usize {
        self.records.len().div_ceil(self.epoch_len)
    }

    /// Per-epoch mean of the raw risks, one row per epoch.
    pub fn epoch_mean_risks(&self) -> Vec<Vec<f64>> {
        self.epoch_means(|r| &r.risks)
    }

    /// Per-epoch mean of the scaled risks.
    pub fn epoch_mean_scaled(&self) -> Vec<Vec<f64>> {
        self.epoch_means(|r| &r.scaled)
    }

    fn epoch_means(&self, field: impl Fn(&IterationRecord) -> &Vec<f64>) -> Vec<Vec<f64>> {
        self.records
            .chunks(self.epoch_len)
            .map(|chunk| {
                let mut mean = vec![0.0; self.m];
                for record in chunk {
                    for (acc, v) in mean.iter_mut().zip(field(record)) {
                        *acc += v;
                    }
                }
                for v in &mut mean {
                    *v /= chunk.len() as f64;
                }
                mean
            })
            .collect()
    }

    /// Fixed-column CSV: iteration, per-task risks, weights, labels
    /// (-1 when the strategy groups nothing), and scaled risks. Floats
    /// carry 17 significant digits so files are byte-stable and lossless.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str("iteration");
        for prefix in ["risk", "weight", "label", "scaled"] {
            for t in 0..self.m {
                out.push_str(&format!(",{prefix}_{t}"));
            }
        }
        out.push('\n');
        for (iteration, record) in self.records.iter().enumerate() {
            out.push_str(&iteration.to_string());
            for v in &record.risks {
                out.push_str(&format!(",{}", format_float(*v)));
            }
            for v in &record.weights {
                out.push_str(&format!(",{}", format_float(*v)));
            }
            match &record.labels {
                Some(labels) => {
                    for l in labels {
                        out.push_str(&format!(",{l}"));
                    }
                }
                None => {
                    for _ in 0..self.m {
                        out.push_str(",-1");
                    }
                }
            }
            for v in &record.scaled {
                out.push_str(&format!(",{}", format_float(*v)));
            }
            out.push('\n');
        }
        out
    }

    /// Parse a trajectory CSV back into records. Only the per-iteration
    /// data lives in the file; the epoch length is supplied by the caller
    /// and run metadata (seed, parameters, wall time) is not recovered.
    pub fn parse_csv(text: &str, epoch_len: usize) -> Result<Self> {
        if epoch_len == 0 {
            return Err(Error::InvalidInput("epoch length must be positive".into()));
        }
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty trajectory csv".into()))?;
        let columns = header.split(',').count();
        if columns < 5 || (columns - 1) % 4 != 0 {
            return Err(Error::InvalidInput(format!(
                "unexpected trajectory column count {columns}"
            )));
        }
        let m = (columns - 1) / 4;
        let mut records = Vec::new();
        for (line_no, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != columns {
                return Err(Error::InvalidInput(format!(
                    "row {line_no} has {} fields, expected {columns}",
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad float {s:?} in row {line_no}")))
            };
            let risks = fields[1..1 + m].iter().map(|s| parse(s)).collect::<Result<_>>()?;
            let weights = fields[1 + m..1 + 2 * m]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_>>()?;
            let raw_labels: Vec<i64> = fields[1 + 2 * m..1 + 3 * m]
                .iter()
                .map(|s| {
                    s.parse::<i64>().map_err(|_| {
                        Error::InvalidInput(format!("bad label {s:?} in row {line_no}"))
                    })
                })
                .collect::<Result<_>>()?;
            let labels = if raw_labels.iter().all(|&l| l >= 0) {
                Some(raw_labels.into_iter().map(|l| l as usize).collect())
            } else {
                None
            };
            let scaled = fields[1 + 3 * m..1 + 4 * m]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_>>()?;
            records.push(IterationRecord {
                risks,
                weights,
                labels,
                scaled,
            });
        }
        Ok(Trajectory {
            m,
            epoch_len,
            seed: 0,
            records,
            final_params: None,
            wall_time: Duration::ZERO,
        })
    }
}

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Run the full loop: evaluate risks, ask the weighter for this step's
/// weights, then descend the weighted risk sum. For the uncertainty
/// strategy the log-variance parameters ride a second optimizer with the
/// same settings, fed by the analytic auxiliary gradient.
pub fn train(
    problem: &SyntheticProblem,
    weighter: &mut WeighterState,
    config: &TrainConfig,
    seed: u64,
) -> Result<Trajectory> {
    if weighter.task_count() != problem.task_count() {
        return Err(Error::DimensionMismatch {
            expected: problem.task_count(),
            got: weighter.task_count(),
        });
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(Error::InvalidInput(format!(
            "learning rate must be positive, got {}",
            config.learning_rate
        )));
    }
    if config.epoch_len == 0 {
        return Err(Error::InvalidInput("epoch length must be positive".into()));
    }
    if !(config.init_std.is_finite() && config.init_std >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "init std must be finite and nonnegative, got {}",
            config.init_std
        )));
    }

    let start = Instant::now();
    let m = problem.task_count();
    let mut params = Params::init(problem, seed, config.init_std);
    let dim = problem.shared_dim + m * problem.head_dim;
    let mut optimizer = VectorOptimizer::new(config.optimizer, config.learning_rate, dim);
    let mut uw_optimizer = matches!(weighter, WeighterState::Uw(_))
        .then(|| VectorOptimizer::new(config.optimizer, config.learning_rate, m));

    let mut records = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let raw = task_risk_values(problem, &params)?;
        if raw.iter().any(|r| !r.is_finite() || *r > DIVERGENCE_LIMIT) {
            return Err(Error::Divergence { iteration });
        }
        let risks = TaskRiskVector::new(raw.clone(), iteration as u64)?;
        let WeighterOutput {
            weights, grouping, ..
        } = weighter.weigh(&risks)?;

        if let Some(uw_opt) = uw_optimizer.as_mut() {
            let aux = weighter.uw_aux(&risks)?;
            let before = weighter.uw_log_vars()?.to_vec();
            let mut stepped = before.clone();
            uw_opt.step(&mut stepped, &aux.grad);
            let delta: Vec<f64> = stepped.iter().zip(&before).map(|(n, o)| n - o).collect();
            weighter.uw_apply_step(&delta)?;
        }

        let scaled: Vec<f64> = weights.iter().zip(&raw).map(|(w, r)| w * r).collect();
        records.push(IterationRecord {
            risks: raw,
            weights: weights.clone(),
            labels: grouping.map(|g| g.labels),
            scaled,
        });

        let grads = weighted_gradient(problem, &params, &weights)?;
        let mut flat = params.flatten();
        optimizer.step(&mut flat, &grads.flatten());
        params.assign_from_flat(&flat);
    }

    Ok(Trajectory {
        m,
        epoch_len: config.epoch_len,
        seed,
        records,
        final_params: Some(params),
        wall_time: start.elapsed(),
    })
}

/// First epoch index from which a task's epoch-average risk stays below
/// its threshold; the epoch count itself when it never does.
pub fn epochs_to_converge(trajectory: &Trajectory, thresholds: &[f64]) -> Result<Vec<usize>> {
    if thresholds.len() != trajectory.m {
        return Err(Error::DimensionMismatch {
            expected: trajectory.m,
            got: thresholds.len(),
        });
    }
    if thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidInput("thresholds must be positive".into()));
    }
    let means = trajectory.epoch_mean_risks();
    Ok((0..trajectory.m)
        .map(|task| {
            means
                .iter()
                .rposition(|epoch| epoch[task] >= thresholds[task])
                .map_or(0, |last_violation| last_violation + 1)
        })
        .collect())
}
