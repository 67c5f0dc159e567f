//! Per-iteration task-weighting strategies.
//!
//! All strategies share one contract: given the current task risks they
//! produce a positive weight per task, and those weights are constants with
//! respect to the following parameter update. None of them ever sees a
//! model gradient.
//!
//! `go4align` runs the full group pipeline each step: scale vector,
//! smoothness update, indicators, clustering, and weight expansion. The
//! remaining strategies are loss-oriented baselines, and `agrm_wrap`
//! composes grouping on top of any base strategy by clustering the base
//! strategy's weights as if they were indicators.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grouping::{kmeans_1d_exact, kmeans_lloyd, task_weights, Grouping};
use crate::indicators::IndicatorState;
use crate::indicators::TaskRiskVector;

/// Default temperature for the smoothness moving average.
pub const DEFAULT_BETA: f64 = 0.01;
/// Default temperature for dynamic weight averaging.
pub const DEFAULT_DWA_TEMPERATURE: f64 = 2.0;
/// Default number of Lloyd restarts when that engine is selected.
pub const DEFAULT_LLOYD_RESTARTS: usize = 8;

/// Which clustering routine backs the group assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterEngine {
    /// Exact dynamic program; deterministic and globally optimal.
    Exact,
    /// Lloyd iterations with k-means++ restarts.
    Lloyd { restarts: usize, seed: u64 },
}

impl Default for ClusterEngine {
    fn default() -> Self {
        ClusterEngine::Exact
    }
}

impl ClusterEngine {
    fn cluster(&self, values: &[f64], k: usize, step: u64) -> Result<Grouping> {
        match *self {
            ClusterEngine::Exact => kmeans_1d_exact(values, k),
            ClusterEngine::Lloyd { restarts, seed } => {
                kmeans_lloyd(values, k, restarts, seed.wrapping_add(step))
            }
        }
    }
}

/// Weights for one iteration, plus the grouping when the strategy formed
/// one and any additive objective term owned by the strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct WeighterOutput {
    pub weights: Vec<f64>,
    pub grouping: Option<Grouping>,
    pub aux_loss: f64,
}

impl WeighterOutput {
    fn plain(weights: Vec<f64>) -> Self {
        Self {
            weights,
            grouping: None,
            aux_loss: 0.0,
        }
    }
}

/// Weights plus the analytic gradient of the uncertainty parameters, for
/// the caller's optimizer to step.
#[derive(Debug, Clone, PartialEq)]
pub struct UwAux {
    pub weights: Vec<f64>,
    pub aux_loss: f64,
    pub grad: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Go4AlignState {
    indicators: IndicatorState,
    k: usize,
    cadence: usize,
    engine: ClusterEngine,
    step: u64,
    held: Option<(Vec<f64>, Grouping)>,
}

#[derive(Debug, Clone)]
pub struct DwaState {
    m: usize,
    temperature: f64,
    epoch_len: usize,
    in_epoch: usize,
    epoch_sum: Vec<f64>,
    /// Epoch-average risks of the last two completed epochs, oldest first.
    history: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct UwState {
    /// Log-variance per task; weights are exp(-s).
    log_vars: Vec<f64>,
}

/// Strategy state threaded through a run; one value per training run,
/// advanced only by [`WeighterState::weigh`].
#[derive(Debug, Clone)]
pub enum WeighterState {
    /// Linear scalarization: the plain unweighted sum.
    Ls { m: usize },
    /// Scale-invariant weighting: weight 1/risk, the per-step constant
    /// equivalent of minimizing the sum of log risks.
    Si { m: usize },
    /// Random loss weighting from a seeded normal stream.
    Rlw { m: usize, rng: ChaCha8Rng },
    /// Dynamic weight average over epoch-mean risk ratios.
    Dwa(DwaState),
    /// Homoscedastic uncertainty weighting with learnable log-variances.
    Uw(UwState),
    /// The full group pipeline.
    Go4Align(Go4AlignState),
    /// Any base strategy with its weights regrouped per step.
    AgrmWrap { base: Box<WeighterState>, k: usize },
}

fn check_m(m: usize) -> Result<usize> {
    if m < 2 {
        return Err(Error::InvalidTaskCount { got: m });
    }
    Ok(m)
}

impl WeighterState {
    pub fn ls(m: usize) -> Result<Self> {
        Ok(WeighterState::Ls { m: check_m(m)? })
    }

    pub fn si(m: usize) -> Result<Self> {
        Ok(WeighterState::Si { m: check_m(m)? })
    }

    pub fn rlw(m: usize, seed: u64) -> Result<Self> {
        Ok(WeighterState::Rlw {
            m: check_m(m)?,
            rng: <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed),
        })
    }

    pub fn dwa(m: usize, temperature: f64, epoch_len: usize) -> Result<Self> {
        let m = check_m(m)?;
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dwa temperature must be positive, got {temperature}"
            )));
        }
        if epoch_len == 0 {
            return Err(Error::InvalidInput("epoch length must be positive".into()));
        }
        Ok(WeighterState::Dwa(DwaState {
            m,
            temperature,
            epoch_len,
            in_epoch: 0,
            epoch_sum: vec![0.0; m],
            history: Vec::new(),
        }))
    }

    pub fn uw(m: usize) -> Result<Self> {
        Ok(WeighterState::Uw(UwState {
            log_vars: vec![0.0; check_m(m)?],
        }))
    }

    pub fn go4align(
        m: usize,
        beta: f64,
        k: usize,
        cadence: usize,
        engine: ClusterEngine,
    ) -> Result<Self> {
        let m = check_m(m)?;
        if k < 2 || k > m {
            return Err(Error::InvalidK { k, m });
        }
        if cadence == 0 {
            return Err(Error::InvalidInput("cadence must be positive".into()));
        }
        Ok(WeighterState::Go4Align(Go4AlignState {
            indicators: IndicatorState::new(m, beta)?,
            k,
            cadence,
            engine,
            step: 0,
            held: None,
        }))
    }

    /// Regroup `base`'s weights every step with an exact k-clustering.
    pub fn agrm_wrap(base: WeighterState, k: usize) -> Result<Self> {
        let m = base.task_count();
        if k < 2 || k > m {
            return Err(Error::InvalidK { k, m });
        }
        Ok(WeighterState::AgrmWrap {
            base: Box::new(base),
            k,
        })
    }

    pub fn task_count(&self) -> usize {
        match self {
            WeighterState::Ls { m } | WeighterState::Si { m } | WeighterState::Rlw { m, .. } => *m,
            WeighterState::Dwa(s) => s.m,
            WeighterState::Uw(s) => s.log_vars.len(),
            WeighterState::Go4Align(s) => s.indicators.task_count(),
            WeighterState::AgrmWrap { base, .. } => base.task_count(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            WeighterState::Ls { .. } => "ls".into(),
            WeighterState::Si { .. } => "si".into(),
            WeighterState::Rlw { .. } => "rlw".into(),
            WeighterState::Dwa(_) => "dwa".into(),
            WeighterState::Uw(_) => "uw".into(),
            WeighterState::Go4Align(_) => "go4align".into(),
            WeighterState::AgrmWrap { base, .. } => format!("agrm+{}", base.name()),
        }
    }

    /// The live indicator state, when the strategy maintains one.
    pub fn indicator_state(&self) -> Option<&IndicatorState> {
        match self {
            WeighterState::Go4Align(s) => Some(&s.indicators),
            _ => None,
        }
    }

    /// Produce this iteration's weights and advance the state.
    pub fn weigh(&mut self, risks: &TaskRiskVector) -> Result<WeighterOutput> {
        let m = self.task_count();
        if risks.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: risks.len(),
            });
        }
        match self {
            WeighterState::Ls { .. } => Ok(WeighterOutput::plain(vec![1.0; m])),
            WeighterState::Si { .. } => Ok(WeighterOutput::plain(
                risks.risks().iter().map(|&l| 1.0 / l).collect(),
            )),
            WeighterState::Rlw { rng, .. } => {
                let draws: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                let mut weights = softmax(&draws);
                for w in &mut weights {
                    *w *= m as f64;
                }
                Ok(WeighterOutput::plain(weights))
            }
            WeighterState::Dwa(state) => Ok(WeighterOutput::plain(state.step(risks))),
            WeighterState::Uw(state) => {
                let weights: Vec<f64> = state.log_vars.iter().map(|&s| (-s).exp()).collect();
                let aux_loss: f64 = state.log_vars.iter().map(|&s| s / 2.0).sum();
                Ok(WeighterOutput {
                    weights,
                    grouping: None,
                    aux_loss,
                })
            }
            WeighterState::Go4Align(state) => state.step(risks),
            WeighterState::AgrmWrap { base, k } => {
                let inner = base.weigh(risks)?;
                let mut output = agrm_wrap(&inner.weights, *k)?;
                output.aux_loss = inner.aux_loss;
                Ok(output)
            }
        }
    }

    /// Uncertainty-weighting view: weights, the additive objective term,
    /// and the analytic gradient of that total objective with respect to
    /// the log-variances.
    pub fn uw_aux(&self, risks: &TaskRiskVector) -> Result<UwAux> {
        let WeighterState::Uw(state) = self else {
            return Err(Error::WrongStrategy {
                expected: "uw",
                got: self.name(),
            });
        };
        if risks.len() != state.log_vars.len() {
            return Err(Error::DimensionMismatch {
                expected: state.log_vars.len(),
                got: risks.len(),
            });
        }
        let weights: Vec<f64> = state.log_vars.iter().map(|&s| (-s).exp()).collect();
        let aux_loss: f64 = state.log_vars.iter().map(|&s| s / 2.0).sum();
        // d/ds_m [exp(-s_m) L_m + s_m / 2] = -exp(-s_m) L_m + 1/2
        let grad: Vec<f64> = weights
            .iter()
            .zip(risks.risks())
            .map(|(&w, &l)| -w * l + 0.5)
            .collect();
        Ok(UwAux {
            weights,
            aux_loss,
            grad,
        })
    }

    /// Apply an optimizer step to the uncertainty parameters.
    pub fn uw_apply_step(&mut self, delta: &[f64]) -> Result<()> {
        let name = self.name();
        let WeighterState::Uw(state) = self else {
            return Err(Error::WrongStrategy {
                expected: "uw",
                got: name,
            });
        };
        if delta.len() != state.log_vars.len() {
            return Err(Error::DimensionMismatch {
                expected: state.log_vars.len(),
                got: delta.len(),
            });
        }
        for (s, d) in state.log_vars.iter_mut().zip(delta) {
            *s += d;
        }
        Ok(())
    }

    /// Current log-variances of the uncertainty strategy.
    pub fn uw_log_vars(&self) -> Result<&[f64]> {
        match self {
            WeighterState::Uw(state) => Ok(&state.log_vars),
            _ => Err(Error::WrongStrategy {
                expected: "uw",
                got: self.name(),
            }),
        }
    }
}

impl Go4AlignState {
    fn step(&mut self, risks: &TaskRiskVector) -> Result<WeighterOutput> {
        self.indicators.update(risks)?;
        let regroup = self.step % self.cadence as u64 == 0 || self.held.is_none();
        if regroup {
            let grouping = self
                .engine
                .cluster(self.indicators.indicators(), self.k, self.step)?;
            let weights = grouping.task_weights()?;
            self.held = Some((weights, grouping));
        }
        self.step += 1;
        let (weights, grouping) = self.held.as_ref().expect("held grouping after regroup");
        Ok(WeighterOutput {
            weights: weights.clone(),
            grouping: Some(grouping.clone()),
            aux_loss: 0.0,
        })
    }
}

impl DwaState {
    fn step(&mut self, risks: &TaskRiskVector) -> Vec<f64> {
        let weights = if self.history.len() == 2 {
            let ratios: Vec<f64> = self.history[1]
                .iter()
                .zip(&self.history[0])
                .map(|(&recent, &older)| recent / older)
                .collect();
            let scaled: Vec<f64> = ratios.iter().map(|r| r / self.temperature).collect();
            let mut w = softmax(&scaled);
            for v in &mut w {
                *v *= self.m as f64;
            }
            w
        } else {
            vec![1.0; self.m]
        };

        for (acc, &r) in self.epoch_sum.iter_mut().zip(risks.risks()) {
            *acc += r;
        }
        self.in_epoch += 1;
        if self.in_epoch == self.epoch_len {
            let avg: Vec<f64> = self
                .epoch_sum
                .iter()
                .map(|&s| s / self.epoch_len as f64)
                .collect();
            if self.history.len() == 2 {
                self.history.remove(0);
            }
            self.history.push(avg);
            self.epoch_sum.fill(0.0);
            self.in_epoch = 0;
        }
        weights
    }
}

/// Cluster a base strategy's weights as group indicators and replace each
/// weight with its group's weight.
pub fn agrm_wrap(base_weights: &[f64], k: usize) -> Result<WeighterOutput> {
    for (index, &w) in base_weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFinite {
                what: "base weights",
            });
        }
        if w <= 0.0 {
            return Err(Error::NonpositiveRisk { index, value: w });
        }
    }
    let grouping = kmeans_1d_exact(base_weights, k)?;
    let weights = task_weights(&grouping.omega, &grouping.assignment)?;
    Ok(WeighterOutput {
        weights,
        grouping: Some(grouping),
        aux_loss: 0.0,
    })
}

fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
