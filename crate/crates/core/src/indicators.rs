//! Risk-guided group indicators.
//!
//! Each task contributes one scalar indicator built from two ingredients:
//! a scale vector that rebalances tasks toward the mean risk, and a
//! smoothness vector that tracks risk history through a normalized
//! exponential moving average. Their elementwise product is what the
//! grouping stage clusters.
//!
//! Everything here is computed from risk values alone. The outputs are
//! constants with respect to the parameter update; no gradient ever flows
//! through them.

use crate::error::{Error, Result};

/// Risks below this are clamped up to it before any weighting math runs.
pub const RISK_CLAMP_EPSILON: f64 = 1e-12;

/// Tolerance for accepting an input smoothness vector as a simplex vector.
pub const SIMPLEX_SUM_TOLERANCE: f64 = 1e-9;

/// Per-task empirical risks observed at one training iteration.
///
/// Construction clamps risks in `[0, RISK_CLAMP_EPSILON)` up to the epsilon
/// (with a logged warning) and rejects strictly negative or non-finite
/// entries, so downstream code can rely on strictly positive risks.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRiskVector {
    risks: Vec<f64>,
    iteration: u64,
}

impl TaskRiskVector {
    pub fn new(mut risks: Vec<f64>, iteration: u64) -> Result<Self> {
        if risks.len() < 2 {
            return Err(Error::InvalidTaskCount { got: risks.len() });
        }
        let mut clamped = 0usize;
        for (index, r) in risks.iter_mut().enumerate() {
            if !r.is_finite() {
                return Err(Error::NonFinite { what: "task risks" });
            }
            if *r < 0.0 {
                return Err(Error::NonpositiveRisk { index, value: *r });
            }
            if *r < RISK_CLAMP_EPSILON {
                *r = RISK_CLAMP_EPSILON;
                clamped += 1;
            }
        }
        if clamped > 0 {
            log::warn!(
                "clamped {clamped} near-zero task risk(s) to {RISK_CLAMP_EPSILON:e} at iteration {iteration}"
            );
        }
        Ok(Self { risks, iteration })
    }

    pub fn risks(&self) -> &[f64] {
        &self.risks
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Number of tasks M.
    pub fn len(&self) -> usize {
        self.risks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.risks.is_empty()
    }
}

/// Initial smoothness vector: uniform mass over the M tasks.
pub fn init_smoothness(m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidTaskCount { got: m });
    }
    Ok(vec![1.0 / m as f64; m])
}

/// Scale vector: the mean risk divided by each task's risk.
///
/// Multiplying each risk by its scale entry lands every task exactly on the
/// mean, so this alone equalizes the weighted risks across tasks.
pub fn scale_vector(risks: &TaskRiskVector) -> Result<Vec<f64>> {
    let r = risks.risks();
    for (index, &value) in r.iter().enumerate() {
        if value <= 0.0 {
            return Err(Error::NonpositiveRisk { index, value });
        }
    }
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    Ok(r.iter().map(|&v| mean / v).collect())
}

/// One step of the normalized exponential moving average over risks.
///
/// Returns `normalize(prev_q[m] * exp(-beta * risk[m]))`. The exponent is
/// shifted by the minimum risk before evaluation; the shift cancels under
/// normalization and keeps the products away from a simultaneous underflow
/// to zero. `beta = 0` leaves the vector unchanged up to renormalization.
pub fn smoothness_update(prev_q: &[f64], risks: &TaskRiskVector, beta: f64) -> Result<Vec<f64>> {
    if prev_q.len() != risks.len() {
        return Err(Error::DimensionMismatch {
            expected: risks.len(),
            got: prev_q.len(),
        });
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidInput(format!(
            "temperature beta must be finite and nonnegative, got {beta}"
        )));
    }
    let sum: f64 = prev_q.iter().sum();
    if prev_q.iter().any(|&q| q < 0.0) || (sum - 1.0).abs() > SIMPLEX_SUM_TOLERANCE {
        return Err(Error::InvalidSimplex { sum });
    }
    let r = risks.risks();
    let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
    let weighted: Vec<f64> = prev_q
        .iter()
        .zip(r)
        .map(|(&q, &l)| q * (-beta * (l - min)).exp())
        .collect();
    let total: f64 = weighted.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NonFinite {
            what: "smoothness normalization",
        });
    }
    Ok(weighted.into_iter().map(|w| w / total).collect())
}

/// Group indicators: elementwise product of scale and smoothness vectors.
pub fn group_indicator(scale: &[f64], smoothness: &[f64]) -> Result<Vec<f64>> {
    if scale.len() != smoothness.len() {
        return Err(Error::DimensionMismatch {
            expected: scale.len(),
            got: smoothness.len(),
        });
    }
    Ok(scale
        .iter()
        .zip(smoothness)
        .map(|(&p, &q)| p * q)
        .collect())
}

/// Indicator state carried across iterations of one run.
///
/// The smoothness vector is the only persistent part; scale and indicators
/// are recomputed from the current risks on every update.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorState {
    smoothness: Vec<f64>,
    scale: Vec<f64>,
    indicators: Vec<f64>,
    beta: f64,
}

impl IndicatorState {
    pub fn new(m: usize, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidInput(format!(
                "temperature beta must be finite and nonnegative, got {beta}"
            )));
        }
        let smoothness = init_smoothness(m)?;
        Ok(Self {
            scale: vec![1.0; m],
            indicators: smoothness.clone(),
            smoothness,
            beta,
        })
    }

    /// Advance the state with one iteration's risks and return the fresh
    /// group indicators.
    pub fn update(&mut self, risks: &TaskRiskVector) -> Result<&[f64]> {
        if risks.len() != self.smoothness.len() {
            return Err(Error::DimensionMismatch {
                expected: self.smoothness.len(),
                got: risks.len(),
            });
        }
        let scale = scale_vector(risks)?;
        let smoothness = smoothness_update(&self.smoothness, risks, self.beta)?;
        let indicators = group_indicator(&scale, &smoothness)?;
        self.scale = scale;
        self.smoothness = smoothness;
        self.indicators = indicators;
        Ok(&self.indicators)
    }

    pub fn smoothness(&self) -> &[f64] {
        &self.smoothness
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn indicators(&self) -> &[f64] {
        &self.indicators
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn task_count(&self) -> usize {
        self.smoothness.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rv(risks: &[f64]) -> TaskRiskVector {
        TaskRiskVector::new(risks.to_vec(), 0).unwrap()
    }

    #[test]
    fn init_smoothness_is_uniform() {
        assert_eq!(init_smoothness(2).unwrap(), vec![0.5, 0.5]);
        let q = init_smoothness(3).unwrap();
        for &v in &q {
            assert_relative_eq!(v, 1.0 / 3.0, max_relative = 1e-15);
        }
        assert!(matches!(
            init_smoothness(1),
            Err(Error::InvalidTaskCount { got: 1 })
        ));
    }

    #[test]
    fn risk_vector_rejects_negative_and_clamps_zero() {
        assert!(matches!(
            TaskRiskVector::new(vec![1.0, -0.5], 0),
            Err(Error::NonpositiveRisk { index: 1, .. })
        ));
        assert!(matches!(
            TaskRiskVector::new(vec![1.0, f64::NAN], 0),
            Err(Error::NonFinite { .. })
        ));
        let v = TaskRiskVector::new(vec![0.0, 1.0], 3).unwrap();
        assert_eq!(v.risks()[0], RISK_CLAMP_EPSILON);
        assert_eq!(v.iteration(), 3);
    }

    #[test]
    fn scale_vector_equal_risks_is_identity() {
        assert_eq!(scale_vector(&rv(&[1.0, 1.0, 1.0])).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn scale_vector_hand_values() {
        // risks [1, 2, 4]: mean 7/3
        let p = scale_vector(&rv(&[1.0, 2.0, 4.0])).unwrap();
        assert_relative_eq!(p[0], 7.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(p[1], 7.0 / 6.0, max_relative = 1e-15);
        assert_relative_eq!(p[2], 7.0 / 12.0, max_relative = 1e-15);

        // risks [0.5, 1.5]: mean 1
        let p = scale_vector(&rv(&[0.5, 1.5])).unwrap();
        assert_relative_eq!(p[0], 2.0, max_relative = 1e-15);
        assert_relative_eq!(p[1], 2.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn scale_vector_equalizes_weighted_risks() {
        let risks = rv(&[0.3, 11.0, 2.5, 0.004]);
        let p = scale_vector(&risks).unwrap();
        let mean = risks.risks().iter().sum::<f64>() / 4.0;
        for (pm, lm) in p.iter().zip(risks.risks()) {
            assert!((pm * lm - mean).abs() <= 1e-12 * mean);
        }
    }

    #[test]
    fn smoothness_beta_zero_is_fixpoint() {
        let q = smoothness_update(&[0.3, 0.7], &rv(&[5.0, 0.1]), 0.0).unwrap();
        assert_relative_eq!(q[0], 0.3, max_relative = 1e-12);
        assert_relative_eq!(q[1], 0.7, max_relative = 1e-12);
    }

    #[test]
    fn smoothness_hand_values() {
        // beta = ln 2, risks [1, 2]: factors 1/2 and 1/4
        let q = smoothness_update(&[0.5, 0.5], &rv(&[1.0, 2.0]), std::f64::consts::LN_2).unwrap();
        assert_relative_eq!(q[0], 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(q[1], 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn smoothness_equal_risks_cancel() {
        let prev = [0.2, 0.5, 0.3];
        let q = smoothness_update(&prev, &rv(&[4.0, 4.0, 4.0]), 1.3).unwrap();
        for (a, b) in q.iter().zip(&prev) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn smoothness_rejects_off_simplex_input() {
        let err = smoothness_update(&[0.6, 0.6], &rv(&[1.0, 1.0]), 0.1);
        assert!(matches!(err, Err(Error::InvalidSimplex { .. })));
        let err = smoothness_update(&[1.2, -0.2], &rv(&[1.0, 1.0]), 0.1);
        assert!(matches!(err, Err(Error::InvalidSimplex { .. })));
    }

    #[test]
    fn smoothness_survives_extreme_risks() {
        // Unshifted products would underflow to all zeros here.
        let q = smoothness_update(&[0.5, 0.5], &rv(&[1e6, 2e6]), 1.0).unwrap();
        assert!(q.iter().all(|v| v.is_finite()));
        assert_relative_eq!(q.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
        assert!(q[0] > 0.99);
    }

    #[test]
    fn group_indicator_hand_values() {
        assert_eq!(
            group_indicator(&[1.0, 1.0], &[0.5, 0.5]).unwrap(),
            vec![0.5, 0.5]
        );

        let g = group_indicator(&[2.0, 2.0 / 3.0], &[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert_relative_eq!(g[0], 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(g[1], 2.0 / 9.0, max_relative = 1e-15);

        // First-iteration pipeline on risks [1, 2, 4] with uniform smoothness.
        let g = group_indicator(
            &[7.0 / 3.0, 7.0 / 6.0, 7.0 / 12.0],
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        )
        .unwrap();
        assert_relative_eq!(g[0], 7.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(g[1], 7.0 / 18.0, max_relative = 1e-15);
        assert_relative_eq!(g[2], 7.0 / 36.0, max_relative = 1e-15);
    }

    #[test]
    fn group_indicator_length_mismatch() {
        assert!(matches!(
            group_indicator(&[1.0, 2.0], &[0.5, 0.25, 0.25]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn state_update_keeps_invariants() {
        let mut state = IndicatorState::new(3, 0.05).unwrap();
        for step in 0..50 {
            let risks = rv(&[1.0 / (step + 1) as f64, 2.0, 4.0 + step as f64]);
            state.update(&risks).unwrap();
            let sum: f64 = state.smoothness().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            for ((p, q), g) in state
                .scale()
                .iter()
                .zip(state.smoothness())
                .zip(state.indicators())
            {
                assert!(*p > 0.0 && *g > 0.0);
                assert!((p * q - g).abs() <= 1e-12);
            }
        }
    }
}
