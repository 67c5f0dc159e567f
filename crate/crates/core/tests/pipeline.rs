//! Cross-module behavior of the full weighting-and-training loop.

use go4align::metrics::{self, RankTies};
use go4align::testbed::{
    epochs_to_converge, train, OptimizerKind, SyntheticProblem, TrainConfig,
};
use go4align::weighters::{ClusterEngine, WeighterState};
use go4align::MetricTable;

/// With one group per task and no history temperature, the grouped weights
/// collapse to the scale vector, so every scaled risk lands on the mean.
#[test]
fn scaled_risks_equalize_with_identity_grouping() {
    let problem = SyntheticProblem::random(4, 2, 6, &[1.0, 10.0, 1000.0], 1.0, 3).unwrap();
    let config = TrainConfig {
        optimizer: OptimizerKind::Sgd,
        learning_rate: 1e-4,
        iterations: 200,
        epoch_len: 25,
        init_std: 1.0,
    };
    let mut weighter = WeighterState::go4align(3, 0.0, 3, 1, ClusterEngine::Exact).unwrap();
    let trajectory = train(&problem, &mut weighter, &config, 9).unwrap();
    for record in &trajectory.records {
        let mean: f64 = record.scaled.iter().sum::<f64>() / 3.0;
        for s in &record.scaled {
            assert!(
                (s - mean).abs() <= 1e-10 * mean,
                "scaled risks {:?} are not equalized",
                record.scaled
            );
        }
    }

    // The per-epoch risk shares are uniform for the same reason.
    let (_, scaled_ratios) = metrics::risk_ratios(&trajectory).unwrap();
    for row in scaled_ratios {
        assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for v in row {
            assert!((v - 1.0 / 3.0).abs() <= 1e-10);
        }
    }
}

/// Mismatched loss scales under the plain sum leave the small task behind;
/// group scaling pulls its convergence epoch forward on the same seed.
#[test]
fn group_scaling_reduces_task_imbalance() {
    let scales = [1000.0, 1.0];
    let problem = SyntheticProblem::random(4, 4, 16, &scales, 0.001, 42).unwrap();
    let optima = problem.per_task_optima();
    let cfg = TrainConfig {
        optimizer: OptimizerKind::Sgd,
        learning_rate: 4e-5,
        iterations: 3000,
        epoch_len: 50,
        init_std: 0.01,
    };

    let mut ls = WeighterState::ls(2).unwrap();
    let ls_run = train(&problem, &mut ls, &cfg, 7).unwrap();

    let mut grouped = WeighterState::go4align(2, 0.01, 2, 1, ClusterEngine::Exact).unwrap();
    let grouped_run = train(&problem, &mut grouped, &cfg, 7).unwrap();

    let thresholds: Vec<f64> = optima
        .iter()
        .zip(&ls_run.records[0].risks)
        .map(|(opt, first)| opt + 0.15 * (first - opt))
        .collect();
    let ls_epochs = epochs_to_converge(&ls_run, &thresholds).unwrap();
    let grouped_epochs = epochs_to_converge(&grouped_run, &thresholds).unwrap();

    // The small-scale task (index 1) needs strictly more epochs under the
    // plain sum.
    assert!(
        ls_epochs[1] > grouped_epochs[1],
        "ls {ls_epochs:?} vs grouped {grouped_epochs:?}"
    );
    let ls_spread = metrics::convergence_difference(&ls_epochs).unwrap();
    let grouped_spread = metrics::convergence_difference(&grouped_epochs).unwrap();
    assert!(
        grouped_spread < ls_spread,
        "spread {grouped_spread} vs {ls_spread}"
    );
}

/// Every strategy can drive the same problem without diverging, and risks
/// head downward on balance.
#[test]
fn all_strategies_train_the_same_problem() {
    let problem = SyntheticProblem::random(4, 2, 6, &[1.0, 5.0, 25.0], 1.0, 8).unwrap();
    let cfg = TrainConfig {
        optimizer: OptimizerKind::Adam,
        learning_rate: 0.02,
        iterations: 500,
        epoch_len: 25,
        init_std: 1.0,
    };
    let strategies: Vec<WeighterState> = vec![
        WeighterState::ls(3).unwrap(),
        WeighterState::si(3).unwrap(),
        WeighterState::rlw(3, 5).unwrap(),
        WeighterState::dwa(3, 2.0, cfg.epoch_len).unwrap(),
        WeighterState::uw(3).unwrap(),
        WeighterState::go4align(3, 0.01, 2, 1, ClusterEngine::Exact).unwrap(),
        WeighterState::go4align(
            3,
            0.01,
            2,
            1,
            ClusterEngine::Lloyd {
                restarts: 8,
                seed: 77,
            },
        )
        .unwrap(),
        WeighterState::agrm_wrap(WeighterState::si(3).unwrap(), 2).unwrap(),
    ];
    for mut strategy in strategies {
        let name = strategy.name();
        let trajectory = train(&problem, &mut strategy, &cfg, 15).unwrap();
        let first: f64 = trajectory.records[0].risks.iter().sum();
        let last: f64 = trajectory.records.last().unwrap().risks.iter().sum();
        assert!(
            last < first,
            "{name}: total risk went from {first} to {last}"
        );
    }
}

/// Exact and Lloyd grouping engines agree on the weights whenever Lloyd
/// finds the global optimum, and Lloyd never does better.
#[test]
fn lloyd_engine_tracks_exact_engine() {
    let problem =
        SyntheticProblem::random(4, 2, 6, &[1.0, 10.0, 100.0, 1000.0], 0.02, 21).unwrap();
    let cfg = TrainConfig {
        optimizer: OptimizerKind::Sgd,
        learning_rate: 1e-4,
        iterations: 300,
        epoch_len: 25,
        init_std: 0.02,
    };
    let mut exact = WeighterState::go4align(4, 0.01, 2, 1, ClusterEngine::Exact).unwrap();
    let exact_run = train(&problem, &mut exact, &cfg, 31).unwrap();
    let mut lloyd = WeighterState::go4align(
        4,
        0.01,
        2,
        1,
        ClusterEngine::Lloyd {
            restarts: 8,
            seed: 3,
        },
    )
    .unwrap();
    let lloyd_run = train(&problem, &mut lloyd, &cfg, 31).unwrap();
    for (a, b) in exact_run.records.iter().zip(&lloyd_run.records) {
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }
}

/// The embedded fixtures parse and their shape matches the published
/// tables they carry.
#[test]
fn fixture_tables_parse() {
    let nyu = MetricTable::parse_csv(metrics::NYUV2_TABLE).unwrap();
    assert_eq!(nyu.methods.len(), 13);
    assert_eq!(nyu.metrics.len(), 9);
    assert_eq!(nyu.baseline.len(), 9);
    let go4 = metrics::mean_rank(&nyu, "GO4Align", RankTies::Mean).unwrap();
    assert!((go4 - 2.11).abs() <= 0.01);

    let city = MetricTable::parse_csv(metrics::CITYSCAPES_TABLE).unwrap();
    assert_eq!(city.methods.len(), 12);
    assert_eq!(city.metrics.len(), 4);
}
