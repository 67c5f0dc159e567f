//! Dynamical group assignment over scalar indicators.
//!
//! Tasks are clustered by their group indicators; each cluster gets one
//! weight shared by its members. Because the indicators are scalars, the
//! clustering objective can be minimized exactly by dynamic programming
//! over the sorted order (optimal 1-D clusters are contiguous). Lloyd's
//! algorithm with k-means++ seeding is kept alongside as the classical
//! instantiation and as a cross-check; its objective can never beat the
//! exact solver's.
//!
//! Group weights come out of the one-sided right inverse of the assignment
//! matrix, `omega^T = gamma^T G^T (G G^T)^{-1}`. `G G^T` is diagonal with
//! the group sizes, so this coincides with per-group means of the
//! indicators; tests pin that identity independently.

use nalgebra::{DMatrix, RowDVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One clustering of the task indicators.
///
/// `labels[m]` is the group of task `m`, groups are numbered by ascending
/// centroid, and `k` is the effective group count after any reduction for
/// duplicate values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub labels: Vec<usize>,
    pub assignment: DMatrix<f64>,
    pub omega: Vec<f64>,
    pub objective: f64,
    pub k: usize,
}

impl Grouping {
    /// Build a grouping from explicit labels: constructs the assignment
    /// matrix, solves for the group weights through the right inverse, and
    /// evaluates the objective.
    pub fn from_labels(values: &[f64], labels: &[usize], k: usize) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                got: labels.len(),
            });
        }
        let assignment = assignment_matrix(labels, k)?;
        let omega = group_weights(values, &assignment)?;
        let objective = clustering_objective(values, &omega, &assignment)?;
        Ok(Self {
            labels: labels.to_vec(),
            assignment,
            omega,
            objective,
            k,
        })
    }

    /// Expand the group weights to one weight per task.
    pub fn task_weights(&self) -> Result<Vec<f64>> {
        task_weights(&self.omega, &self.assignment)
    }
}

/// Build the binary assignment matrix G (k rows, one column per task) from
/// labels. Every label must be in `[0, k)`.
pub fn assignment_matrix(labels: &[usize], k: usize) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::InvalidAssignment("zero groups".into()));
    }
    let mut g = DMatrix::zeros(k, labels.len());
    for (m, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::InvalidAssignment(format!(
                "label {label} out of range for {k} groups"
            )));
        }
        g[(label, m)] = 1.0;
    }
    Ok(g)
}

fn validate_assignment(assignment: &DMatrix<f64>) -> Result<()> {
    let (k, m) = assignment.shape();
    if k == 0 || m == 0 {
        return Err(Error::InvalidAssignment("empty assignment matrix".into()));
    }
    for col in 0..m {
        let mut ones = 0usize;
        for row in 0..k {
            let v = assignment[(row, col)];
            if v != 0.0 && v != 1.0 {
                return Err(Error::InvalidAssignment(format!(
                    "entry ({row}, {col}) = {v} is not binary"
                )));
            }
            if v == 1.0 {
                ones += 1;
            }
        }
        if ones != 1 {
            return Err(Error::InvalidAssignment(format!(
                "column {col} assigns a task to {ones} groups"
            )));
        }
    }
    Ok(())
}

/// Group weights through the explicit right inverse of the assignment
/// matrix. An empty group makes `G G^T` singular and is reported as such.
pub fn group_weights(indicators: &[f64], assignment: &DMatrix<f64>) -> Result<Vec<f64>> {
    validate_assignment(assignment)?;
    let (_, m) = assignment.shape();
    if indicators.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: indicators.len(),
        });
    }
    let gamma = RowDVector::from_row_slice(indicators);
    let gram = assignment * assignment.transpose();
    let inverse = gram.try_inverse().ok_or(Error::SingularAssignment)?;
    let omega = gamma * assignment.transpose() * inverse;
    Ok(omega.iter().cloned().collect())
}

/// Per-task weights `lambda^T = omega^T G`: every task inherits the weight
/// of its group.
pub fn task_weights(omega: &[f64], assignment: &DMatrix<f64>) -> Result<Vec<f64>> {
    validate_assignment(assignment)?;
    let (k, _) = assignment.shape();
    if omega.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: omega.len(),
        });
    }
    let lambda = RowDVector::from_row_slice(omega) * assignment;
    Ok(lambda.iter().cloned().collect())
}

/// Clustering objective: squared distance between the indicators and their
/// group-weight reconstruction, `sum_m (gamma_m - omega_{label(m)})^2`.
pub fn clustering_objective(
    indicators: &[f64],
    omega: &[f64],
    assignment: &DMatrix<f64>,
) -> Result<f64> {
    let reconstructed = task_weights(omega, assignment)?;
    if indicators.len() != reconstructed.len() {
        return Err(Error::DimensionMismatch {
            expected: reconstructed.len(),
            got: indicators.len(),
        });
    }
    Ok(indicators
        .iter()
        .zip(&reconstructed)
        .map(|(g, w)| (g - w) * (g - w))
        .sum())
}

fn check_values_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "clustering values",
        });
    }
    Ok(())
}

fn check_k(values: &[f64], k: usize) -> Result<()> {
    if k < 2 || k > values.len() {
        return Err(Error::InvalidK {
            k,
            m: values.len(),
        });
    }
    Ok(())
}

/// Indices sorted by value; equal values keep their original order so that
/// boundary ties resolve toward the lower-index (left) cluster.
fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

fn distinct_count(sorted: &[f64]) -> usize {
    1 + sorted.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Map block labels on the sorted order back to the original task order.
fn labels_from_blocks(order: &[usize], boundaries: &[usize]) -> Vec<usize> {
    // boundaries[b] is the first sorted position of block b+1.
    let mut labels = vec![0usize; order.len()];
    let mut block = 0usize;
    for (pos, &orig) in order.iter().enumerate() {
        while block < boundaries.len() && pos >= boundaries[block] {
            block += 1;
        }
        labels[orig] = block;
    }
    labels
}

/// Globally optimal 1-D k-means via dynamic programming over the sorted
/// values. Runs in O(k M^2), which is plenty for task counts.
///
/// Fewer distinct values than `k` reduce the effective group count to the
/// number of distinct values; the returned `Grouping::k` records it.
pub fn kmeans_1d_exact(values: &[f64], k: usize) -> Result<Grouping> {
    check_values_finite(values)?;
    check_k(values, k)?;
    let m = values.len();
    let order = sorted_order(values);
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let k_eff = k.min(distinct_count(&sorted));

    // Prefix sums for O(1) within-block sum of squared deviations.
    let mut prefix = vec![0.0f64; m + 1];
    let mut prefix_sq = vec![0.0f64; m + 1];
    for (i, &v) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
        prefix_sq[i + 1] = prefix_sq[i] + v * v;
    }
    let block_cost = |i: usize, j: usize| -> f64 {
        // cost of sorted[i..=j]
        let n = (j + 1 - i) as f64;
        let s = prefix[j + 1] - prefix[i];
        let sq = prefix_sq[j + 1] - prefix_sq[i];
        (sq - s * s / n).max(0.0)
    };

    // cost[c][j]: best cost of splitting sorted[0..=j] into c+1 blocks.
    let mut cost = vec![vec![f64::INFINITY; m]; k_eff];
    let mut split = vec![vec![0usize; m]; k_eff];
    for j in 0..m {
        cost[0][j] = block_cost(0, j);
    }
    for c in 1..k_eff {
        for j in c..m {
            let mut best = f64::INFINITY;
            let mut best_s = c - 1;
            // s is the last index of the previous blocks; ties prefer the
            // larger s so boundary values fall into the left cluster.
            for s in (c - 1)..j {
                let candidate = cost[c - 1][s] + block_cost(s + 1, j);
                if candidate <= best {
                    best = candidate;
                    best_s = s;
                }
            }
            cost[c][j] = best;
            split[c][j] = best_s;
        }
    }

    // Backtrack the block boundaries (first sorted position of each block
    // except the first).
    let mut boundaries = vec![0usize; k_eff.saturating_sub(1)];
    let mut j = m - 1;
    for c in (1..k_eff).rev() {
        let s = split[c][j];
        boundaries[c - 1] = s + 1;
        j = s;
    }

    let labels = labels_from_blocks(&order, &boundaries);
    Grouping::from_labels(values, &labels, k_eff)
}

/// Relabel groups by ascending centroid, with the smallest member task
/// index breaking exact centroid ties.
fn canonicalize_labels(values: &[f64], labels: &[usize], k: usize) -> Vec<usize> {
    let mut sums = vec![0.0f64; k];
    let mut counts = vec![0usize; k];
    let mut first_member = vec![usize::MAX; k];
    for (m, &label) in labels.iter().enumerate() {
        sums[label] += values[m];
        counts[label] += 1;
        first_member[label] = first_member[label].min(m);
    }
    let mut ids: Vec<usize> = (0..k).collect();
    ids.sort_by(|&a, &b| {
        let ca = sums[a] / counts[a] as f64;
        let cb = sums[b] / counts[b] as f64;
        ca.total_cmp(&cb).then(first_member[a].cmp(&first_member[b]))
    });
    let mut remap = vec![0usize; k];
    for (new, &old) in ids.iter().enumerate() {
        remap[old] = new;
    }
    labels.iter().map(|&l| remap[l]).collect()
}

/// Classical Lloyd iterations with k-means++ seeding, restarted `restarts`
/// times from a seeded stream; the best objective wins. Deterministic for
/// fixed `(values, k, restarts, seed)`.
pub fn kmeans_lloyd(values: &[f64], k: usize, restarts: usize, seed: u64) -> Result<Grouping> {
    check_values_finite(values)?;
    check_k(values, k)?;
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be at least 1".into()));
    }
    let m = values.len();
    let order = sorted_order(values);
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let k_eff = k.min(distinct_count(&sorted));

    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;

    for _ in 0..restarts {
        let mut centers = kmeanspp_seed(values, k_eff, &mut rng);
        let mut labels = vec![0usize; m];
        for _ in 0..200 {
            centers.sort_by(f64::total_cmp);
            let mut changed = false;
            for (i, &v) in values.iter().enumerate() {
                let mut nearest = 0usize;
                let mut nearest_d = f64::INFINITY;
                for (c, &center) in centers.iter().enumerate() {
                    let d = (v - center) * (v - center);
                    // strict < keeps the lower-index (smaller-center) group
                    // on distance ties
                    if d < nearest_d {
                        nearest_d = d;
                        nearest = c;
                    }
                }
                if labels[i] != nearest {
                    labels[i] = nearest;
                    changed = true;
                }
            }

            // Refill any emptied cluster with the point farthest from its
            // assigned center, then keep iterating.
            let mut counts = vec![0usize; k_eff];
            for &l in &labels {
                counts[l] += 1;
            }
            for c in 0..k_eff {
                if counts[c] > 0 {
                    continue;
                }
                let (far, _) = values
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| counts[labels[*i]] > 1)
                    .map(|(i, &v)| (i, (v - centers[labels[i]]).abs()))
                    .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                    .expect("k_eff <= distinct values leaves a splittable cluster");
                counts[labels[far]] -= 1;
                labels[far] = c;
                counts[c] = 1;
                changed = true;
            }

            let mut sums = vec![0.0f64; k_eff];
            for (i, &v) in values.iter().enumerate() {
                sums[labels[i]] += v;
            }
            for c in 0..k_eff {
                centers[c] = sums[c] / counts[c] as f64;
            }
            if !changed {
                break;
            }
        }

        let objective: f64 = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - centers[labels[i]]) * (v - centers[labels[i]]))
            .sum();
        if best.as_ref().is_none_or(|(b, _)| objective < *b) {
            best = Some((objective, labels));
        }
    }

    let (_, labels) = best.expect("at least one restart ran");
    let labels = canonicalize_labels(values, &labels, k_eff);
    Grouping::from_labels(values, &labels, k_eff)
}

/// k-means++ seeding: first center uniform, then each next center drawn
/// with probability proportional to squared distance from the chosen set.
fn kmeanspp_seed(values: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = values.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(values[rng.random_range(0..m)]);
    while centers.len() < k {
        let dist_sq: Vec<f64> = values
            .iter()
            .map(|&v| {
                centers
                    .iter()
                    .map(|&c| (v - c) * (v - c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = dist_sq.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = m - 1;
            for (i, &d) in dist_sq.iter().enumerate() {
                acc += d;
                if acc >= target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            values[chosen]
        } else {
            // All remaining points coincide with a center; k_eff should
            // prevent this, but fall back to any value.
            values[rng.random_range(0..m)]
        };
        centers.push(next);
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Exhaustive minimum of the clustering objective over all partitions
    /// of the values into exactly `k` nonempty blocks (restricted-growth
    /// enumeration). Independent of the solvers above.
    fn brute_force_objective(values: &[f64], k: usize) -> f64 {
        fn recurse(
            values: &[f64],
            k: usize,
            i: usize,
            used: usize,
            labels: &mut Vec<usize>,
            best: &mut f64,
        ) {
            let remaining = values.len() - i;
            if used + remaining < k {
                return;
            }
            if i == values.len() {
                if used == k {
                    let mut sums = vec![0.0; k];
                    let mut counts = vec![0usize; k];
                    for (m, &l) in labels.iter().enumerate() {
                        sums[l] += values[m];
                        counts[l] += 1;
                    }
                    let j: f64 = labels
                        .iter()
                        .enumerate()
                        .map(|(m, &l)| {
                            let mean = sums[l] / counts[l] as f64;
                            (values[m] - mean) * (values[m] - mean)
                        })
                        .sum();
                    if j < *best {
                        *best = j;
                    }
                }
                return;
            }
            for b in 0..=used.min(k - 1) {
                labels.push(b);
                recurse(values, k, i + 1, used.max(b + 1), labels, best);
                labels.pop();
            }
        }
        let mut best = f64::INFINITY;
        recurse(values, k, 0, 0, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn exact_matches_enumeration_on_spec_instance() {
        // All three 2-block partitions of [0.1, 0.12, 0.9] by hand give
        // 0.0002 as the minimum.
        let g = kmeans_1d_exact(&[0.1, 0.12, 0.9], 2).unwrap();
        assert_eq!(g.labels, vec![0, 0, 1]);
        assert_relative_eq!(g.omega[0], 0.11, max_relative = 1e-12);
        assert_relative_eq!(g.omega[1], 0.9, max_relative = 1e-12);
        assert_relative_eq!(g.objective, 0.0002, max_relative = 1e-9);
        assert_relative_eq!(
            g.objective,
            brute_force_objective(&[0.1, 0.12, 0.9], 2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn exact_singletons_when_k_equals_m() {
        let values = [0.4, 0.1, 0.7];
        let g = kmeans_1d_exact(&values, 3).unwrap();
        assert_eq!(g.objective, 0.0);
        assert_eq!(g.labels, vec![1, 0, 2]);
        for (m, &label) in g.labels.iter().enumerate() {
            assert_eq!(g.omega[label], values[m]);
        }
    }

    #[test]
    fn exact_outlier_split() {
        let g = kmeans_1d_exact(&[0.2, 0.2, 0.2, 0.9], 2).unwrap();
        assert_eq!(g.labels, vec![0, 0, 0, 1]);
        assert_relative_eq!(g.omega[0], 0.2, max_relative = 1e-15);
        assert_eq!(g.omega[1], 0.9);
        assert!(g.objective <= 1e-30);
    }

    #[test]
    fn exact_rejects_bad_k() {
        assert!(matches!(
            kmeans_1d_exact(&[1.0, 2.0], 3),
            Err(Error::InvalidK { .. })
        ));
        assert!(matches!(
            kmeans_1d_exact(&[1.0, 2.0, 3.0], 1),
            Err(Error::InvalidK { .. })
        ));
        assert!(matches!(
            kmeans_1d_exact(&[1.0, f64::NAN, 3.0], 2),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn exact_reduces_k_on_duplicate_values() {
        let g = kmeans_1d_exact(&[2.0, 2.0, 2.0], 3).unwrap();
        assert_eq!(g.k, 1);
        assert_eq!(g.labels, vec![0, 0, 0]);
        assert_eq!(g.omega, vec![2.0]);
        assert_eq!(g.objective, 0.0);

        let g = kmeans_1d_exact(&[1.0, 1.0, 5.0, 5.0], 3).unwrap();
        assert_eq!(g.k, 2);
        assert_eq!(g.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn exact_boundary_tie_prefers_left_cluster() {
        // Value 1 sits exactly between the two optimal partitions; the tie
        // goes to the left cluster.
        let g = kmeans_1d_exact(&[0.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(g.labels, vec![0, 0, 1]);
    }

    #[test]
    fn exact_contiguity_and_optimality_on_random_instances() {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
        for _ in 0..60 {
            let m = rng.random_range(3..=8);
            let k = rng.random_range(2..=m);
            let values: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let g = kmeans_1d_exact(&values, k).unwrap();
            let brute = brute_force_objective(&values, k);
            assert!(
                (g.objective - brute).abs() <= 1e-10 * brute.max(1.0),
                "dp {} vs brute {} on {values:?} k={k}",
                g.objective,
                brute
            );
            // Contiguity: labels sorted by value must be nondecreasing.
            let order = sorted_order(&values);
            let sorted_labels: Vec<usize> = order.iter().map(|&i| g.labels[i]).collect();
            assert!(sorted_labels.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn lloyd_matches_exact_on_spec_instance() {
        let exact = kmeans_1d_exact(&[0.1, 0.12, 0.9], 2).unwrap();
        let lloyd = kmeans_lloyd(&[0.1, 0.12, 0.9], 2, 8, 42).unwrap();
        assert_eq!(lloyd.labels, exact.labels);
        assert_eq!(lloyd.omega, exact.omega);
    }

    #[test]
    fn lloyd_singletons_when_k_equals_m() {
        let g = kmeans_lloyd(&[0.3, 0.9, 0.1], 3, 4, 7).unwrap();
        assert_eq!(g.objective, 0.0);
    }

    #[test]
    fn lloyd_never_beats_exact() {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        for trial in 0..50 {
            let m = rng.random_range(3..=12);
            let k = rng.random_range(2..=m);
            let values: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let exact = kmeans_1d_exact(&values, k).unwrap();
            let lloyd = kmeans_lloyd(&values, k, 4, trial).unwrap();
            assert!(lloyd.objective >= exact.objective - 1e-12);
        }
    }

    #[test]
    fn lloyd_is_deterministic() {
        let values = [0.4, 0.11, 0.93, 0.27, 0.5];
        let a = kmeans_lloyd(&values, 3, 6, 99).unwrap();
        let b = kmeans_lloyd(&values, 3, 6, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn group_weights_matches_hand_matrix_formula() {
        // G G^T = diag(2, 1)
        let g = assignment_matrix(&[0, 0, 1], 2).unwrap();
        let omega = group_weights(&[0.1, 0.12, 0.9], &g).unwrap();
        assert_relative_eq!(omega[0], 0.11, max_relative = 1e-12);
        assert_relative_eq!(omega[1], 0.9, max_relative = 1e-12);
    }

    #[test]
    fn group_weights_singleton_is_exact() {
        let g = assignment_matrix(&[0, 1, 0], 2).unwrap();
        let omega = group_weights(&[0.25, 0.7, 0.35], &g).unwrap();
        assert_eq!(omega[1], 0.7);
    }

    #[test]
    fn group_weights_empty_group_is_singular() {
        let mut g = DMatrix::zeros(2, 3);
        g[(0, 0)] = 1.0;
        g[(0, 1)] = 1.0;
        g[(0, 2)] = 1.0;
        assert!(matches!(
            group_weights(&[1.0, 2.0, 3.0], &g),
            Err(Error::SingularAssignment)
        ));
    }

    #[test]
    fn group_weights_rejects_non_assignment_matrices() {
        let mut g = DMatrix::zeros(2, 2);
        g[(0, 0)] = 0.5;
        g[(1, 1)] = 1.0;
        assert!(matches!(
            group_weights(&[1.0, 2.0], &g),
            Err(Error::InvalidAssignment(_))
        ));
    }

    #[test]
    fn task_weights_broadcasts_by_label() {
        let g = assignment_matrix(&[0, 0, 1], 2).unwrap();
        let lambda = task_weights(&[0.11, 0.9], &g).unwrap();
        assert_eq!(lambda, vec![0.11, 0.11, 0.9]);
    }

    #[test]
    fn task_weights_identity_assignment() {
        let g = assignment_matrix(&[0, 1, 2], 3).unwrap();
        let omega = [0.3, 0.5, 0.2];
        assert_eq!(task_weights(&omega, &g).unwrap(), omega.to_vec());
    }

    #[test]
    fn task_weights_single_group_shares_one_weight() {
        // k = 1 is rejected by the clustering API but fine here.
        let g = assignment_matrix(&[0, 0, 0], 1).unwrap();
        assert_eq!(task_weights(&[0.4], &g).unwrap(), vec![0.4, 0.4, 0.4]);
    }

    #[test]
    fn objective_hand_values() {
        let g = assignment_matrix(&[0, 0, 1], 2).unwrap();
        let j = clustering_objective(&[0.1, 0.12, 0.9], &[0.11, 0.9], &g).unwrap();
        assert_relative_eq!(j, 0.0002, max_relative = 1e-9);

        let identity = assignment_matrix(&[0, 1], 2).unwrap();
        assert_eq!(
            clustering_objective(&[0.3, 0.8], &[0.3, 0.8], &identity).unwrap(),
            0.0
        );

        let single = assignment_matrix(&[0, 0], 1).unwrap();
        assert_eq!(
            clustering_objective(&[1.0, 1.0], &[1.0], &single).unwrap(),
            0.0
        );
    }

    #[test]
    fn grouping_invariants_hold() {
        let values = [0.82, 0.13, 0.25, 0.7];
        let g = kmeans_1d_exact(&values, 2).unwrap();
        // One-hot columns, no empty rows.
        for col in 0..4 {
            let s: f64 = (0..g.k).map(|r| g.assignment[(r, col)]).sum();
            assert_eq!(s, 1.0);
        }
        for row in 0..g.k {
            assert!((0..4).any(|c| g.assignment[(row, c)] == 1.0));
        }
        // Omega equals per-group means.
        for group in 0..g.k {
            let members: Vec<f64> = (0..4)
                .filter(|&m| g.labels[m] == group)
                .map(|m| values[m])
                .collect();
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            assert!((g.omega[group] - mean).abs() <= 1e-12);
        }
        // Centroids ascend with the label index.
        assert!(g.omega.windows(2).all(|w| w[0] <= w[1]));
    }
}
