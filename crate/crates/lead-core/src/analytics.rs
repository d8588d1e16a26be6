//! The measurement pipeline: per-step error profiling along the
//! reference trajectory, error-type breakdowns, comparison of error
//! distributions across agents via total-variation distance, and
//! positional accuracy of lookahead rollouts.
//!
//! Profiling always anchors on the deterministic oracle trajectory;
//! live episodes are graded separately by replay and the two are never
//! mixed.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentError, PromptVariant, RolloutRequest, StepAgent};
use crate::executors::{classify_step, EpisodeRecord, StepVerdict};
use crate::puzzle::{PuzzleError, PuzzleKind, PuzzleState, Step};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("no errors observed; the conditional distribution is undefined")]
    NoErrors,
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
}

/// Error counts per sample type at one trajectory step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub move_finding: u64,
    pub move_execution: u64,
    pub parse: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepErrorStats {
    pub step_index: usize,
    pub samples: u64,
    pub errors: u64,
    pub breakdown: ErrorBreakdown,
}

impl StepErrorStats {
    pub fn error_rate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.errors as f64 / self.samples as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        1.0 - self.error_rate()
    }
}

/// Walks the oracle trajectory and, at every step, draws independent
/// one-step predictions anchored at the true state, classifying each
/// with the grading rules. Parse failures count as errors in their own
/// category.
pub fn profile_step_errors(
    agent: &dyn StepAgent,
    kind: PuzzleKind,
    n: usize,
    samples_per_step: u64,
) -> Result<Vec<StepErrorStats>, AgentError> {
    let trajectory = kind.oracle_solve(n)?;
    let mut states = vec![kind.initial(n)?];
    states.extend(trajectory.iter().map(|s| s.state.clone()));
    let mut stats = Vec::with_capacity(trajectory.len());
    let mut attempt = 0u64;
    for (index, anchor) in states[..trajectory.len()].iter().enumerate() {
        let mut step_stats = StepErrorStats {
            step_index: index,
            samples: samples_per_step,
            errors: 0,
            breakdown: ErrorBreakdown::default(),
        };
        for _ in 0..samples_per_step {
            let request = RolloutRequest {
                kind,
                n,
                anchor_state: anchor.clone(),
                anchor_index: index,
                depth: 1,
                variant: PromptVariant::Atomic,
                attempt,
            };
            attempt += 1;
            let response = agent.rollout(&request)?;
            let verdict = match response.steps.first() {
                Some(step) => classify_step(kind, n, anchor, index, step),
                None => StepVerdict::Parse,
            };
            match verdict {
                StepVerdict::Ok => {}
                StepVerdict::MoveFinding => {
                    step_stats.errors += 1;
                    step_stats.breakdown.move_finding += 1;
                }
                StepVerdict::MoveExecution => {
                    step_stats.errors += 1;
                    step_stats.breakdown.move_execution += 1;
                }
                StepVerdict::Parse => {
                    step_stats.errors += 1;
                    step_stats.breakdown.parse += 1;
                }
            }
        }
        stats.push(step_stats);
    }
    Ok(stats)
}

/// Buckets step error rates for the log-scale histogram: pairs of
/// (bucket lower bound, number of steps in the bucket).
pub fn error_rate_histogram(stats: &[StepErrorStats], bucket_width: f64) -> Vec<(f64, usize)> {
    assert!(bucket_width > 0.0 && bucket_width <= 1.0);
    let buckets = (1.0 / bucket_width).ceil() as usize;
    let mut counts = vec![0usize; buckets];
    for s in stats {
        let idx = ((s.error_rate() / bucket_width) as usize).min(buckets - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i as f64 * bucket_width, c))
        .collect()
}

/// A normalized distribution of errors over step indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDistribution {
    weights: BTreeMap<usize, f64>,
    pub total_errors: u64,
}

impl ErrorDistribution {
    pub fn from_counts(counts: &BTreeMap<usize, u64>) -> Result<Self, AnalyticsError> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(AnalyticsError::NoErrors);
        }
        let weights = counts
            .iter()
            .filter(|(_, c)| **c > 0)
            .map(|(step, c)| (*step, *c as f64 / total as f64))
            .collect();
        Ok(ErrorDistribution {
            weights,
            total_errors: total,
        })
    }

    pub fn from_step_stats(stats: &[StepErrorStats]) -> Result<Self, AnalyticsError> {
        let counts = stats
            .iter()
            .map(|s| (s.step_index, s.errors))
            .collect::<BTreeMap<_, _>>();
        Self::from_counts(&counts)
    }

    /// Conditional error distribution over episodes: each failed episode
    /// contributes its first error step.
    pub fn from_episodes(records: &[EpisodeRecord]) -> Result<Self, AnalyticsError> {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for record in records {
            if let Some(step) = record.first_error_index {
                *counts.entry(step).or_insert(0) += 1;
            }
        }
        Self::from_counts(&counts)
    }

    pub fn weight(&self, step: usize) -> f64 {
        self.weights.get(&step).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &BTreeMap<usize, f64> {
        &self.weights
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.keys().copied()
    }
}

/// Total variation distance, half the L1 distance over the union of
/// both supports. A metric with range `[0, 1]` on normalized
/// distributions.
pub fn tv_distance(p: &ErrorDistribution, q: &ErrorDistribution) -> f64 {
    let mut steps: Vec<usize> = p.support().chain(q.support()).collect();
    steps.sort_unstable();
    steps.dedup();
    0.5 * steps
        .iter()
        .map(|s| (p.weight(*s) - q.weight(*s)).abs())
        .sum::<f64>()
}

/// Error-step lists per run, the raw material of the self-distance
/// baseline. Failed episodes contribute their first error step.
pub fn error_steps_per_run(records: &[EpisodeRecord]) -> Vec<Vec<usize>> {
    records
        .iter()
        .map(|r| r.first_error_index.into_iter().collect())
        .collect()
}

/// Estimation-noise floor for TV comparisons: runs are split into two
/// random halves and the distance between the halves' conditional error
/// distributions is averaged over `splits` splits.
pub fn self_distance_baseline(
    runs: &[Vec<usize>],
    splits: usize,
    seed: u64,
) -> Result<f64, AnalyticsError> {
    let with_errors = runs.iter().filter(|r| !r.is_empty()).count();
    if with_errors < 2 || splits == 0 {
        return Err(AnalyticsError::NoErrors);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..runs.len()).collect();
    let mut distances = Vec::with_capacity(splits);
    while distances.len() < splits {
        order.shuffle(&mut rng);
        let (a, b) = order.split_at(order.len() / 2);
        let counts = |half: &[usize]| {
            let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
            for &i in half {
                for &step in &runs[i] {
                    *counts.entry(step).or_insert(0) += 1;
                }
            }
            counts
        };
        let (pa, pb) = (
            ErrorDistribution::from_counts(&counts(a)),
            ErrorDistribution::from_counts(&counts(b)),
        );
        if let (Ok(pa), Ok(pb)) = (pa, pb) {
            distances.push(tv_distance(&pa, &pb));
        } else if distances.is_empty() && runs.len() < 4 {
            // Tiny inputs may keep producing one-sided splits; give the
            // shuffle a bounded number of chances.
            continue;
        }
    }
    Ok(distances.iter().sum::<f64>() / distances.len() as f64)
}

/// Accuracy of lookahead rollouts by position, aggregated over anchors
/// and broken out per anchor in the Table-3 shaped matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositionalAccuracy {
    pub k: usize,
    pub conditioned: bool,
    /// Aggregate accuracy at offsets `1..=k`.
    pub per_offset: Vec<OffsetAccuracy>,
    /// `matrix[anchor][offset-1]`: accuracy of the prediction for
    /// absolute step `anchor + offset - 1` made from `anchor`, when that
    /// step exists.
    pub matrix: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct OffsetAccuracy {
    pub offset: usize,
    pub correct: u64,
    pub total: u64,
    /// Samples whose move was optimal and correctly executed, even when
    /// it differs from the single reference step (checkers admits move
    /// ties; the figures use the unique reference).
    pub acceptable: u64,
}

impl OffsetAccuracy {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            f64::NAN
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    pub fn acceptable_rate(&self) -> f64 {
        if self.total == 0 {
            f64::NAN
        } else {
            self.acceptable as f64 / self.total as f64
        }
    }
}

/// Draws `samples` depth-`k` rollouts from every anchor of the oracle
/// trajectory. Offset-`o` accuracy is the fraction of rollouts whose
/// `o`-th step equals the reference step at that absolute index. With
/// `conditioned` set, offsets beyond the first count only rollouts whose
/// first step was correct.
pub fn lookahead_positional_accuracy(
    agent: &dyn StepAgent,
    kind: PuzzleKind,
    n: usize,
    k: usize,
    samples: u64,
    conditioned: bool,
) -> Result<PositionalAccuracy, AgentError> {
    let trajectory = kind.oracle_solve(n)?;
    let mut states = vec![kind.initial(n)?];
    states.extend(trajectory.iter().map(|s| s.state.clone()));
    let len = trajectory.len();

    let mut per_offset: Vec<OffsetAccuracy> = (1..=k)
        .map(|offset| OffsetAccuracy {
            offset,
            ..Default::default()
        })
        .collect();
    let mut matrix_counts: Vec<Vec<(u64, u64)>> = vec![vec![(0, 0); k]; len];
    let mut attempt = 0u64;

    for anchor in 0..len {
        for _ in 0..samples {
            let request = RolloutRequest {
                kind,
                n,
                anchor_state: states[anchor].clone(),
                anchor_index: anchor,
                depth: k,
                variant: PromptVariant::Lookahead,
                attempt,
            };
            attempt += 1;
            let response = agent.rollout(&request)?;
            let first_correct = response
                .steps
                .first()
                .is_some_and(|s| s.same_prediction(&trajectory[anchor]));
            for offset in 1..=k {
                let target = anchor + offset - 1;
                if target >= len {
                    break;
                }
                if conditioned && offset > 1 && !first_correct {
                    continue;
                }
                let predicted = response.steps.get(offset - 1);
                let correct =
                    predicted.is_some_and(|s| s.same_prediction(&trajectory[target]));
                let slot = &mut per_offset[offset - 1];
                slot.total += 1;
                if correct {
                    slot.correct += 1;
                }
                if predicted.is_some_and(|s| acceptable(kind, &states[target], target, n, s)) {
                    slot.acceptable += 1;
                }
                let cell = &mut matrix_counts[anchor][offset - 1];
                cell.1 += 1;
                if correct {
                    cell.0 += 1;
                }
            }
        }
    }

    let matrix = matrix_counts
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|(correct, total)| (total > 0).then(|| correct as f64 / total as f64))
                .collect()
        })
        .collect();
    Ok(PositionalAccuracy {
        k,
        conditioned,
        per_offset,
        matrix,
    })
}

/// A step is acceptable when replay grading would pass it: optimal move,
/// exact claimed state.
fn acceptable(kind: PuzzleKind, pre: &PuzzleState, moves_done: usize, n: usize, step: &Step) -> bool {
    classify_step(kind, n, pre, moves_done, step) == StepVerdict::Ok
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedAccuracy {
    pub rank: usize,
    pub step_index: usize,
    pub accuracy: f64,
}

/// Per-step accuracies sorted ascending (hardest first), original step
/// indices retained. `descending` flips the order.
pub fn rank_order_accuracies(stats: &[StepErrorStats], descending: bool) -> Vec<RankedAccuracy> {
    let mut entries: Vec<(usize, f64)> = stats
        .iter()
        .map(|s| (s.step_index, s.accuracy()))
        .collect();
    entries.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    if descending {
        entries.reverse();
    }
    entries
        .into_iter()
        .enumerate()
        .map(|(rank, (step_index, accuracy))| RankedAccuracy {
            rank,
            step_index,
            accuracy,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{MockAgent, MockErrorKind, MockErrorProfile, OracleAgent};

    #[test]
    fn oracle_profile_is_error_free() {
        let agent = OracleAgent::new(PuzzleKind::Checkers, 2).unwrap();
        let stats = profile_step_errors(&agent, PuzzleKind::Checkers, 2, 5).unwrap();
        assert_eq!(stats.len(), 8);
        assert!(stats.iter().all(|s| s.errors == 0 && s.samples == 5));
    }

    #[test]
    fn hard_step_rate_is_recovered_within_3_sigma() {
        let p = 0.6;
        let m = 2000u64;
        let profile = MockErrorProfile {
            per_step_error: BTreeMap::from([(5usize, p)]),
            seed: 11,
            ..Default::default()
        };
        let agent = MockAgent::new(profile);
        let stats = profile_step_errors(&agent, PuzzleKind::Checkers, 3, m).unwrap();
        let tol = 3.0 * (p * (1.0 - p) / m as f64).sqrt();
        assert!((stats[5].error_rate() - p).abs() <= tol);
        for s in &stats {
            if s.step_index != 5 {
                assert_eq!(s.errors, 0, "step {}", s.step_index);
            }
        }
        // Breakdown totals reconcile.
        for s in &stats {
            assert_eq!(
                s.errors,
                s.breakdown.move_finding + s.breakdown.move_execution + s.breakdown.parse
            );
        }
        // The omitted piece shows up as a move-execution error.
        assert_eq!(stats[5].breakdown.move_finding, 0);
        assert!(stats[5].breakdown.move_execution > 0);
    }

    #[test]
    fn histogram_buckets_are_log_scale_ready() {
        let agent = MockAgent::new(MockErrorProfile {
            per_step_error: BTreeMap::from([(2usize, 0.95)]),
            seed: 1,
            ..Default::default()
        });
        let stats = profile_step_errors(&agent, PuzzleKind::Checkers, 2, 200).unwrap();
        let hist = error_rate_histogram(&stats, 0.1);
        assert_eq!(hist.len(), 10);
        assert_eq!(hist.iter().map(|(_, c)| c).sum::<usize>(), stats.len());
        assert_eq!(hist[0].1, 7);
        assert_eq!(hist[9].1, 1);
    }

    #[test]
    fn conditional_distribution_normalizes() {
        let counts = BTreeMap::from([(5usize, 3u64), (9, 1)]);
        let dist = ErrorDistribution::from_counts(&counts).unwrap();
        assert!((dist.weight(5) - 0.75).abs() < 1e-12);
        assert!((dist.weight(9) - 0.25).abs() < 1e-12);
        assert!((dist.weights().values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(
            ErrorDistribution::from_counts(&BTreeMap::new()),
            Err(AnalyticsError::NoErrors)
        ));
    }

    #[test]
    fn tv_distance_fixed_values() {
        let p = ErrorDistribution::from_counts(&BTreeMap::from([(0usize, 1u64), (1, 1)])).unwrap();
        let q = ErrorDistribution::from_counts(&BTreeMap::from([(0usize, 3u64), (1, 1)])).unwrap();
        assert_eq!(tv_distance(&p, &p), 0.0);
        assert!((tv_distance(&p, &q) - 0.25).abs() < 1e-12);
        let disjoint =
            ErrorDistribution::from_counts(&BTreeMap::from([(7usize, 4u64)])).unwrap();
        assert!((tv_distance(&p, &disjoint) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn self_distance_extremes() {
        // Every run errs at the same step: halves agree exactly.
        let runs = vec![vec![5usize], vec![5], vec![5], vec![5]];
        assert_eq!(self_distance_baseline(&runs, 8, 3).unwrap(), 0.0);
        // Two runs erring at different steps split one per half.
        let runs = vec![vec![3usize], vec![9]];
        assert_eq!(self_distance_baseline(&runs, 4, 3).unwrap(), 1.0);
        assert!(matches!(
            self_distance_baseline(&[vec![], vec![]], 4, 3),
            Err(AnalyticsError::NoErrors)
        ));
    }

    #[test]
    fn oracle_positional_accuracy_is_one() {
        let agent = OracleAgent::new(PuzzleKind::Checkers, 2).unwrap();
        let acc =
            lookahead_positional_accuracy(&agent, PuzzleKind::Checkers, 2, 4, 3, false).unwrap();
        for slot in &acc.per_offset {
            assert!(slot.total > 0);
            assert_eq!(slot.correct, slot.total);
            assert_eq!(slot.acceptable, slot.total);
        }
        for row in &acc.matrix {
            for cell in row.iter().flatten() {
                assert_eq!(*cell, 1.0);
            }
        }
    }

    #[test]
    fn conditioning_on_a_correct_first_step_removes_cond_free_errors() {
        // First steps err often; later positions never err after a
        // correct one. Conditioned accuracy at offsets >= 2 is exactly 1.
        let profile = MockErrorProfile {
            default_error: 0.2,
            cond_error: 0.0,
            error_kind: MockErrorKind::WrongMove,
            consistency: 0.0,
            seed: 17,
            ..Default::default()
        };
        let agent = MockAgent::new(profile);
        let acc =
            lookahead_positional_accuracy(&agent, PuzzleKind::Checkers, 3, 4, 30, true).unwrap();
        for slot in &acc.per_offset[1..] {
            assert_eq!(slot.correct, slot.total, "offset {}", slot.offset);
        }
    }

    #[test]
    fn rank_ordering_is_stable_and_flippable() {
        let mk = |step_index, errors| StepErrorStats {
            step_index,
            samples: 10,
            errors,
            breakdown: ErrorBreakdown::default(),
        };
        let stats = vec![mk(0, 1), mk(1, 9), mk(2, 5), mk(3, 9)];
        let ranked = rank_order_accuracies(&stats, false);
        let order: Vec<usize> = ranked.iter().map(|r| r.step_index).collect();
        assert_eq!(order, vec![1, 3, 2, 0]);
        assert_eq!(ranked[0].rank, 0);
        assert!((ranked[0].accuracy - 0.1).abs() < 1e-12);
        let reversed = rank_order_accuracies(&stats, true);
        assert_eq!(reversed[0].step_index, 0);
        assert!(rank_order_accuracies(&[], false).is_empty());
    }
}
