//! Selection quality and prediction error.
//!
//! Undefined quantities (precision of an empty selection, recall against an
//! empty truth) are `None`, never silently zero. Aggregation drops them from
//! means and counts them instead.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub n_selected: usize,
    pub n_true: usize,
    pub n_correct: usize,
}

impl SelectionScore {
    /// Number of selected features outside the true support.
    pub fn false_positives(&self) -> usize {
        self.n_selected - self.n_correct
    }
}

/// Scores `selected` against the true support `truth`.
pub fn score_selection(selected: &[usize], truth: &[usize]) -> SelectionScore {
    let sel: BTreeSet<usize> = selected.iter().copied().collect();
    let tru: BTreeSet<usize> = truth.iter().copied().collect();
    let n_correct = sel.intersection(&tru).count();
    let precision = (!sel.is_empty()).then(|| n_correct as f64 / sel.len() as f64);
    let recall = (!tru.is_empty()).then(|| n_correct as f64 / tru.len() as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    SelectionScore {
        precision,
        recall,
        f1,
        n_selected: sel.len(),
        n_true: tru.len(),
        n_correct,
    }
}

/// Mean squared difference between two equal-length vectors.
pub fn mse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            found: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let sum: f64 = predicted.iter().zip(actual).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / actual.len() as f64)
}

/// Mean and sample standard deviation over the defined values of a metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    /// `n - 1` denominator; 0 when fewer than two values are defined.
    pub sd: Option<f64>,
    pub defined: usize,
    pub undefined: usize,
}

pub fn summarize<I: IntoIterator<Item = Option<f64>>>(values: I) -> Summary {
    let mut vals = Vec::new();
    let mut undefined = 0;
    for v in values {
        match v {
            Some(x) => vals.push(x),
            None => undefined += 1,
        }
    }
    if vals.is_empty() {
        return Summary {
            mean: None,
            sd: None,
            defined: 0,
            undefined,
        };
    }
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let sd = if vals.len() < 2 {
        0.0
    } else {
        (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)).sqrt()
    };
    Summary {
        mean: Some(mean),
        sd: Some(sd),
        defined: vals.len(),
        undefined,
    }
}

/// Aggregate of one method over a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub precision: Summary,
    pub recall: Summary,
    pub f1: Summary,
    /// `None` when timings were not collected.
    pub time: Option<Summary>,
    /// Replications where precision or F1 was undefined.
    pub undefined_count: usize,
    /// Fraction of replications with at least one false positive.
    pub any_false_positive_rate: f64,
    pub mean_selected: f64,
    pub replications: usize,
}

/// Aggregates per-replication scores. `times` may be empty when timing is off,
/// otherwise it must match `scores` in length.
pub fn aggregate(scores: &[SelectionScore], times: &[f64]) -> Result<MethodAggregate> {
    if scores.is_empty() {
        return Err(Error::InvalidConfig("cannot aggregate an empty score list".into()));
    }
    if !times.is_empty() && times.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: times.len(),
        });
    }
    let reps = scores.len() as f64;
    Ok(MethodAggregate {
        precision: summarize(scores.iter().map(|s| s.precision)),
        recall: summarize(scores.iter().map(|s| s.recall)),
        f1: summarize(scores.iter().map(|s| s.f1)),
        time: (!times.is_empty()).then(|| summarize(times.iter().map(|t| Some(*t)))),
        undefined_count: scores
            .iter()
            .filter(|s| s.precision.is_none() || s.f1.is_none())
            .count(),
        any_false_positive_rate: scores.iter().filter(|s| s.false_positives() > 0).count() as f64
            / reps,
        mean_selected: scores.iter().map(|s| s.n_selected as f64).sum::<f64>() / reps,
        replications: scores.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_selection() {
        let s = score_selection(&[1, 2, 3], &[3, 2, 1]);
        assert_eq!((s.precision, s.recall, s.f1), (Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn over_selection_pattern() {
        let sel: Vec<usize> = (1..=50).collect();
        let truth: Vec<usize> = (1..=10).collect();
        let s = score_selection(&sel, &truth);
        assert_eq!(s.precision, Some(0.2));
        assert_eq!(s.recall, Some(1.0));
        assert!((s.f1.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.false_positives(), 40);
    }

    #[test]
    fn empty_selection_is_undefined() {
        let s = score_selection(&[], &[1, 2]);
        assert_eq!(s.precision, None);
        assert_eq!(s.recall, Some(0.0));
        assert_eq!(s.f1, None);
        let noise = score_selection(&[4], &[]);
        assert_eq!(noise.recall, None);
        assert_eq!(noise.precision, Some(0.0));
        let disjoint = score_selection(&[4], &[1]);
        assert_eq!(disjoint.f1, None);
    }

    #[test]
    fn mse_cases() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn mse_matches_two_pass() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..37).map(|i| (i as f64 * 1.3).cos()).collect();
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let sq: Vec<f64> = diffs.iter().map(|d| d * d).collect();
        let want = sq.iter().sum::<f64>() / 37.0;
        assert!((mse(&a, &b).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn aggregate_two_precisions() {
        let truth: Vec<usize> = (0..10).collect();
        let mut nine: Vec<usize> = (0..9).collect();
        nine.push(20);
        // precision 0.9 and 1.0
        let scores = [score_selection(&nine, &truth), score_selection(&truth, &truth)];
        let agg = aggregate(&scores, &[]).unwrap();
        assert!((agg.precision.mean.unwrap() - 0.95).abs() < 1e-15);
        assert!((agg.precision.sd.unwrap() - 0.005f64.sqrt()).abs() < 1e-12);
        assert!((agg.precision.sd.unwrap() - 0.070_710_678).abs() < 1e-8);
        assert!(agg.time.is_none());
        assert_eq!(agg.any_false_positive_rate, 0.5);
    }

    #[test]
    fn aggregate_single_and_undefined() {
        let one = aggregate(&[score_selection(&[1], &[1])], &[0.25]).unwrap();
        assert_eq!(one.precision.sd, Some(0.0));
        assert_eq!(one.time.unwrap().mean, Some(0.25));

        let scores = [
            score_selection(&[], &[1]),
            score_selection(&[1], &[1]),
            score_selection(&[], &[1]),
        ];
        let agg = aggregate(&scores, &[]).unwrap();
        assert_eq!(agg.undefined_count, 2);
        assert_eq!(agg.precision.defined, 1);
        assert_eq!(agg.precision.undefined, 2);
        assert_eq!(agg.precision.mean, Some(1.0));
        assert!(aggregate(&[], &[]).is_err());
        assert!(aggregate(&scores, &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn scores_are_bounded_and_f1_is_harmonic(
            sel in proptest::collection::btree_set(0usize..30, 0..20),
            truth in proptest::collection::btree_set(0usize..30, 0..20),
        ) {
            let sel: Vec<usize> = sel.into_iter().collect();
            let truth: Vec<usize> = truth.into_iter().collect();
            let s = score_selection(&sel, &truth);
            prop_assert!(s.n_correct <= s.n_selected.min(s.n_true));
            for v in [s.precision, s.recall, s.f1].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if let (Some(p), Some(r), Some(f)) = (s.precision, s.recall, s.f1) {
                prop_assert!((f - 2.0 * p * r / (p + r)).abs() < 1e-12);
            }
        }

        #[test]
        fn aggregate_mean_is_order_invariant(
            sets in proptest::collection::vec(proptest::collection::btree_set(0usize..12, 0..8), 1..12),
        ) {
            let truth = [0usize, 1, 2, 3];
            let scores: Vec<SelectionScore> = sets
                .iter()
                .map(|s| score_selection(&s.iter().copied().collect::<Vec<_>>(), &truth))
                .collect();
            let mut rev = scores.clone();
            rev.reverse();
            let a = aggregate(&scores, &[]).unwrap();
            let b = aggregate(&rev, &[]).unwrap();
            for (x, y) in [(a.precision.mean, b.precision.mean), (a.recall.mean, b.recall.mean), (a.f1.mean, b.f1.mean)] {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                    (x, y) => prop_assert_eq!(x, y),
                }
            }
            prop_assert_eq!(a.undefined_count, b.undefined_count);
        }
    }
}
