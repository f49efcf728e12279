//! Set-membership classification metrics.
//!
//! Both detection (which images contain suitable land) and species
//! recommendation (which species suit a site) are scored by comparing a
//! predicted-positive set and a truth-positive set inside a finite universe.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("universe of items is empty")]
    EmptyUniverse,
    #[error("{set} contains {item:?}, which is not in the universe")]
    NotInUniverse { set: &'static str, item: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Percentages in [0, 100]. Precision and recall are `None` when their
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassificationMetrics {
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

pub fn confusion_counts<T: Ord + std::fmt::Debug>(
    predicted: &BTreeSet<T>,
    truth: &BTreeSet<T>,
    universe: &BTreeSet<T>,
) -> Result<ConfusionCounts, MetricsError> {
    if universe.is_empty() {
        return Err(MetricsError::EmptyUniverse);
    }
    for (name, set) in [("predicted", predicted), ("truth", truth)] {
        if let Some(item) = set.difference(universe).next() {
            return Err(MetricsError::NotInUniverse {
                set: name,
                item: format!("{item:?}"),
            });
        }
    }
    let tp = predicted.intersection(truth).count();
    let fp = predicted.len() - tp;
    let fn_ = truth.len() - tp;
    let tn = universe.len() - tp - fp - fn_;
    Ok(ConfusionCounts { tp, fp, fn_, tn })
}

pub fn classification_metrics<T: Ord + std::fmt::Debug>(
    predicted: &BTreeSet<T>,
    truth: &BTreeSet<T>,
    universe: &BTreeSet<T>,
) -> Result<ClassificationMetrics, MetricsError> {
    let c = confusion_counts(predicted, truth, universe)?;
    let pct = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64 * 100.0);
    Ok(ClassificationMetrics {
        counts: c,
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64 * 100.0,
        precision: pct(c.tp, c.tp + c.fp),
        recall: pct(c.tp, c.tp + c.fn_),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn nine_of_ten() {
        let all: BTreeSet<u32> = (0..10).collect();
        let truth: BTreeSet<u32> = (0..9).collect();
        let m = classification_metrics(&all, &truth, &all).unwrap();
        assert_eq!(
            m.counts,
            ConfusionCounts {
                tp: 9,
                fp: 1,
                fn_: 0,
                tn: 0
            }
        );
        assert_eq!(m.precision, Some(90.0));
        assert_eq!(m.recall, Some(100.0));
        assert_eq!(m.accuracy, 90.0);
    }

    #[test]
    fn undefined_precision_is_not_zero() {
        let u = set(&["a", "b"]);
        let m = classification_metrics(&BTreeSet::new(), &set(&["a"]), &u).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, Some(0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let empty: BTreeSet<String> = BTreeSet::new();
        assert_eq!(
            classification_metrics(&empty, &empty, &empty),
            Err(MetricsError::EmptyUniverse)
        );
        assert!(classification_metrics(&set(&["z"]), &empty, &set(&["a"])).is_err());
    }
}
