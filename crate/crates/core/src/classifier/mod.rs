//! Random forest over per-subject indexes, leave-one-subject-out
//! cross-validation and the window-length sweep.

mod cv;
mod forest;
mod sweep;
mod tree;

use serde::{Deserialize, Serialize};

pub use cv::{loso_cv, loso_cv_observed, CvReport, FoldTrace, MetricSummary, RepeatResult, Summary};
pub use forest::{predict, train_forest, Forest, ForestConfig};
pub use sweep::{window_sweep, SweepEntry};
pub use tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Record one prediction; `truth` and `predicted` say whether each is the
    /// positive class.
    pub fn record(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }
}

/// Accuracy, sensitivity, specificity and F1. A rate whose denominator is zero
/// is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn confusion_metrics(c: &ConfusionCounts) -> Rates {
    Rates {
        accuracy: ratio(c.tp + c.tn, c.fp + c.fn_ + c.tp + c.tn),
        sensitivity: ratio(c.tp, c.tp + c.fn_),
        specificity: ratio(c.tn, c.tn + c.fp),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_classifier() {
        let c = ConfusionCounts {
            tp: 5,
            tn: 5,
            fp: 0,
            fn_: 0,
        };
        let r = confusion_metrics(&c);
        assert_eq!(
            (r.accuracy, r.sensitivity, r.specificity, r.f1),
            (Some(1.0), Some(1.0), Some(1.0), Some(1.0))
        );
    }

    #[test]
    fn hand_case() {
        let c = ConfusionCounts {
            tp: 3,
            tn: 2,
            fp: 2,
            fn_: 1,
        };
        let r = confusion_metrics(&c);
        assert_eq!(r.accuracy, Some(5.0 / 8.0));
        assert_eq!(r.sensitivity, Some(3.0 / 4.0));
        assert_eq!(r.specificity, Some(1.0 / 2.0));
        // 2tp / (2tp + fp + fn)
        assert_eq!(r.f1, Some(6.0 / 9.0));
    }

    #[test]
    fn degenerate_positive_class() {
        let c = ConfusionCounts {
            tp: 0,
            tn: 4,
            fp: 1,
            fn_: 0,
        };
        let r = confusion_metrics(&c);
        assert_eq!(r.sensitivity, None);
        assert_eq!(r.accuracy, Some(0.8));
        assert_eq!(r.specificity, Some(0.8));
        assert_eq!(r.f1, Some(0.0));
        assert_eq!(confusion_metrics(&ConfusionCounts::default()).f1, None);
    }

    #[test]
    fn record_counts() {
        let mut c = ConfusionCounts::default();
        c.record(true, true);
        c.record(true, false);
        c.record(false, true);
        c.record(false, false);
        c.record(false, false);
        assert_eq!((c.tp, c.fn_, c.fp, c.tn, c.total()), (1, 1, 1, 2, 5));
    }
}
