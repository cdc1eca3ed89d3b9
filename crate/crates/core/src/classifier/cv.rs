use serde::{Deserialize, Serialize};

use super::forest::{Forest, ForestConfig};
use super::{confusion_metrics, ConfusionCounts, Rates};
use crate::error::{Error, Result};
use crate::metrics::SubjectFeatures;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub counts: ConfusionCounts,
    pub rates: Rates,
}

/// Mean and population standard deviation over the repeats where a rate is
/// defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n_defined: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub accuracy: MetricSummary,
    pub sensitivity: MetricSummary,
    pub specificity: MetricSummary,
    pub f1: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub positive_class: String,
    pub negative_class: String,
    pub n_subjects: usize,
    pub n_repeats: usize,
    pub forest: ForestConfig,
    pub rng_seed: u64,
    pub repeats: Vec<RepeatResult>,
    pub summary: Summary,
}

/// One trained fold, exposed to observers of [`loso_cv_observed`].
pub struct FoldTrace<'a> {
    pub repeat: usize,
    pub held_out: &'a SubjectFeatures,
    pub forest: &'a Forest,
    pub predicted: &'a str,
}

fn summarize(values: impl Iterator<Item = Option<f64>>) -> MetricSummary {
    let v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        return MetricSummary {
            mean: None,
            std: None,
            n_defined: 0,
        };
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    MetricSummary {
        mean: Some(mean),
        std: Some(var.sqrt()),
        n_defined: v.len(),
    }
}

/// Leave-one-subject-out cross-validation repeated `n_repeats` times.
///
/// The forest for repeat `r`, fold `k` is seeded with
/// `derive_path(cfg.rng_seed, [r, k])`, so repeats differ only through their
/// bootstrap draws and the result does not depend on execution order.
pub fn loso_cv(
    dataset: &[SubjectFeatures],
    cfg: &ForestConfig,
    n_repeats: usize,
    positive_class: &str,
) -> Result<CvReport> {
    loso_cv_observed(dataset, cfg, n_repeats, positive_class, |_| {})
}

/// [`loso_cv`] with a callback invoked after every fold.
pub fn loso_cv_observed<F>(
    dataset: &[SubjectFeatures],
    cfg: &ForestConfig,
    n_repeats: usize,
    positive_class: &str,
    mut observer: F,
) -> Result<CvReport>
where
    F: FnMut(&FoldTrace<'_>),
{
    if dataset.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "cross-validation needs at least 3 subjects, got {}",
            dataset.len()
        )));
    }
    if n_repeats == 0 {
        return Err(Error::InvalidConfig("n_repeats must be >= 1".into()));
    }
    let mut classes: Vec<&str> = dataset.iter().map(|s| s.group.as_str()).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != 2 {
        return Err(Error::InsufficientData(format!(
            "cross-validation needs exactly two groups, found {classes:?}"
        )));
    }
    if !classes.contains(&positive_class) {
        return Err(Error::InvalidConfig(format!(
            "positive class {positive_class:?} not among groups {classes:?}"
        )));
    }
    let negative_class = classes
        .iter()
        .find(|c| **c != positive_class)
        .expect("two classes")
        .to_string();

    let mut repeats = Vec::with_capacity(n_repeats);
    for r in 0..n_repeats {
        let mut counts = ConfusionCounts::default();
        for (k, held_out) in dataset.iter().enumerate() {
            let train: Vec<&SubjectFeatures> = dataset
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, s)| s)
                .collect();
            let rows: Vec<&[f64]> = train.iter().map(|s| &s.features[..]).collect();
            let labels: Vec<&str> = train.iter().map(|s| s.group.as_str()).collect();
            let ids: Vec<&str> = train.iter().map(|s| s.subject_id.as_str()).collect();
            let fold_cfg = ForestConfig {
                rng_seed: seed::derive_path(cfg.rng_seed, &[r as u64, k as u64]),
                ..cfg.clone()
            };
            let forest = Forest::fit(&rows, &labels, &ids, &fold_cfg)?;
            let predicted = forest.predict(&held_out.features);
            counts.record(held_out.group == positive_class, predicted == positive_class);
            observer(&FoldTrace {
                repeat: r,
                held_out,
                forest: &forest,
                predicted,
            });
        }
        repeats.push(RepeatResult {
            repeat: r,
            counts,
            rates: confusion_metrics(&counts),
        });
    }

    let summary = Summary {
        accuracy: summarize(repeats.iter().map(|r| r.rates.accuracy)),
        sensitivity: summarize(repeats.iter().map(|r| r.rates.sensitivity)),
        specificity: summarize(repeats.iter().map(|r| r.rates.specificity)),
        f1: summarize(repeats.iter().map(|r| r.rates.f1)),
    };
    Ok(CvReport {
        positive_class: positive_class.to_string(),
        negative_class,
        n_subjects: dataset.len(),
        n_repeats,
        forest: cfg.clone(),
        rng_seed: cfg.rng_seed,
        repeats,
        summary,
    })
}
