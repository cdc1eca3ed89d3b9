use serde::{Deserialize, Serialize};

use super::cv::{loso_cv, CvReport};
use super::forest::ForestConfig;
use crate::detector::DetectorConfig;
use crate::error::Result;
use crate::metrics::{extract_features, SubjectFeatures, SubjectTrials};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// Sliding-window length (s).
    pub window_len: f64,
    pub features: Vec<SubjectFeatures>,
    pub report: CvReport,
}

/// Re-run detection, scoring and cross-validation once per window length.
/// All other detector settings come from `detector`.
pub fn window_sweep(
    subjects: &[SubjectTrials],
    windows: &[f64],
    detector: &DetectorConfig,
    forest: &ForestConfig,
    n_repeats: usize,
    positive_class: &str,
) -> Result<Vec<SweepEntry>> {
    windows
        .iter()
        .map(|&w| {
            let cfg = DetectorConfig {
                window_len: w,
                ..detector.clone()
            };
            cfg.validate()?;
            let features: Vec<SubjectFeatures> = extract_features(subjects, &cfg)?
                .into_iter()
                .map(|s| s.features)
                .collect();
            let report = loso_cv(&features, forest, n_repeats, positive_class)?;
            Ok(SweepEntry {
                window_len: w,
                features,
                report,
            })
        })
        .collect()
}
