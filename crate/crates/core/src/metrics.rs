//! Perturbation indexes per trial/channel and their per-subject means.
//!
//! - TEDI: return-to-baseline time from [`crate::detector`].
//! - EDI: `atan(A_peak / (TEDI - t_peak))`, where `A_peak` is the largest
//!   normalized |TEP| between the response onset and TEDI. Amplitude is
//!   dimensionless, time is in seconds.
//! - TEI: trapezoidal area of the normalized |TEP| from onset to TEDI.
//!
//! The onset is the end of the excised pulse window, or `t = 0` when nothing
//! was excised.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::detector::{detect_return_to_baseline, DetectionResult, DetectorConfig};
use crate::error::{Error, Result};
use crate::signal::{rectify_normalize, response_onset, trapezoid_auc, Epoch, TimeAxis, TimeWindow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TepMetrics {
    pub trial: usize,
    pub channel: String,
    pub tedi: f64,
    pub edi: f64,
    pub tei: f64,
    pub detection: DetectionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectFeatures {
    pub subject_id: String,
    pub group: String,
    /// Mean TEDI (s), mean EDI (rad), mean TEI.
    pub features: [f64; 3],
    /// Number of (trial, channel) pairs averaged.
    pub n_trials_used: usize,
    pub n_no_response: usize,
}

/// First sample strictly after `onset` and last sample at or before `tedi`.
fn response_range(time: &TimeAxis, onset: f64, tedi: f64) -> std::ops::Range<usize> {
    let first = time.position(onset).floor() + 1.0;
    let last = time.position(tedi).floor().min((time.n_samples() - 1) as f64);
    if first < 0.0 || last < first {
        return 0..0;
    }
    first as usize..last as usize + 1
}

pub fn compute_edi(tep: &[f64], time: &TimeAxis, onset: f64, tedi: f64) -> Result<f64> {
    let range = response_range(time, onset, tedi);
    if tedi <= onset || range.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no samples in ({onset}, {tedi}] for the peak search"
        )));
    }
    let mut peak_idx = range.start;
    for i in range {
        if tep[i] > tep[peak_idx] {
            peak_idx = i;
        }
    }
    let run = tedi - time.time(peak_idx);
    if run <= 0.0 {
        return Ok(FRAC_PI_2);
    }
    Ok((tep[peak_idx] / run).atan())
}

pub fn compute_tei(tep: &[f64], time: &TimeAxis, onset: f64, tedi: f64) -> Result<f64> {
    if tedi <= onset {
        return Ok(0.0);
    }
    trapezoid_auc(tep, time, TimeWindow::new(onset, tedi)?)
}

/// Normalize, detect and compute all three indexes for one channel of one trial.
pub fn compute_trial_metrics(
    samples: &[f64],
    time: &TimeAxis,
    excised: Option<TimeWindow>,
    cfg: &DetectorConfig,
    trial: usize,
    channel: &str,
) -> Result<TepMetrics> {
    let tep = rectify_normalize(samples, excised, time)?;
    let detection = detect_return_to_baseline(&tep, time, excised, cfg)?;
    metrics_from_detection(&tep, time, excised, detection, trial, channel)
}

/// EDI and TEI for a detection computed earlier (e.g. read back from disk).
pub fn metrics_from_detection(
    tep: &[f64],
    time: &TimeAxis,
    excised: Option<TimeWindow>,
    detection: DetectionResult,
    trial: usize,
    channel: &str,
) -> Result<TepMetrics> {
    let onset = response_onset(excised);
    let tedi = detection.tedi;
    let edi = compute_edi(tep, time, onset, tedi)?;
    let tei = compute_tei(tep, time, onset, tedi)?;
    Ok(TepMetrics {
        trial,
        channel: channel.to_string(),
        tedi,
        edi,
        tei,
        detection,
    })
}

/// A channel-trial that could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTrial {
    pub trial: usize,
    pub channel: String,
    pub reason: String,
}

/// Score every channel of every epoch. Flat channel-trials are skipped and
/// reported; any other failure aborts.
pub fn score_epochs(
    epochs: &[Epoch],
    cfg: &DetectorConfig,
) -> Result<(Vec<TepMetrics>, Vec<SkippedTrial>)> {
    let mut scored = Vec::new();
    let mut skipped = Vec::new();
    for (trial, epoch) in epochs.iter().enumerate() {
        for (channel, row) in epoch.channels.iter().zip(&epoch.data) {
            match compute_trial_metrics(row, &epoch.time, epoch.excised, cfg, trial, channel) {
                Ok(m) => scored.push(m),
                Err(Error::DegenerateFlatTrial) => skipped.push(SkippedTrial {
                    trial,
                    channel: channel.clone(),
                    reason: Error::DegenerateFlatTrial.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
    }
    Ok((scored, skipped))
}

/// All trials of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectTrials {
    pub subject_id: String,
    pub group: String,
    pub epochs: Vec<Epoch>,
}

/// Per-subject scoring output.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectScores {
    pub subject_id: String,
    pub group: String,
    pub metrics: Vec<TepMetrics>,
    pub skipped: Vec<SkippedTrial>,
    pub features: SubjectFeatures,
}

/// Score and aggregate every subject.
pub fn extract_features(subjects: &[SubjectTrials], cfg: &DetectorConfig) -> Result<Vec<SubjectScores>> {
    subjects
        .iter()
        .map(|s| {
            let (metrics, skipped) = score_epochs(&s.epochs, cfg)?;
            let features = aggregate_subject(&metrics, &s.subject_id, &s.group)?;
            Ok(SubjectScores {
                subject_id: s.subject_id.clone(),
                group: s.group.clone(),
                metrics,
                skipped,
                features,
            })
        })
        .collect()
}

/// Unweighted mean of each index over all (trial, channel) pairs.
pub fn aggregate_subject(metrics: &[TepMetrics], subject_id: &str, group: &str) -> Result<SubjectFeatures> {
    let rows: Vec<[f64; 3]> = metrics.iter().map(|m| [m.tedi, m.edi, m.tei]).collect();
    let n_no_response = metrics.iter().filter(|m| m.detection.no_response_flag).count();
    aggregate_indexes(&rows, n_no_response, subject_id, group)
}

/// [`aggregate_subject`] on bare `[tedi, edi, tei]` rows.
pub fn aggregate_indexes(
    rows: &[[f64; 3]],
    n_no_response: usize,
    subject_id: &str,
    group: &str,
) -> Result<SubjectFeatures> {
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!(
            "subject {subject_id} has no scored trials"
        )));
    }
    let n = rows.len() as f64;
    // summing in sorted order makes the mean independent of input order
    let mean_of = |k: usize| {
        let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum::<f64>() / n
    };
    Ok(SubjectFeatures {
        subject_id: subject_id.to_string(),
        group: group.to_string(),
        features: [mean_of(0), mean_of(1), mean_of(2)],
        n_trials_used: rows.len(),
        n_no_response,
    })
}
