//! Result artifacts: detections, metrics, features, sweep tables, CV reports,
//! cohort manifests and pulse lists.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{parse_err, split_header, ArtifactHeader};
use crate::classifier::{CvReport, SweepEntry};
use crate::error::{Error, Result};
use crate::metrics::SubjectFeatures;
use crate::synth::Manifest;

/// Detector output for one (subject, trial, channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub subject_id: String,
    pub group: String,
    pub trial: u64,
    pub channel: String,
    pub window_ms: f64,
    pub tedi: f64,
    pub threshold_used: f64,
    pub fallback_applied: bool,
    pub no_response: bool,
    pub n_crossings: usize,
}

/// One row of the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub subject_id: String,
    pub group: String,
    pub trial: u64,
    pub channel: String,
    pub tedi: f64,
    pub edi: f64,
    pub tei: f64,
    pub no_response: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeatureRow {
    subject_id: String,
    group: String,
    tedi: f64,
    edi: f64,
    tei: f64,
    n_trials_used: usize,
    n_no_response: usize,
}

/// Per-repeat scores of one sweep window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub window_ms: f64,
    pub repeat: usize,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepSummaryRow {
    window_ms: f64,
    accuracy: Option<f64>,
    accuracy_std: Option<f64>,
    sensitivity: Option<f64>,
    sensitivity_std: Option<f64>,
    specificity: Option<f64>,
    specificity_std: Option<f64>,
    f1: Option<f64>,
    f1_std: Option<f64>,
}

/// Pulse onset of a continuous recording (s from recording start).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub subject_id: String,
    pub time_s: f64,
}

#[derive(Serialize, Deserialize)]
struct Wrapped<T> {
    provenance: ArtifactHeader,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize, Deserialize)]
struct ReportBody {
    report: CvReport,
}

#[derive(Serialize, Deserialize)]
struct ManifestBody {
    manifest: Manifest,
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn write_csv<W: Write, T: Serialize>(mut writer: W, header: &ArtifactHeader, rows: &[T]) -> Result<()> {
    writeln!(writer, "{}", header.to_line())?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(true)
        .from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Header-only file when there are no rows, so readers still see the columns.
fn write_csv_columns<W: Write, T: Serialize>(
    mut writer: W,
    header: &ArtifactHeader,
    columns: &[&str],
    rows: &[T],
) -> Result<()> {
    if rows.is_empty() {
        writeln!(writer, "{}", header.to_line())?;
        writeln!(writer, "{}", columns.join(","))?;
        return Ok(());
    }
    write_csv(writer, header, rows)
}

fn read_csv<R: Read, T: DeserializeOwned>(mut reader: R, name: &str) -> Result<(Option<ArtifactHeader>, Vec<T>)> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| parse_err(name, 0, e.to_string()))?;
    let (header, body) = split_header(&text);
    let offset = u64::from(header.is_some());
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for r in rdr.deserialize() {
        let row: T = r.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0) + offset;
            parse_err(name, line, e.to_string())
        })?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(parse_err(name, 0, "non-finite value"))
    }
}

const DETECTION_COLUMNS: [&str; 10] = [
    "subject_id",
    "group",
    "trial",
    "channel",
    "window_ms",
    "tedi",
    "threshold_used",
    "fallback_applied",
    "no_response",
    "n_crossings",
];

pub fn write_detections<W: Write>(w: W, header: &ArtifactHeader, rows: &[DetectionRecord]) -> Result<()> {
    write_csv_columns(w, header, &DETECTION_COLUMNS, rows)
}

pub fn read_detections<R: Read>(r: R, name: &str) -> Result<(Option<ArtifactHeader>, Vec<DetectionRecord>)> {
    let (h, rows): (_, Vec<DetectionRecord>) = read_csv(r, name)?;
    for d in &rows {
        finite(name, &[d.window_ms, d.tedi, d.threshold_used])?;
    }
    Ok((h, rows))
}

const METRIC_COLUMNS: [&str; 8] = [
    "subject_id",
    "group",
    "trial",
    "channel",
    "tedi",
    "edi",
    "tei",
    "no_response",
];

pub fn write_metrics<W: Write>(w: W, header: &ArtifactHeader, rows: &[MetricRecord]) -> Result<()> {
    write_csv_columns(w, header, &METRIC_COLUMNS, rows)
}

pub fn read_metrics<R: Read>(r: R, name: &str) -> Result<(Option<ArtifactHeader>, Vec<MetricRecord>)> {
    let (h, rows): (_, Vec<MetricRecord>) = read_csv(r, name)?;
    for m in &rows {
        finite(name, &[m.tedi, m.edi, m.tei])?;
    }
    Ok((h, rows))
}

const FEATURE_COLUMNS: [&str; 7] = [
    "subject_id",
    "group",
    "tedi",
    "edi",
    "tei",
    "n_trials_used",
    "n_no_response",
];

pub fn write_features<W: Write>(w: W, header: &ArtifactHeader, features: &[SubjectFeatures]) -> Result<()> {
    let rows: Vec<FeatureRow> = features
        .iter()
        .map(|f| FeatureRow {
            subject_id: f.subject_id.clone(),
            group: f.group.clone(),
            tedi: f.features[0],
            edi: f.features[1],
            tei: f.features[2],
            n_trials_used: f.n_trials_used,
            n_no_response: f.n_no_response,
        })
        .collect();
    write_csv_columns(w, header, &FEATURE_COLUMNS, &rows)
}

pub fn read_features<R: Read>(r: R, name: &str) -> Result<(Option<ArtifactHeader>, Vec<SubjectFeatures>)> {
    let (h, rows): (_, Vec<FeatureRow>) = read_csv(r, name)?;
    let mut out = Vec::with_capacity(rows.len());
    for f in rows {
        finite(name, &[f.tedi, f.edi, f.tei])?;
        out.push(SubjectFeatures {
            subject_id: f.subject_id,
            group: f.group,
            features: [f.tedi, f.edi, f.tei],
            n_trials_used: f.n_trials_used,
            n_no_response: f.n_no_response,
        });
    }
    Ok((h, out))
}

const SWEEP_COLUMNS: [&str; 6] = ["window_ms", "repeat", "accuracy", "sensitivity", "specificity", "f1"];

fn to_ms(window_len: f64) -> f64 {
    // 0.005 * 1000 is 5.000000000000001; report whole microseconds
    (window_len * 1e6).round() / 1e3
}

/// Per-repeat sweep table, one row per (window, repeat).
pub fn write_sweep<W: Write>(w: W, header: &ArtifactHeader, entries: &[SweepEntry]) -> Result<()> {
    let rows: Vec<SweepRow> = entries
        .iter()
        .flat_map(|e| {
            e.report.repeats.iter().map(|r| SweepRow {
                window_ms: to_ms(e.window_len),
                repeat: r.repeat,
                accuracy: r.rates.accuracy,
                sensitivity: r.rates.sensitivity,
                specificity: r.rates.specificity,
                f1: r.rates.f1,
            })
        })
        .collect();
    write_csv_columns(w, header, &SWEEP_COLUMNS, &rows)
}

pub fn read_sweep<R: Read>(r: R, name: &str) -> Result<(Option<ArtifactHeader>, Vec<SweepRow>)> {
    read_csv(r, name)
}

/// Plot table: one row per window with the mean and std of each rate.
pub fn write_sweep_summary<W: Write>(w: W, header: &ArtifactHeader, entries: &[SweepEntry]) -> Result<()> {
    let rows: Vec<SweepSummaryRow> = entries
        .iter()
        .map(|e| {
            let s = &e.report.summary;
            SweepSummaryRow {
                window_ms: to_ms(e.window_len),
                accuracy: s.accuracy.mean,
                accuracy_std: s.accuracy.std,
                sensitivity: s.sensitivity.mean,
                sensitivity_std: s.sensitivity.std,
                specificity: s.specificity.mean,
                specificity_std: s.specificity.std,
                f1: s.f1.mean,
                f1_std: s.f1.std,
            }
        })
        .collect();
    write_csv(w, header, &rows)
}

pub fn write_pulses<W: Write>(w: W, header: &ArtifactHeader, rows: &[PulseRecord]) -> Result<()> {
    write_csv_columns(w, header, &["subject_id", "time_s"], rows)
}

pub fn read_pulses<R: Read>(r: R, name: &str) -> Result<(Option<ArtifactHeader>, Vec<PulseRecord>)> {
    let (h, rows): (_, Vec<PulseRecord>) = read_csv(r, name)?;
    for p in &rows {
        finite(name, &[p.time_s])?;
    }
    Ok((h, rows))
}

fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_cv_report<W: Write>(w: W, header: &ArtifactHeader, report: &CvReport) -> Result<()> {
    write_json(
        w,
        &Wrapped {
            provenance: header.clone(),
            body: ReportBody {
                report: report.clone(),
            },
        },
    )
}

pub fn read_cv_report<R: Read>(r: R) -> Result<(ArtifactHeader, CvReport)> {
    let w: Wrapped<ReportBody> = serde_json::from_reader(r)?;
    Ok((w.provenance, w.body.report))
}

pub fn write_manifest<W: Write>(w: W, header: &ArtifactHeader, manifest: &Manifest) -> Result<()> {
    write_json(
        w,
        &Wrapped {
            provenance: header.clone(),
            body: ManifestBody {
                manifest: manifest.clone(),
            },
        },
    )
}

pub fn read_manifest<R: Read>(r: R) -> Result<(ArtifactHeader, Manifest)> {
    let w: Wrapped<ManifestBody> = serde_json::from_reader(r)?;
    Ok((w.provenance, w.body.manifest))
}
