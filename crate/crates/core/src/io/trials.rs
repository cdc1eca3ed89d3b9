//! Long-format trial tables.
//!
//! One row per sample: `subject_id,group,trial,channel,time_ms,value_uv`.
//! Rows of one (subject, trial, channel) series must appear in increasing time
//! order; series may be interleaved.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_err, ArtifactHeader};
use crate::error::{Error, Result};
use crate::metrics::SubjectTrials;
use crate::signal::{Epoch, TimeAxis};
use crate::synth::Cohort;

pub const COLUMNS: [&str; 6] = ["subject_id", "group", "trial", "channel", "time_ms", "value_uv"];

/// Spacing tolerance for a series to count as uniformly sampled (ms).
const UNIFORM_TOL_MS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub group: String,
    /// Trial numbers as written in the file, parallel to `epochs`.
    pub trial_ids: Vec<u64>,
    pub epochs: Vec<Epoch>,
}

/// Trials grouped by subject, in order of first appearance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialSet {
    pub subjects: Vec<SubjectRecord>,
}

impl TrialSet {
    pub fn from_cohort(cohort: &Cohort) -> Self {
        Self {
            subjects: cohort
                .subjects
                .iter()
                .map(|s| SubjectRecord {
                    subject_id: s.subject_id.clone(),
                    group: s.group.clone(),
                    trial_ids: (0..s.trials.len() as u64).collect(),
                    epochs: s.trials.clone(),
                })
                .collect(),
        }
    }

    pub fn to_subject_trials(&self) -> Vec<SubjectTrials> {
        self.subjects
            .iter()
            .map(|s| SubjectTrials {
                subject_id: s.subject_id.clone(),
                group: s.group.clone(),
                epochs: s.epochs.clone(),
            })
            .collect()
    }

    /// Number of (subject, trial, channel) series.
    pub fn n_series(&self) -> usize {
        self.subjects
            .iter()
            .flat_map(|s| &s.epochs)
            .map(|e| e.n_channels())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParseReport {
    pub header: Option<ArtifactHeader>,
    pub n_rows: u64,
    pub rows_per_subject: BTreeMap<String, u64>,
    pub n_subjects: usize,
    pub n_trials: usize,
    pub n_series: usize,
    pub warnings: Vec<String>,
}

struct Series {
    channel: String,
    times: Vec<f64>,
    values: Vec<f64>,
}

struct TrialAcc {
    id: u64,
    channel_index: HashMap<String, usize>,
    series: Vec<Series>,
}

struct SubjectAcc {
    id: String,
    group: String,
    trial_index: HashMap<u64, usize>,
    trials: Vec<TrialAcc>,
    rows: u64,
}

fn field<'a>(rec: &'a csv::ByteRecord, col: usize, name: &str, path: &str, line: u64) -> Result<&'a str> {
    let raw = rec
        .get(col)
        .ok_or_else(|| parse_err(path, line, format!("missing column {name}")))?;
    let s = std::str::from_utf8(raw).map_err(|_| parse_err(path, line, format!("{name} is not UTF-8")))?;
    if s.is_empty() {
        return Err(parse_err(path, line, format!("empty {name}")));
    }
    Ok(s)
}

fn number(s: &str, name: &str, path: &str, line: u64) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(path, line, format!("{name} {s:?} is not a finite number"))),
    }
}

/// Axis of one series. The rate snaps to an integer and the start to a whole
/// nanosecond when they are that close already.
fn series_axis(s: &Series, subject: &str, trial: u64) -> Result<TimeAxis> {
    let n = s.times.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let t0 = s.times[0];
    let dt = (s.times[n - 1] - t0) / (n - 1) as f64;
    for (i, t) in s.times.iter().enumerate() {
        if (t - (t0 + i as f64 * dt)).abs() > UNIFORM_TOL_MS {
            return Err(Error::NonUniformSampling {
                subject: subject.to_string(),
                trial,
                channel: s.channel.clone(),
            });
        }
    }
    let mut rate = 1000.0 / dt;
    if (rate - rate.round()).abs() <= 1e-9 * rate {
        rate = rate.round();
    }
    let mut start = t0 / 1000.0;
    let ns = (t0 * 1e6).round() / 1e9;
    if (start - ns).abs() < 1e-12 {
        start = ns;
    }
    TimeAxis::new(rate, start, n)
}

/// Load a trial table from disk.
pub fn load_trials(path: impl AsRef<Path>) -> Result<(TrialSet, ParseReport)> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_trials(BufReader::with_capacity(1 << 20, file), &path.display().to_string())
}

/// Parse a trial table; `name` labels error messages.
pub fn read_trials<R: BufRead>(mut reader: R, name: &str) -> Result<(TrialSet, ParseReport)> {
    let mut report = ParseReport::default();
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let line_offset = match ArtifactHeader::parse(&first) {
        Some(h) => {
            report.header = Some(h);
            first.clear();
            1
        }
        None => 0,
    };
    let chained = std::io::Cursor::new(first.into_bytes()).chain(reader);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(chained);

    let headers = rdr
        .headers()
        .map_err(|e| parse_err(name, 1 + line_offset, e.to_string()))?
        .clone();
    let mut cols = [usize::MAX; 6];
    for (i, h) in headers.iter().enumerate() {
        match COLUMNS.iter().position(|c| *c == h.trim()) {
            Some(k) if cols[k] == usize::MAX => cols[k] = i,
            Some(_) => return Err(parse_err(name, 1 + line_offset, format!("duplicate column {h}"))),
            None => return Err(parse_err(name, 1 + line_offset, format!("unknown column {h:?}"))),
        }
    }
    if let Some(k) = cols.iter().position(|c| *c == usize::MAX) {
        return Err(parse_err(name, 1 + line_offset, format!("missing column {}", COLUMNS[k])));
    }

    let mut subjects: Vec<SubjectAcc> = Vec::new();
    let mut subject_index: HashMap<String, usize> = HashMap::new();
    // (subject, trial, series) of the previous row; consecutive rows usually share it
    let mut last: Option<(usize, usize, usize)> = None;
    let mut rec = csv::ByteRecord::new();
    loop {
        let more = rdr.read_byte_record(&mut rec).map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0) + line_offset;
            parse_err(name, line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0) + line_offset;
        if rec.len() != COLUMNS.len() {
            return Err(parse_err(
                name,
                line,
                format!("expected {} fields, found {}", COLUMNS.len(), rec.len()),
            ));
        }
        let subject = field(&rec, cols[0], "subject_id", name, line)?;
        let group = field(&rec, cols[1], "group", name, line)?;
        let trial_s = field(&rec, cols[2], "trial", name, line)?;
        let channel = field(&rec, cols[3], "channel", name, line)?;
        let time = number(field(&rec, cols[4], "time_ms", name, line)?, "time_ms", name, line)?;
        let value = number(field(&rec, cols[5], "value_uv", name, line)?, "value_uv", name, line)?;
        let trial: u64 = trial_s
            .trim()
            .parse()
            .map_err(|_| parse_err(name, line, format!("trial {trial_s:?} is not a non-negative integer")))?;

        let same = last.filter(|&(s, t, c)| {
            let acc = &subjects[s];
            let tr = &acc.trials[t];
            acc.id == subject && tr.id == trial && tr.series[c].channel == channel
        });
        let (s, t, c) = match same {
            Some(key) => key,
            None => {
                let s = match subject_index.get(subject) {
                    Some(&s) => s,
                    None => {
                        subject_index.insert(subject.to_string(), subjects.len());
                        subjects.push(SubjectAcc {
                            id: subject.to_string(),
                            group: group.to_string(),
                            trial_index: HashMap::new(),
                            trials: Vec::new(),
                            rows: 0,
                        });
                        subjects.len() - 1
                    }
                };
                let acc = &mut subjects[s];
                let t = *acc.trial_index.entry(trial).or_insert_with(|| {
                    acc.trials.push(TrialAcc {
                        id: trial,
                        channel_index: HashMap::new(),
                        series: Vec::new(),
                    });
                    acc.trials.len() - 1
                });
                let tr = &mut acc.trials[t];
                let c = *tr.channel_index.entry(channel.to_string()).or_insert_with(|| {
                    tr.series.push(Series {
                        channel: channel.to_string(),
                        times: Vec::new(),
                        values: Vec::new(),
                    });
                    tr.series.len() - 1
                });
                (s, t, c)
            }
        };
        last = Some((s, t, c));
        let acc = &mut subjects[s];
        if acc.group != group {
            return Err(parse_err(
                name,
                line,
                format!("subject {subject} listed in groups {} and {group}", acc.group),
            ));
        }
        acc.rows += 1;
        let series = &mut acc.trials[t].series[c];
        if series.times.last().is_some_and(|&prev| time <= prev) {
            return Err(Error::NonMonotoneTime {
                subject: subject.to_string(),
                trial,
                channel: channel.to_string(),
                line,
            });
        }
        series.times.push(time);
        series.values.push(value);
        report.n_rows += 1;
    }

    let mut set = TrialSet::default();
    for acc in subjects {
        let mut rec = SubjectRecord {
            subject_id: acc.id.clone(),
            group: acc.group.clone(),
            trial_ids: Vec::with_capacity(acc.trials.len()),
            epochs: Vec::with_capacity(acc.trials.len()),
        };
        let mut channel_sets: Vec<Vec<String>> = Vec::new();
        for tr in acc.trials {
            let axis = series_axis(&tr.series[0], &acc.id, tr.id)?;
            for s in &tr.series[1..] {
                if series_axis(s, &acc.id, tr.id)? != axis {
                    return Err(Error::InvalidEpoch(format!(
                        "subject {}, trial {}: channel {} is sampled differently from channel {}",
                        acc.id, tr.id, s.channel, tr.series[0].channel
                    )));
                }
            }
            let labels: Vec<String> = tr.series.iter().map(|s| s.channel.clone()).collect();
            if !channel_sets.contains(&labels) {
                channel_sets.push(labels.clone());
            }
            let data = tr.series.into_iter().map(|s| s.values).collect();
            rec.trial_ids.push(tr.id);
            rec.epochs.push(Epoch::new(axis, labels, data, None)?);
        }
        if channel_sets.len() > 1 {
            report.warnings.push(format!(
                "subject {}: channel sets differ between trials",
                acc.id
            ));
        }
        report.n_trials += rec.epochs.len();
        report.n_series += rec.epochs.iter().map(|e| e.n_channels()).sum::<usize>();
        report.rows_per_subject.insert(acc.id, acc.rows);
        set.subjects.push(rec);
    }
    report.n_subjects = set.subjects.len();
    Ok((set, report))
}

/// Write a trial table. Numbers use the shortest representation that parses
/// back to the same `f64`.
pub fn write_trials<W: Write>(writer: W, set: &TrialSet, header: Option<&ArtifactHeader>) -> Result<()> {
    let mut out = std::io::BufWriter::with_capacity(1 << 20, writer);
    if let Some(h) = header {
        writeln!(out, "{}", h.to_line())?;
    }
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(COLUMNS).map_err(err)?;
    let mut ints = itoa::Buffer::new();
    let mut times = ryu::Buffer::new();
    let mut values = ryu::Buffer::new();
    for s in &set.subjects {
        if s.trial_ids.len() != s.epochs.len() {
            return Err(Error::InvalidEpoch(format!(
                "subject {}: {} trial ids for {} epochs",
                s.subject_id,
                s.trial_ids.len(),
                s.epochs.len()
            )));
        }
        for (id, epoch) in s.trial_ids.iter().zip(&s.epochs) {
            let trial = ints.format(*id);
            for (label, row) in epoch.channels.iter().zip(&epoch.data) {
                for (i, v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::InvalidEpoch(format!(
                            "subject {} trial {id} channel {label}: non-finite sample",
                            s.subject_id
                        )));
                    }
                    w.write_record([
                        s.subject_id.as_str(),
                        s.group.as_str(),
                        trial,
                        label.as_str(),
                        times.format_finite(epoch.time.time(i) * 1000.0),
                        values.format_finite(*v),
                    ])
                    .map_err(err)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
