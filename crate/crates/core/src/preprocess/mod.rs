//! Turns raw recordings into clean, pulse-aligned epochs: segmentation, pulse
//! excision with cubic bridging, decimation, zero-phase bandpass and average
//! re-referencing. Manual ICA is not performed; the chain records it as skipped
//! so data cleaned elsewhere can be fed in directly.

pub mod butterworth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Epoch, TimeAxis, TimeWindow};

pub use butterworth::SosFilter;

/// Order of the zero-phase anti-alias lowpass run before decimation.
const ANTI_ALIAS_ORDER: usize = 4;
/// Anti-alias cutoff as a fraction of the target rate.
const ANTI_ALIAS_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    /// Run the chain at all; disabled for data that is already clean.
    pub enabled: bool,
    pub band_low: f64,
    pub band_high: f64,
    /// Prototype order of each pass; forward-backward doubles the effective order.
    pub filter_order: usize,
    pub target_rate: f64,
    pub epoch_pre: f64,
    pub epoch_post: f64,
    pub excise_window: TimeWindow,
    pub rereference: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            band_low: 1.0,
            band_high: 80.0,
            filter_order: 3,
            target_rate: 1000.0,
            epoch_pre: 0.5,
            epoch_post: 1.0,
            excise_window: TimeWindow {
                start: -0.002,
                end: 0.006,
            },
            rereference: true,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.target_rate.is_finite() && self.target_rate > 0.0) {
            return bad(format!("target_rate must be positive, got {}", self.target_rate));
        }
        if !(self.band_low > 0.0 && self.band_low < self.band_high) {
            return bad(format!(
                "need 0 < band_low < band_high, got [{}, {}]",
                self.band_low, self.band_high
            ));
        }
        if self.band_high >= self.target_rate / 2.0 {
            return bad(format!(
                "band_high {} Hz must be below Nyquist ({} Hz)",
                self.band_high,
                self.target_rate / 2.0
            ));
        }
        if self.filter_order == 0 {
            return bad("filter_order must be >= 1".into());
        }
        if !(self.epoch_pre > 0.0 && self.epoch_post > 0.0) {
            return bad("epoch_pre and epoch_post must be positive".into());
        }
        let w = self.excise_window;
        if !(w.start < w.end && w.contains(0.0)) {
            return bad(format!(
                "excise_window [{}, {}] must be a window containing 0",
                w.start, w.end
            ));
        }
        Ok(())
    }
}

/// Continuous multi-channel recording; times are absolute seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub time: TimeAxis,
    pub channels: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

/// Result of cutting a recording into epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmented {
    /// `(pulse index, epoch)` for every pulse with enough surrounding data.
    pub epochs: Vec<(usize, Epoch)>,
    /// Indices of pulses too close to the recording edges.
    pub skipped: Vec<usize>,
}

pub fn segment_epochs(
    recording: &Recording,
    pulse_times: &[f64],
    cfg: &PreprocessConfig,
) -> Result<Segmented> {
    if pulse_times.is_empty() {
        return Err(Error::NoPulses);
    }
    let fs = recording.time.sampling_rate();
    let n = recording.time.n_samples();
    let n_pre = (cfg.epoch_pre * fs).round() as usize;
    let n_post = (cfg.epoch_post * fs).round() as usize;
    let axis = TimeAxis::new(fs, -(n_pre as f64) / fs, n_pre + n_post + 1)?;

    let mut out = Segmented {
        epochs: Vec::new(),
        skipped: Vec::new(),
    };
    for (k, &p) in pulse_times.iter().enumerate() {
        let pos = recording.time.position(p).round();
        if !pos.is_finite() || pos < n_pre as f64 || pos + n_post as f64 >= n as f64 {
            log::warn!("pulse {k} at {p} s lacks data for a full epoch; skipped");
            out.skipped.push(k);
            continue;
        }
        let centre = pos as usize;
        let range = centre - n_pre..centre + n_post + 1;
        let data = recording
            .data
            .iter()
            .map(|row| row[range.clone()].to_vec())
            .collect();
        let epoch = Epoch::new(axis, recording.channels.clone(), data, None)?;
        out.epochs.push((k, epoch));
    }
    Ok(out)
}

/// Cubic through four points `(xs[i], ys[i])`, evaluated at `x` (Lagrange form).
fn cubic_through(xs: [f64; 4], ys: [f64; 4], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

/// Replace the samples inside `window` by the cubic through the two nearest
/// samples on each side. Everything outside the window is left untouched.
pub fn excise_interpolate(epoch: &Epoch, window: TimeWindow) -> Result<Epoch> {
    if !window.contains(0.0) {
        return Err(Error::InvalidWindow {
            start: window.start,
            end: window.end,
            reason: "excision window must contain the pulse".into(),
        });
    }
    let t = &epoch.time;
    if !t.covers(window) {
        return Err(Error::InvalidWindow {
            start: window.start,
            end: window.end,
            reason: "outside epoch".into(),
        });
    }
    let inside = t.indices_in(window);
    let (left, right) = if inside.is_empty() {
        let next = t.position(window.start).ceil() as usize;
        (next, next)
    } else {
        (inside.start, inside.end)
    };
    if left < 2 || right + 2 > t.n_samples() {
        return Err(Error::InsufficientFlank(format!(
            "window [{}, {}] needs two samples on each side",
            window.start, window.end
        )));
    }
    let anchors = [left - 2, left - 1, right, right + 1];
    let xs = anchors.map(|i| i as f64);

    let mut out = epoch.clone();
    for row in &mut out.data {
        let ys = anchors.map(|i| row[i]);
        for i in inside.clone() {
            row[i] = cubic_through(xs, ys, i as f64);
        }
    }
    out.excised = Some(window);
    Ok(out)
}

/// Zero-phase Butterworth bandpass of every channel.
pub fn bandpass_zero_phase(epoch: &Epoch, cfg: &PreprocessConfig) -> Result<Epoch> {
    let fs = epoch.time.sampling_rate();
    let filter = SosFilter::bandpass(cfg.filter_order, cfg.band_low, cfg.band_high, fs)?;
    let mut out = epoch.clone();
    for row in &mut out.data {
        *row = filter.filtfilt(row);
    }
    Ok(out)
}

fn integer_ratio(from: f64, to: f64) -> Result<usize> {
    let ratio = from / to;
    let k = ratio.round();
    if to.is_nan() || to <= 0.0 || k < 1.0 || (ratio - k).abs() > 1e-9 * ratio {
        return Err(Error::NonIntegerRatio { from, to });
    }
    Ok(k as usize)
}

/// Keep every k-th sample, `k = rate / target_rate`, aligned so that the pulse
/// sample survives when it lies on the grid.
pub fn downsample(epoch: &Epoch, target_rate: f64) -> Result<Epoch> {
    let fs = epoch.time.sampling_rate();
    let k = integer_ratio(fs, target_rate)?;
    if k == 1 {
        return Ok(epoch.clone());
    }
    let n = epoch.time.n_samples();
    let zero = epoch.time.position(0.0);
    let offset = if zero >= 0.0 && zero.fract() == 0.0 {
        zero as usize % k
    } else {
        0
    };
    let n_new = (n - offset).div_ceil(k);
    let time = TimeAxis::new(target_rate, epoch.time.time(offset), n_new)?;
    let data = epoch
        .data
        .iter()
        .map(|row| row.iter().skip(offset).step_by(k).copied().collect())
        .collect();
    Epoch::new(time, epoch.channels.clone(), data, epoch.excised)
}

/// Zero-phase anti-alias lowpass followed by [`downsample`].
pub fn decimate(epoch: &Epoch, target_rate: f64) -> Result<Epoch> {
    let fs = epoch.time.sampling_rate();
    let k = integer_ratio(fs, target_rate)?;
    if k == 1 {
        return Ok(epoch.clone());
    }
    let lp = SosFilter::lowpass(ANTI_ALIAS_ORDER, ANTI_ALIAS_FRACTION * target_rate, fs)?;
    let mut smoothed = epoch.clone();
    for row in &mut smoothed.data {
        *row = lp.filtfilt(row);
    }
    downsample(&smoothed, target_rate)
}

/// Subtract the per-sample mean across channels.
pub fn rereference_average(epoch: &Epoch) -> Result<Epoch> {
    let nc = epoch.n_channels();
    if nc < 2 {
        return Err(Error::SingleChannel(nc));
    }
    let n = epoch.time.n_samples();
    let mut mean = vec![0.0; n];
    for row in &epoch.data {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nc as f64;
    }
    let mut out = epoch.clone();
    for row in &mut out.data {
        for (v, m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    Ok(out)
}

/// Stages of the preprocessing chain, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Segment,
    Excise,
    Downsample,
    Bandpass,
    IcaSkipped,
    Rereference,
    RereferenceSkipped,
}

/// What happened to one trial on its way through the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialProvenance {
    pub trial: usize,
    pub stages: Vec<Stage>,
    pub notes: Vec<String>,
}

/// Raw material for [`preprocess_pipeline`].
#[derive(Debug, Clone)]
pub enum RawInput {
    Continuous {
        recording: Recording,
        pulse_times: Vec<f64>,
    },
    Epochs(Vec<Epoch>),
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub epochs: Vec<Epoch>,
    pub provenance: Vec<TrialProvenance>,
    /// Pulses dropped during segmentation.
    pub skipped: Vec<usize>,
}

/// Run the post-segmentation chain on one epoch, returning the output of every
/// stage in order.
pub fn preprocess_epoch_staged(epoch: &Epoch, cfg: &PreprocessConfig) -> Result<Vec<(Stage, Epoch)>> {
    let mut stages = Vec::with_capacity(5);
    let excised = excise_interpolate(epoch, cfg.excise_window)?;
    stages.push((Stage::Excise, excised));
    let down = decimate(&stages[0].1, cfg.target_rate)?;
    stages.push((Stage::Downsample, down));
    let filtered = bandpass_zero_phase(&stages[1].1, cfg)?;
    stages.push((Stage::Bandpass, filtered.clone()));
    stages.push((Stage::IcaSkipped, filtered));
    let last = &stages[3].1;
    if cfg.rereference && last.n_channels() >= 2 {
        let reref = rereference_average(last)?;
        stages.push((Stage::Rereference, reref));
    } else {
        let same = last.clone();
        stages.push((Stage::RereferenceSkipped, same));
    }
    Ok(stages)
}

/// Segment (if needed), then excise, decimate, filter and re-reference every trial.
pub fn preprocess_pipeline(input: RawInput, cfg: &PreprocessConfig) -> Result<Preprocessed> {
    cfg.validate()?;
    let (epochs, skipped, segmented) = match input {
        RawInput::Continuous {
            recording,
            pulse_times,
        } => {
            let seg = segment_epochs(&recording, &pulse_times, cfg)?;
            let epochs = seg.epochs.into_iter().map(|(_, e)| e).collect();
            (epochs, seg.skipped, true)
        }
        RawInput::Epochs(e) => (e, Vec::new(), false),
    };
    if cfg.target_rate > 0.0 {
        for e in &epochs {
            integer_ratio(e.time.sampling_rate(), cfg.target_rate)?;
        }
    }

    let mut out = Preprocessed {
        epochs: Vec::with_capacity(epochs.len()),
        provenance: Vec::with_capacity(epochs.len()),
        skipped,
    };
    for (trial, epoch) in epochs.iter().enumerate() {
        let mut stages = preprocess_epoch_staged(epoch, cfg)?;
        let mut record = TrialProvenance {
            trial,
            stages: Vec::new(),
            notes: Vec::new(),
        };
        if segmented {
            record.stages.push(Stage::Segment);
        }
        record.stages.extend(stages.iter().map(|(s, _)| *s));
        if stages.last().map(|(s, _)| *s) == Some(Stage::RereferenceSkipped) {
            record.notes.push(if cfg.rereference {
                "single channel: average re-reference skipped".into()
            } else {
                "average re-reference disabled".into()
            });
        }
        record.notes.push("ICA skipped (manual step)".into());
        let (_, final_epoch) = stages.pop().expect("non-empty stage list");
        out.epochs.push(final_epoch);
        out.provenance.push(record);
    }
    Ok(out)
}
