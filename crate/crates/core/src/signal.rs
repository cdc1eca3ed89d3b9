//! Time-series types and the numeric primitives shared by every stage.
//!
//! Times are in seconds relative to the TMS pulse (pulse at `t = 0`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fractional-sample tolerance used when mapping times onto sample indices.
const SAMPLE_SNAP: f64 = 1e-6;

/// Uniform sampling grid of an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    sampling_rate: f64,
    t_start: f64,
    n_samples: usize,
}

impl TimeAxis {
    pub fn new(sampling_rate: f64, t_start: f64, n_samples: usize) -> Result<Self> {
        if !(sampling_rate.is_finite() && sampling_rate > 0.0) {
            return Err(Error::InvalidTimeAxis(format!(
                "sampling rate must be positive, got {sampling_rate}"
            )));
        }
        if !t_start.is_finite() {
            return Err(Error::InvalidTimeAxis("t_start must be finite".into()));
        }
        if n_samples < 2 {
            return Err(Error::InvalidTimeAxis(format!(
                "need at least 2 samples, got {n_samples}"
            )));
        }
        Ok(Self {
            sampling_rate,
            t_start,
            n_samples,
        })
    }

    /// Axis covering `[-pre, post]` inclusive at `rate`.
    pub fn around_pulse(rate: f64, pre: f64, post: f64) -> Result<Self> {
        let n_pre = (pre * rate).round() as usize;
        let n_post = (post * rate).round() as usize;
        Self::new(rate, -(n_pre as f64) / rate, n_pre + n_post + 1)
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sampling_rate
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 / self.sampling_rate
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_samples - 1)
    }

    /// Fractional sample position of time `t`, snapped to an integer when within
    /// rounding distance of one.
    pub fn position(&self, t: f64) -> f64 {
        let pos = (t - self.t_start) * self.sampling_rate;
        let r = pos.round();
        if (pos - r).abs() < SAMPLE_SNAP {
            r
        } else {
            pos
        }
    }

    /// Index range of the samples whose times lie in `[window.start, window.end]`.
    pub fn indices_in(&self, window: TimeWindow) -> std::ops::Range<usize> {
        let lo = self.position(window.start).ceil().max(0.0);
        let hi = (self.position(window.end).floor() + 1.0).min(self.n_samples as f64);
        if hi <= lo {
            return 0..0;
        }
        lo as usize..hi as usize
    }

    /// True when the window lies inside the epoch span (up to sample snapping).
    pub fn covers(&self, window: TimeWindow) -> bool {
        self.position(window.start) >= 0.0
            && self.position(window.end) <= (self.n_samples - 1) as f64
    }

    pub fn with_rate(&self, sampling_rate: f64, n_samples: usize) -> Result<Self> {
        Self::new(sampling_rate, self.t_start, n_samples)
    }
}

/// Closed time interval `[start, end]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start >= end {
            return Err(Error::InvalidWindow {
                start,
                end,
                reason: "start must be finite and strictly before end".into(),
            });
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// One pulse-aligned trial: a set of channels sharing a time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    pub time: TimeAxis,
    pub channels: Vec<String>,
    /// One sample vector per channel, in microvolts.
    pub data: Vec<Vec<f64>>,
    /// Window removed and interpolated around the pulse, if any.
    pub excised: Option<TimeWindow>,
}

impl Epoch {
    pub fn new(
        time: TimeAxis,
        channels: Vec<String>,
        data: Vec<Vec<f64>>,
        excised: Option<TimeWindow>,
    ) -> Result<Self> {
        let epoch = Self {
            time,
            channels,
            data,
            excised,
        };
        epoch.validate()?;
        Ok(epoch)
    }

    pub fn single(time: TimeAxis, channel: &str, samples: Vec<f64>) -> Result<Self> {
        Self::new(time, vec![channel.to_string()], vec![samples], None)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.len() != self.data.len() {
            return Err(Error::InvalidEpoch(format!(
                "{} channel labels for {} data rows",
                self.channels.len(),
                self.data.len()
            )));
        }
        for (label, row) in self.channels.iter().zip(&self.data) {
            if row.len() != self.time.n_samples() {
                return Err(Error::InvalidEpoch(format!(
                    "channel {label} has {} samples, expected {}",
                    row.len(),
                    self.time.n_samples()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidEpoch(format!(
                    "channel {label} contains non-finite samples"
                )));
            }
        }
        if let Some(w) = self.excised {
            if !w.contains(0.0) {
                return Err(Error::InvalidEpoch(
                    "excised window must contain the pulse".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Start of the usable post-pulse response: end of the excised window, or
    /// the pulse itself when nothing was excised.
    pub fn onset(&self) -> f64 {
        response_onset(self.excised)
    }
}

pub fn response_onset(excised: Option<TimeWindow>) -> f64 {
    excised.map_or(0.0, |w| w.end)
}

/// Rectify and scale by the largest magnitude found outside the excised window.
pub fn rectify_normalize(
    samples: &[f64],
    excised: Option<TimeWindow>,
    time: &TimeAxis,
) -> Result<Vec<f64>> {
    if samples.len() != time.n_samples() {
        return Err(Error::InvalidEpoch(format!(
            "{} samples for a {}-sample axis",
            samples.len(),
            time.n_samples()
        )));
    }
    let skip = excised.map_or(0..0, |w| time.indices_in(w));
    let peak = samples
        .iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, v)| v.abs())
        .fold(0.0_f64, f64::max);
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::DegenerateFlatTrial);
    }
    Ok(samples.iter().map(|v| v.abs() / peak).collect())
}

fn interpolate_at(signal: &[f64], pos: f64) -> f64 {
    let last = signal.len() - 1;
    if pos >= last as f64 {
        return signal[last];
    }
    let i = pos.floor().max(0.0) as usize;
    let frac = pos - i as f64;
    if frac == 0.0 {
        signal[i]
    } else {
        signal[i] + frac * (signal[i + 1] - signal[i])
    }
}

/// Composite trapezoidal area of `signal` over `window`. Window edges that fall
/// between samples are linearly interpolated.
pub fn trapezoid_auc(signal: &[f64], time: &TimeAxis, window: TimeWindow) -> Result<f64> {
    if signal.len() != time.n_samples() {
        return Err(Error::InvalidEpoch(format!(
            "{} samples for a {}-sample axis",
            signal.len(),
            time.n_samples()
        )));
    }
    if !time.covers(window) {
        return Err(Error::InvalidWindow {
            start: window.start,
            end: window.end,
            reason: format!(
                "outside epoch span [{}, {}]",
                time.t_start(),
                time.t_end()
            ),
        });
    }
    let p0 = time.position(window.start);
    let p1 = time.position(window.end);
    let dt = time.dt();

    let mut prev_pos = p0;
    let mut prev_val = interpolate_at(signal, p0);
    let mut area = 0.0;
    let first_inner = p0.floor() as usize + 1;
    let last_inner = p1.ceil() as usize;
    for (i, &v) in signal.iter().enumerate().take(last_inner).skip(first_inner) {
        area += 0.5 * (prev_val + v) * (i as f64 - prev_pos);
        prev_pos = i as f64;
        prev_val = v;
    }
    let end_val = interpolate_at(signal, p1);
    area += 0.5 * (prev_val + end_val) * (p1 - prev_pos);
    Ok(area * dt)
}

/// Arithmetic mean and population standard deviation (denominator `N`).
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}
