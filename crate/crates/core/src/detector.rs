//! Return-to-baseline detection.
//!
//! Three blocks:
//!
//! 1. the rectified, normalized TEP is turned into a sliding-window energy
//!    signal (mean of squares over a window centered on each sample);
//! 2. post-pulse energy is compared against `mean + std` of the baseline
//!    energy, with a fallback to the bare mean when fewer than
//!    `min_supra_samples` samples exceed it;
//! 3. gaps between consecutive supra-threshold times are scanned in order and
//!    the first one longer than `gap_fraction` of the largest marks the point
//!    where the signal has settled (TEDI).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{mean_std, response_onset, TimeAxis, TimeWindow};

/// Window lengths explored by the sweep, in seconds.
pub const STANDARD_WINDOWS: [f64; 5] = [0.005, 0.010, 0.020, 0.030, 0.040];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    /// Sliding-window length in seconds.
    pub window_len: f64,
    pub baseline: TimeWindow,
    /// Earliest admissible TEDI (s).
    pub search_lo: f64,
    /// Latest admissible TEDI (s).
    pub search_hi: f64,
    pub min_supra_samples: usize,
    pub gap_fraction: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window_len: 0.020,
            baseline: TimeWindow {
                start: -0.500,
                end: -0.200,
            },
            search_lo: 0.080,
            search_hi: 0.850,
            min_supra_samples: 5,
            gap_fraction: 0.75,
        }
    }
}

impl DetectorConfig {
    pub fn with_window(window_len: f64) -> Self {
        Self {
            window_len,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.window_len.is_finite() && self.window_len > 0.0) {
            return bad(format!("window_len must be positive, got {}", self.window_len));
        }
        if !(self.baseline.start < self.baseline.end && self.baseline.end < 0.0) {
            return bad(format!(
                "baseline [{}, {}] must be a pre-pulse window",
                self.baseline.start, self.baseline.end
            ));
        }
        if !(self.search_lo > 0.0 && self.search_lo < self.search_hi) {
            return bad(format!(
                "need 0 < search_lo < search_hi, got [{}, {}]",
                self.search_lo, self.search_hi
            ));
        }
        if !(self.gap_fraction > 0.0 && self.gap_fraction < 1.0) {
            return bad(format!("gap_fraction must lie in (0, 1), got {}", self.gap_fraction));
        }
        Ok(())
    }
}

/// Per-sample sliding-window energy of a normalized TEP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub time: TimeAxis,
    pub values: Vec<f64>,
    pub window_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    /// Return-to-baseline time (s).
    pub tedi: f64,
    pub threshold_used: f64,
    pub fallback_applied: bool,
    pub no_response_flag: bool,
    /// Times of post-pulse samples whose energy exceeds the threshold.
    pub crossings: Vec<f64>,
    /// Differences between consecutive crossings; the last entry is the gap to
    /// the end of the epoch.
    pub gaps: Vec<f64>,
}

/// Window length in samples and its split around the center sample.
fn window_split(window_len: f64, fs: f64) -> Result<(usize, usize)> {
    let w = (window_len * fs).round();
    if w.is_nan() || w < 2.0 {
        return Err(Error::InvalidConfig(format!(
            "window of {window_len} s is shorter than 2 samples at {fs} Hz"
        )));
    }
    let w = w as usize;
    let left = w / 2;
    Ok((left, w - 1 - left))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Mean of squares over a window centered on each sample. Windows are
/// truncated at the epoch edges and averaged over the samples they actually
/// cover.
pub fn energy_signal(tep: &[f64], time: &TimeAxis, window_len: f64) -> Result<EnergySeries> {
    if tep.len() != time.n_samples() {
        return Err(Error::InvalidEpoch(format!(
            "{} samples for a {}-sample axis",
            tep.len(),
            time.n_samples()
        )));
    }
    let (left, right) = window_split(window_len, time.sampling_rate())?;
    let n = tep.len();

    // compensated prefix sums of squares: hi[k] + lo[k] = sum of tep[..k]^2
    let mut hi = Vec::with_capacity(n + 1);
    let mut lo = Vec::with_capacity(n + 1);
    let (mut s, mut c) = (0.0, 0.0);
    hi.push(0.0);
    lo.push(0.0);
    for v in tep {
        let (ns, e) = two_sum(s, v * v);
        s = ns;
        c += e;
        hi.push(s);
        lo.push(c);
    }

    let values = (0..n)
        .map(|i| {
            let a = i.saturating_sub(left);
            let b = (i + right + 1).min(n);
            let sum = (hi[b] - hi[a]) + (lo[b] - lo[a]);
            (sum / (b - a) as f64).max(0.0)
        })
        .collect();
    Ok(EnergySeries {
        time: *time,
        values,
        window_len,
    })
}

/// Mean and population standard deviation of the energy inside `baseline`.
pub fn baseline_stats(energy: &EnergySeries, baseline: TimeWindow) -> Result<(f64, f64)> {
    let range = energy.time.indices_in(baseline);
    if range.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "baseline [{}, {}] holds {} samples",
            baseline.start,
            baseline.end,
            range.len()
        )));
    }
    mean_std(&energy.values[range])
}

/// `mean + 1 std` of the baseline energy.
pub fn baseline_threshold(energy: &EnergySeries, baseline: TimeWindow) -> Result<f64> {
    let (m, s) = baseline_stats(energy, baseline)?;
    Ok(m + s)
}

/// Times of samples in `search` whose energy is strictly above `threshold`.
pub fn supra_threshold_times(energy: &EnergySeries, threshold: f64, search: TimeWindow) -> Vec<f64> {
    energy
        .time
        .indices_in(search)
        .filter(|&i| energy.values[i] > threshold)
        .map(|i| energy.time.time(i))
        .collect()
}

/// Locate the return-to-baseline time of one normalized, rectified TEP.
///
/// `excised` is the window removed around the pulse; crossings are collected
/// from its end (or from the pulse when nothing was excised) up to the end of
/// the epoch, and only the final TEDI is clamped to `[search_lo, search_hi]`.
pub fn detect_return_to_baseline(
    tep: &[f64],
    time: &TimeAxis,
    excised: Option<TimeWindow>,
    cfg: &DetectorConfig,
) -> Result<DetectionResult> {
    cfg.validate()?;
    let energy = energy_signal(tep, time, cfg.window_len)?;
    let (mean, std) = baseline_stats(&energy, cfg.baseline)?;
    let post = TimeWindow::new(response_onset(excised), time.t_end())?;

    let mut threshold = mean + std;
    let mut crossings = supra_threshold_times(&energy, threshold, post);
    let mut fallback_applied = false;
    if crossings.len() < cfg.min_supra_samples {
        threshold = mean;
        crossings = supra_threshold_times(&energy, threshold, post);
        fallback_applied = true;
        if crossings.len() < cfg.min_supra_samples {
            return Ok(DetectionResult {
                tedi: cfg.search_lo,
                threshold_used: threshold,
                fallback_applied,
                no_response_flag: true,
                crossings,
                gaps: Vec::new(),
            });
        }
    }

    let end = time.t_end();
    let gaps: Vec<f64> = crossings
        .iter()
        .zip(crossings.iter().skip(1).chain(std::iter::once(&end)))
        .map(|(a, b)| b - a)
        .collect();
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let settle = gaps
        .iter()
        .position(|&g| g > cfg.gap_fraction * max_gap);

    let (tedi, no_response_flag) = match settle {
        Some(j) => (crossings[j], false),
        None => (crossings.last().copied().unwrap_or(cfg.search_lo), true),
    };
    Ok(DetectionResult {
        tedi: tedi.clamp(cfg.search_lo, cfg.search_hi),
        threshold_used: threshold,
        fallback_applied,
        no_response_flag,
        crossings,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::rectify_normalize;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn axis() -> TimeAxis {
        TimeAxis::around_pulse(1000.0, 0.5, 1.0).unwrap()
    }

    /// Brute-force centered-window mean of squares.
    fn naive_energy(x: &[f64], left: usize, right: usize) -> Vec<f64> {
        let n = x.len() as isize;
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                let mut k = 0;
                for j in (i - left as isize)..=(i + right as isize) {
                    if j >= 0 && j < n {
                        s += x[j as usize] * x[j as usize];
                        k += 1;
                    }
                }
                s / k as f64
            })
            .collect()
    }

    #[test]
    fn energy_constant() {
        let t = axis();
        let e = energy_signal(&vec![0.3; 1501], &t, 0.02).unwrap();
        assert!(e.values.iter().all(|v| (v - 0.09).abs() < 1e-15));
    }

    #[test]
    fn energy_hand_case() {
        let t = TimeAxis::new(1000.0, 0.0, 3).unwrap();
        let e = energy_signal(&[1.0, 2.0, 3.0], &t, 0.003).unwrap();
        assert!((e.values[1] - 14.0 / 3.0).abs() < 1e-15);
        assert!((e.values[0] - 2.5).abs() < 1e-15);
        assert!((e.values[2] - 6.5).abs() < 1e-15);
    }

    #[test]
    fn energy_window_too_short() {
        let t = axis();
        assert!(energy_signal(&vec![0.5; 1501], &t, 0.001).is_err());
    }

    #[test]
    fn energy_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = TimeAxis::new(1000.0, -0.5, 1500).unwrap();
        for &w in &STANDARD_WINDOWS {
            let x: Vec<f64> = (0..1500).map(|_| rng.random_range(0.0..1.0)).collect();
            let (l, r) = window_split(w, 1000.0).unwrap();
            let naive = naive_energy(&x, l, r);
            let fast = energy_signal(&x, &t, w).unwrap();
            for (a, b) in naive.iter().zip(&fast.values) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn threshold_cases() {
        let t = TimeAxis::new(1000.0, -0.5, 600).unwrap();
        let e = EnergySeries {
            time: t,
            values: vec![0.25; 600],
            window_len: 0.02,
        };
        let bl = TimeWindow::new(-0.5, -0.2).unwrap();
        assert_eq!(baseline_threshold(&e, bl).unwrap(), 0.25);

        let t2 = TimeAxis::new(1000.0, -0.002, 4).unwrap();
        let e = EnergySeries {
            time: t2,
            values: vec![0.0, 2.0, 9.0, 9.0],
            window_len: 0.002,
        };
        let bl = TimeWindow::new(-0.002, -0.001).unwrap();
        assert_eq!(baseline_threshold(&e, bl).unwrap(), 2.0);

        let bl = TimeWindow::new(-0.9, -0.8).unwrap();
        assert!(baseline_threshold(&e, bl).is_err());
    }

    #[test]
    fn threshold_is_mean_std_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = axis();
        let values: Vec<f64> = (0..1501).map(|_| rng.random_range(0.0..0.2)).collect();
        let e = EnergySeries {
            time: t,
            values: values.clone(),
            window_len: 0.02,
        };
        let bl = DetectorConfig::default().baseline;
        let (m, s) = mean_std(&values[0..301]).unwrap();
        assert!((baseline_threshold(&e, bl).unwrap() - (m + s)).abs() < 1e-12);
    }

    #[test]
    fn supra_times_cases() {
        let t = axis();
        let mut values = vec![0.0; 1501];
        let post = TimeWindow::new(0.0, 1.0).unwrap();
        let e = EnergySeries {
            time: t,
            values: values.clone(),
            window_len: 0.02,
        };
        assert!(supra_threshold_times(&e, 0.1, post).is_empty());
        for v in &mut values[600..=650] {
            *v = 1.0;
        }
        let e = EnergySeries {
            time: t,
            values,
            window_len: 0.02,
        };
        let got = supra_threshold_times(&e, 0.5, post);
        let want: Vec<f64> = (600..=650).map(|i| t.time(i)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn supra_times_match_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t = axis();
        let values: Vec<f64> = (0..1501).map(|_| rng.random_range(0.0..1.0)).collect();
        let e = EnergySeries {
            time: t,
            values: values.clone(),
            window_len: 0.02,
        };
        let post = TimeWindow::new(0.006, 1.0).unwrap();
        let mut want = Vec::new();
        for (i, v) in values.iter().enumerate() {
            let ti = t.time(i);
            if ti >= 0.006 - 1e-12 && *v > 0.4 {
                want.push(ti);
            }
        }
        assert_eq!(supra_threshold_times(&e, 0.4, post), want);
    }

    #[test]
    fn rectangular_burst() {
        let t = axis();
        let mut x = vec![0.0; 1501];
        for v in &mut x[500..=600] {
            *v = 1.0;
        }
        let r = detect_return_to_baseline(&x, &t, None, &DetectorConfig::default()).unwrap();
        // last energized sample: burst end + 10 samples of left half-window
        assert_eq!(r.tedi, t.time(610));
        assert!(!r.fallback_applied && !r.no_response_flag);
    }

    #[test]
    fn invalid_config_rejected() {
        let t = axis();
        let x = vec![0.5; 1501];
        let mut cfg = DetectorConfig::default();
        cfg.gap_fraction = 1.0;
        assert!(detect_return_to_baseline(&x, &t, None, &cfg).is_err());
        let mut cfg = DetectorConfig::default();
        cfg.baseline = TimeWindow { start: -0.3, end: 0.1 };
        assert!(cfg.validate().is_err());
    }

    fn noisy_trial(rng: &mut ChaCha8Rng, tau: f64) -> Vec<f64> {
        let t = axis();
        let raw: Vec<f64> = (0..1501)
            .map(|i| {
                let ti = t.time(i);
                let resp = if ti > 0.0 {
                    10.0 * (-ti / tau).exp() * (2.0 * std::f64::consts::PI * 20.0 * ti).sin()
                } else {
                    0.0
                };
                resp + rng.random_range(-1.0..1.0)
            })
            .collect();
        rectify_normalize(&raw, None, &t).unwrap()
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = noisy_trial(&mut rng, 0.1);
        let cfg = DetectorConfig::default();
        let a = detect_return_to_baseline(&x, &axis(), None, &cfg).unwrap();
        let b = detect_return_to_baseline(&x, &axis(), None, &cfg).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tedi_within_bounds(seed in any::<u64>(), tau in 0.01..0.5f64, w in 0usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = noisy_trial(&mut rng, tau);
            let cfg = DetectorConfig::with_window(STANDARD_WINDOWS[w]);
            let r = detect_return_to_baseline(&x, &axis(), None, &cfg).unwrap();
            prop_assert!(r.tedi >= cfg.search_lo && r.tedi <= cfg.search_hi);
            prop_assert!(r.crossings.windows(2).all(|p| p[0] < p[1]));
        }

        #[test]
        fn raising_threshold_never_adds_crossings(seed in any::<u64>(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = noisy_trial(&mut rng, 0.15);
            let e = energy_signal(&x, &axis(), 0.02).unwrap();
            let post = TimeWindow::new(0.0, 1.0).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let n_lo = supra_threshold_times(&e, lo * 0.2, post).len();
            let n_hi = supra_threshold_times(&e, hi * 0.2, post).len();
            prop_assert!(n_hi <= n_lo);
        }

        #[test]
        fn sign_and_power_of_two_scaling_invariant(seed in any::<u64>(), k in -30i32..30, neg in any::<bool>()) {
            let t = axis();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<f64> = (0..1501).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = if neg { -(2f64.powi(k)) } else { 2f64.powi(k) };
            let scaled: Vec<f64> = raw.iter().map(|v| v * s).collect();
            let cfg = DetectorConfig::default();
            let a = detect_return_to_baseline(&rectify_normalize(&raw, None, &t).unwrap(), &t, None, &cfg).unwrap();
            let b = detect_return_to_baseline(&rectify_normalize(&scaled, None, &t).unwrap(), &t, None, &cfg).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
