//! Synthetic TMS-EEG trials and cohorts with known ground truth.
//!
//! A response is a sum of damped sinusoids starting at the pulse,
//! `sum_j A_j exp(-t / tau_j) sin(2 pi f_j t + phi_j)` for `t > 0`, plus noise
//! over the whole epoch. The ground-truth return time is where the noiseless
//! envelope `sum_j |A_j| exp(-t / tau_j)` first drops below the noise level.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::SubjectTrials;
use crate::seed;
use crate::signal::{Epoch, TimeAxis};

/// Bisection stops once the bracket is narrower than this (s).
const GROUND_TRUTH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    /// Peak amplitude (µV).
    pub amplitude: f64,
    /// Decay time constant (s).
    pub decay_tau: f64,
    /// Oscillation frequency (Hz).
    pub frequency: f64,
    /// Phase at the pulse (rad).
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// Independent Gaussian samples with std `noise_sigma`.
    White,
    /// Stationary AR(1) with marginal std `noise_sigma`.
    Ar1 { rho: f64 },
    /// No additive noise; samples whose magnitude is below `noise_sigma` are
    /// recorded as zero, like a recorder whose resolution equals the noise floor.
    Deadband,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TepModel {
    pub components: Vec<Component>,
    /// Noise level (µV); also the level that defines the ground-truth return.
    pub noise_sigma: f64,
    pub noise_model: NoiseModel,
}

impl TepModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.components.is_empty() {
            return bad("model needs at least one component".into());
        }
        for c in &self.components {
            if !(c.decay_tau > 0.0 && c.decay_tau.is_finite()) {
                return bad(format!("decay_tau must be positive, got {}", c.decay_tau));
            }
            if !(1.0..=80.0).contains(&c.frequency) {
                return bad(format!(
                    "frequency {} Hz outside the 1-80 Hz analysis band",
                    c.frequency
                ));
            }
            if !(c.amplitude.is_finite() && c.phase.is_finite()) {
                return bad("amplitude and phase must be finite".into());
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if let NoiseModel::Ar1 { rho } = self.noise_model {
            if !(rho > -1.0 && rho < 1.0) {
                return bad(format!("AR(1) coefficient must lie in (-1, 1), got {rho}"));
            }
        }
        Ok(())
    }

    /// Noiseless response at time `t` (zero for `t <= 0`).
    pub fn response(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.components
            .iter()
            .map(|c| c.amplitude * (-t / c.decay_tau).exp() * (2.0 * PI * c.frequency * t + c.phase).sin())
            .sum()
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.amplitude.abs() * (-t.max(0.0) / c.decay_tau).exp())
            .sum()
    }

    /// First time the envelope falls below `noise_sigma`, found by bisection.
    pub fn ground_truth_return(&self, t_end: f64) -> Result<f64> {
        let level = self.noise_sigma;
        if self.envelope(t_end) >= level {
            return Err(Error::UnresolvableGroundTruth {
                noise_sigma: level,
                t_end,
            });
        }
        if self.envelope(0.0) < level {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0, t_end);
        while hi - lo > GROUND_TRUTH_TOL {
            let mid = 0.5 * (lo + hi);
            if self.envelope(mid) >= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// One single-channel synthetic trial and its ground-truth return time.
pub fn gen_trial(model: &TepModel, time: &TimeAxis, seed: u64) -> Result<(Epoch, f64)> {
    let samples = render(model, time, seed)?;
    let truth = model.ground_truth_return(time.t_end())?;
    Ok((Epoch::single(*time, "E01", samples)?, truth))
}

fn render(model: &TepModel, time: &TimeAxis, seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    if !(time.t_start() < 0.0 && time.t_end() > 0.0) {
        return Err(Error::InvalidTimeAxis(
            "synthetic epochs must straddle the pulse".into(),
        ));
    }
    let n = time.n_samples();
    let mut x: Vec<f64> = (0..n).map(|i| model.response(time.time(i))).collect();
    let sigma = model.noise_sigma;
    match model.noise_model {
        NoiseModel::Deadband => {
            for v in &mut x {
                if v.abs() < sigma {
                    *v = 0.0;
                }
            }
        }
        _ if sigma == 0.0 => {}
        NoiseModel::White => {
            let mut rng = seed::rng(seed);
            let normal = Normal::new(0.0, sigma).expect("valid sigma");
            for v in &mut x {
                *v += normal.sample(&mut rng);
            }
        }
        NoiseModel::Ar1 { rho } => {
            let mut rng = seed::rng(seed);
            let normal = Normal::new(0.0, sigma).expect("valid sigma");
            let innov = (1.0 - rho * rho).sqrt();
            let mut state = normal.sample(&mut rng);
            for v in &mut x {
                *v += state;
                state = rho * state + innov * normal.sample(&mut rng);
            }
        }
    }
    Ok(x)
}

/// One group of simulated subjects sharing a base response model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub group: String,
    pub n_subjects: usize,
    pub n_trials: usize,
    pub n_channels: usize,
    /// Relative std of the per-subject amplitude and decay-constant factors.
    #[serde(default)]
    pub jitter: f64,
    pub base: TepModel,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 || self.n_trials == 0 || self.n_channels == 0 {
            return Err(Error::InvalidConfig(format!(
                "group {}: subject, trial and channel counts must be >= 1",
                self.group
            )));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "group {}: jitter must be >= 0",
                self.group
            )));
        }
        if self.group.is_empty() || self.group.contains([',', '\n', '"']) {
            return Err(Error::InvalidConfig(format!(
                "group label {:?} is not a plain token",
                self.group
            )));
        }
        self.base.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSubject {
    pub subject_id: String,
    pub group: String,
    pub model: TepModel,
    pub ground_truth_return: f64,
    pub trials: Vec<Epoch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSubject {
    pub subject_id: String,
    pub group: String,
    pub model: TepModel,
    pub ground_truth_return: f64,
    pub n_trials: usize,
    pub n_channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub subject_id: String,
    pub trial: usize,
    pub channel: String,
    pub noise_seed: u64,
}

/// Ground truth and labels for a generated cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub sampling_rate: f64,
    pub t_start: f64,
    pub n_samples: usize,
    pub subjects: Vec<ManifestSubject>,
    pub records: Vec<ManifestRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub time: TimeAxis,
    pub subjects: Vec<SimSubject>,
    pub manifest: Manifest,
}

impl Cohort {
    pub fn to_subject_trials(&self) -> Vec<SubjectTrials> {
        self.subjects
            .iter()
            .map(|s| SubjectTrials {
                subject_id: s.subject_id.clone(),
                group: s.group.clone(),
                epochs: s.trials.clone(),
            })
            .collect()
    }
}

fn jittered(base: &TepModel, jitter: f64, rng: &mut impl Rng) -> TepModel {
    let mut model = base.clone();
    if jitter > 0.0 {
        let normal = Normal::new(0.0, jitter).expect("valid jitter");
        for c in &mut model.components {
            c.amplitude *= (1.0 + normal.sample(rng)).max(0.1);
            c.decay_tau *= (1.0 + normal.sample(rng)).max(0.1);
        }
    }
    model
}

/// Generate all groups on the common `time` axis.
///
/// Subject `s` (numbered across groups) draws its jittered model from stream
/// `[0, s]` under `seed`; channel `c` of trial `k` draws noise from stream
/// `[1, s, k, c]`.
pub fn gen_cohort(specs: &[CohortSpec], time: &TimeAxis, seed: u64) -> Result<Cohort> {
    if specs.is_empty() {
        return Err(Error::InvalidConfig("no cohort groups given".into()));
    }
    let mut subjects = Vec::new();
    let mut manifest = Manifest {
        seed,
        sampling_rate: time.sampling_rate(),
        t_start: time.t_start(),
        n_samples: time.n_samples(),
        subjects: Vec::new(),
        records: Vec::new(),
    };
    let mut s_index = 0u64;
    for spec in specs {
        spec.validate()?;
        let labels: Vec<String> = (1..=spec.n_channels).map(|c| format!("E{c:02}")).collect();
        for _ in 0..spec.n_subjects {
            s_index += 1;
            let subject_id = format!("sub-{s_index:03}");
            let mut rng = seed::rng(seed::derive_path(seed, &[0, s_index]));
            let model = jittered(&spec.base, spec.jitter, &mut rng);
            let truth = model.ground_truth_return(time.t_end())?;
            let mut trials = Vec::with_capacity(spec.n_trials);
            for k in 0..spec.n_trials {
                let mut data = Vec::with_capacity(spec.n_channels);
                for (c, label) in labels.iter().enumerate() {
                    let noise_seed = seed::derive_path(seed, &[1, s_index, k as u64, c as u64]);
                    data.push(render(&model, time, noise_seed)?);
                    manifest.records.push(ManifestRecord {
                        subject_id: subject_id.clone(),
                        trial: k,
                        channel: label.clone(),
                        noise_seed,
                    });
                }
                trials.push(Epoch::new(*time, labels.clone(), data, None)?);
            }
            manifest.subjects.push(ManifestSubject {
                subject_id: subject_id.clone(),
                group: spec.group.clone(),
                model: model.clone(),
                ground_truth_return: truth,
                n_trials: spec.n_trials,
                n_channels: spec.n_channels,
            });
            subjects.push(SimSubject {
                subject_id,
                group: spec.group.clone(),
                model,
                ground_truth_return: truth,
                trials,
            });
        }
    }
    Ok(Cohort {
        time: *time,
        subjects,
        manifest,
    })
}

/// The two benchmark groups: healthy-like responses decaying with
/// `tau = 0.08 s` and patient-like with `tau = 0.20 s`, both 10 µV at 20 Hz
/// over 1 µV white noise, 17 subjects each, 10 % per-subject jitter.
pub fn benchmark_specs(n_trials: usize, n_channels: usize) -> Vec<CohortSpec> {
    let group = |label: &str, tau: f64| CohortSpec {
        group: label.to_string(),
        n_subjects: 17,
        n_trials,
        n_channels,
        jitter: 0.1,
        base: TepModel {
            components: vec![Component {
                amplitude: 10.0,
                decay_tau: tau,
                frequency: 20.0,
                phase: 0.0,
            }],
            noise_sigma: 1.0,
            noise_model: NoiseModel::White,
        },
    };
    vec![group("AD", 0.20), group("HC", 0.08)]
}

/// Standard synthetic epoch: -500 ms to +1000 ms at 1000 Hz.
pub fn standard_axis() -> TimeAxis {
    TimeAxis::around_pulse(1000.0, 0.5, 1.0).expect("valid axis")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(amplitude: f64, tau: f64, sigma: f64, noise: NoiseModel) -> TepModel {
        TepModel {
            components: vec![Component {
                amplitude,
                decay_tau: tau,
                frequency: 20.0,
                phase: 0.3,
            }],
            noise_sigma: sigma,
            noise_model: noise,
        }
    }

    #[test]
    fn noiseless_trial_is_exact_damped_sine() {
        let t = standard_axis();
        let m = one(10.0, 0.1, 0.0, NoiseModel::White);
        let x = render(&m, &t, 1).unwrap();
        for i in 0..t.n_samples() {
            let ti = t.time(i);
            if ti <= 0.0 {
                assert_eq!(x[i], 0.0);
            } else {
                let want = 10.0 * (-ti / 0.1).exp() * (2.0 * PI * 20.0 * ti + 0.3).sin();
                assert_eq!(x[i], want);
            }
        }
        // zero noise level leaves no ground truth to resolve
        assert!(matches!(
            gen_trial(&m, &t, 1),
            Err(Error::UnresolvableGroundTruth { .. })
        ));
    }

    #[test]
    fn ground_truth_closed_form() {
        let sigma = 10.0 * (-2.0f64).exp();
        let m = one(10.0, 0.1, sigma, NoiseModel::White);
        let truth = m.ground_truth_return(1.0).unwrap();
        let closed = 0.1 * (10.0 / sigma).ln();
        assert!((closed - 0.2).abs() < 1e-12);
        assert!((truth - closed).abs() < 1e-4);
    }

    #[test]
    fn ground_truth_unresolvable() {
        let m = one(10.0, 2.0, 1.0, NoiseModel::White);
        assert!(m.ground_truth_return(1.0).is_err());
    }

    #[test]
    fn same_seed_same_trial() {
        let t = standard_axis();
        for noise in [NoiseModel::White, NoiseModel::Ar1 { rho: 0.8 }] {
            let m = one(10.0, 0.1, 1.0, noise);
            let (a, ta) = gen_trial(&m, &t, 42).unwrap();
            let (b, tb) = gen_trial(&m, &t, 42).unwrap();
            assert_eq!(a, b);
            assert_eq!(ta, tb);
            let (c, _) = gen_trial(&m, &t, 43).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn ar1_noise_has_target_variance() {
        let t = TimeAxis::new(1000.0, -50.0, 100_001).unwrap();
        let m = TepModel {
            components: vec![Component {
                amplitude: 0.0,
                decay_tau: 0.1,
                frequency: 10.0,
                phase: 0.0,
            }],
            noise_sigma: 2.0,
            noise_model: NoiseModel::Ar1 { rho: 0.9 },
        };
        let x = render(&m, &t, 5).unwrap();
        let (_, sd) = crate::signal::mean_std(&x).unwrap();
        assert!((sd - 2.0).abs() < 0.15, "sd {sd}");
        let lag1: f64 = x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (x.len() - 1) as f64;
        assert!((lag1 / (sd * sd) - 0.9).abs() < 0.03);
    }

    #[test]
    fn deadband_zeroes_small_samples() {
        let t = standard_axis();
        let m = one(10.0, 0.1, 1.0, NoiseModel::Deadband);
        let (e, truth) = gen_trial(&m, &t, 0).unwrap();
        assert!(e.data[0].iter().all(|v| *v == 0.0 || v.abs() >= 1.0));
        let last = e.data[0].iter().rposition(|v| *v != 0.0).unwrap();
        assert!(t.time(last) <= truth);
    }

    #[test]
    fn model_validation() {
        let mut m = one(10.0, 0.1, 1.0, NoiseModel::White);
        m.components[0].frequency = 120.0;
        assert!(m.validate().is_err());
        let m = one(10.0, -0.1, 1.0, NoiseModel::White);
        assert!(m.validate().is_err());
        let m = one(10.0, 0.1, 1.0, NoiseModel::Ar1 { rho: 1.0 });
        assert!(m.validate().is_err());
    }

    #[test]
    fn cohort_counts() {
        let spec = CohortSpec {
            group: "AD".into(),
            n_subjects: 2,
            n_trials: 3,
            n_channels: 2,
            jitter: 0.2,
            base: one(10.0, 0.1, 1.0, NoiseModel::White),
        };
        let c = gen_cohort(&[spec], &standard_axis(), 9).unwrap();
        assert_eq!(c.manifest.records.len(), 12);
        assert_eq!(c.subjects.len(), 2);
        assert_eq!(c.subjects[0].trials.len(), 3);
        assert_eq!(c.subjects[0].trials[0].n_channels(), 2);
    }

    #[test]
    fn zero_jitter_shares_response() {
        let spec = CohortSpec {
            group: "HC".into(),
            n_subjects: 3,
            n_trials: 1,
            n_channels: 1,
            jitter: 0.0,
            base: one(10.0, 0.1, 1.0, NoiseModel::Deadband),
        };
        let c = gen_cohort(&[spec], &standard_axis(), 9).unwrap();
        let first = &c.subjects[0];
        for s in &c.subjects[1..] {
            assert_eq!(s.model, first.model);
            assert_eq!(s.trials, first.trials);
        }
    }
}
