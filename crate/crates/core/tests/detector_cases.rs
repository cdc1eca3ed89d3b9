//! Hand-traced detector cases and a straight-line reference implementation of
//! the return-to-baseline algorithm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tepidx::detector::{detect_return_to_baseline, DetectorConfig};
use tepidx::metrics::compute_trial_metrics;
use tepidx::signal::rectify_normalize;
use tepidx::synth::{gen_trial, standard_axis, Component, NoiseModel, TepModel};
use tepidx::TimeAxis;

fn axis() -> TimeAxis {
    standard_axis()
}

/// Sample index of time `t` on the standard axis.
fn idx(t_ms: i64) -> usize {
    (t_ms + 500) as usize
}

/// The whole detector written out with plain loops, O(n * w), no shared helpers.
fn reference_tedi(tep: &[f64], fs: f64, t0: f64, window_s: f64) -> (f64, bool, bool) {
    let n = tep.len();
    let w = (window_s * fs).round() as usize;
    let left = w / 2;
    let right = w - 1 - left;
    let time = |i: usize| t0 + i as f64 / fs;
    let mut energy = vec![0.0; n];
    for i in 0..n {
        let lo = i.saturating_sub(left);
        let hi = (i + right).min(n - 1);
        let mut s = 0.0;
        for x in &tep[lo..=hi] {
            s += x * x;
        }
        energy[i] = s / (hi - lo + 1) as f64;
    }
    let base: Vec<f64> = (0..n)
        .filter(|&i| time(i) >= -0.5 - 1e-9 && time(i) <= -0.2 + 1e-9)
        .map(|i| energy[i])
        .collect();
    let m = base.iter().sum::<f64>() / base.len() as f64;
    let sd = (base.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / base.len() as f64).sqrt();
    let above = |thr: f64| -> Vec<f64> {
        (0..n)
            .filter(|&i| time(i) >= -1e-9 && energy[i] > thr)
            .map(time)
            .collect()
    };
    let mut fallback = false;
    let mut c = above(m + sd);
    if c.len() < 5 {
        fallback = true;
        c = above(m);
        if c.len() < 5 {
            return (0.080, true, true);
        }
    }
    c.push(time(n - 1));
    let gaps: Vec<f64> = c.windows(2).map(|p| p[1] - p[0]).collect();
    let mut max_gap = 0.0;
    for g in &gaps {
        if *g > max_gap {
            max_gap = *g;
        }
    }
    for (j, g) in gaps.iter().enumerate() {
        if *g > 0.75 * max_gap {
            return (c[j].clamp(0.080, 0.850), fallback, false);
        }
    }
    unreachable!("the largest gap always qualifies")
}

#[test]
fn rectangular_burst_returns_at_burst_end_plus_half_window() {
    let t = axis();
    let mut x = vec![0.0; t.n_samples()];
    for v in &mut x[idx(0)..=idx(100)] {
        *v = 1.0;
    }
    let r = detect_return_to_baseline(&x, &t, None, &DetectorConfig::default()).unwrap();
    // the centered 20 ms window still overlaps the burst 10 samples after it ends
    assert_eq!(r.tedi, t.time(idx(110)));
    assert_eq!(r.crossings.len(), 111);
    assert_eq!(r.threshold_used, 0.0);
    assert!(!r.fallback_applied);
    assert!(!r.no_response_flag);
    assert_eq!(reference_tedi(&x, 1000.0, -0.5, 0.02), (r.tedi, false, false));
}

#[test]
fn two_bursts_settle_after_the_first() {
    let t = axis();
    let mut x = vec![0.0; t.n_samples()];
    for v in &mut x[idx(0)..=idx(100)] {
        *v = 1.0;
    }
    for v in &mut x[idx(700)..=idx(750)] {
        *v = 1.0;
    }
    let r = detect_return_to_baseline(&x, &t, None, &DetectorConfig::default()).unwrap();
    // crossings: 0..=110 ms and 691..=760 ms; gaps 581 ms and a 240 ms terminal gap
    let inter = t.time(idx(691)) - t.time(idx(110));
    let terminal = t.t_end() - t.time(idx(760));
    assert!(r.gaps.contains(&inter));
    assert_eq!(*r.gaps.last().unwrap(), terminal);
    assert!((inter - 0.581).abs() < 1e-12 && (terminal - 0.240).abs() < 1e-12);
    assert_eq!(r.tedi, t.time(idx(110)));
    assert!(!r.fallback_applied && !r.no_response_flag);
    assert_eq!(reference_tedi(&x, 1000.0, -0.5, 0.02), (r.tedi, false, false));
}

#[test]
fn all_quiet_trial_falls_back_then_flags_no_response() {
    let t = axis();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut x = vec![0.0; t.n_samples()];
    // activity confined to the baseline; nothing after the pulse
    for v in &mut x[idx(-500)..=idx(-200)] {
        *v = rng.random_range(0.0..1.0);
    }
    let r = detect_return_to_baseline(&x, &t, None, &DetectorConfig::default()).unwrap();
    assert_eq!(r.tedi, 0.080);
    assert!(r.fallback_applied);
    assert!(r.no_response_flag);
    assert!(r.crossings.is_empty());
    assert_eq!(reference_tedi(&x, 1000.0, -0.5, 0.02), (0.080, true, true));
}

#[test]
fn random_trials_agree_with_reference() {
    let t = axis();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..200 {
        let tau = rng.random_range(0.02..0.4);
        let raw: Vec<f64> = (0..t.n_samples())
            .map(|i| {
                let ti = t.time(i);
                let resp = if ti > 0.0 { 8.0 * (-ti / tau).exp() * (2.0 * std::f64::consts::PI * 18.0 * ti).sin() } else { 0.0 };
                resp + rng.random_range(-1.0..1.0)
            })
            .collect();
        let tep = rectify_normalize(&raw, None, &t).unwrap();
        let w = [0.005, 0.010, 0.020, 0.030, 0.040][k % 5];
        let r = detect_return_to_baseline(&tep, &t, None, &DetectorConfig::with_window(w)).unwrap();
        let (tedi, fb, nr) = reference_tedi(&tep, 1000.0, -0.5, w);
        assert_eq!((r.tedi, r.fallback_applied, r.no_response_flag), (tedi, fb, nr), "trial {k}");
    }
}

#[test]
fn trial_metrics_match_reference_bit_for_bit() {
    let t = axis();
    let model = TepModel {
        components: vec![Component {
            amplitude: 12.0,
            decay_tau: 0.15,
            frequency: 22.0,
            phase: 0.4,
        }],
        noise_sigma: 1.0,
        noise_model: NoiseModel::White,
    };
    for seed in 0..20 {
        let (e, _) = gen_trial(&model, &t, seed).unwrap();
        let m = compute_trial_metrics(&e.data[0], &t, None, &DetectorConfig::default(), 0, "E01").unwrap();
        let tep = rectify_normalize(&e.data[0], None, &t).unwrap();
        let (tedi, _, _) = reference_tedi(&tep, 1000.0, -0.5, 0.02);
        assert_eq!(m.tedi, tedi);
        // peak over (0, tedi], then straight-line EDI and TEI
        let last = idx((tedi * 1000.0).round() as i64);
        let mut p = idx(1);
        for i in idx(1)..=last {
            if tep[i] > tep[p] {
                p = i;
            }
        }
        let run = tedi - t.time(p);
        let edi = if run <= 0.0 { std::f64::consts::FRAC_PI_2 } else { (tep[p] / run).atan() };
        let mut area = 0.0;
        for i in idx(1)..=last {
            area += 0.5 * (tep[i - 1] + tep[i]) * 1.0;
        }
        assert_eq!(m.edi, edi, "seed {seed}");
        assert_eq!(m.tei, area * t.dt(), "seed {seed}");
    }
}

#[test]
fn noiseless_returns_track_ground_truth() {
    // deadband trials: no additive noise, values below sigma recorded as zero
    let t = axis();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = DetectorConfig::default();
    let mut hits = 0;
    let n = 100;
    for k in 0..n {
        let tau: f64 = rng.random_range(0.1..0.3);
        let truth: f64 = rng.random_range(0.12..0.8);
        let model = TepModel {
            components: vec![Component {
                amplitude: (truth / tau).exp(),
                decay_tau: tau,
                frequency: rng.random_range(15.0..40.0),
                phase: 0.0,
            }],
            noise_sigma: 1.0,
            noise_model: NoiseModel::Deadband,
        };
        let (e, gt) = gen_trial(&model, &t, k).unwrap();
        assert!((gt - truth).abs() < 1e-4);
        let m = compute_trial_metrics(&e.data[0], &t, None, &cfg, 0, "E01").unwrap();
        if (m.tedi - gt).abs() <= cfg.window_len + 0.005 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/{n}");
}

/// TEP burst over `[a, b]` ms whose 20 ms energy (10 samples left, 9 right of
/// centre) is nonzero over exactly `[a - 9, b + 10]` ms.
fn energy_burst(x: &mut [f64], from_ms: i64, to_ms: i64) {
    for v in &mut x[idx(from_ms + 9)..=idx(to_ms - 10)] {
        *v = 1.0;
    }
}

#[test]
fn energy_burst_zero_to_hundred_ms() {
    let t = axis();
    let mut x = vec![0.0; t.n_samples()];
    energy_burst(&mut x, 0, 100);
    let r = detect_return_to_baseline(&x, &t, None, &DetectorConfig::default()).unwrap();
    assert_eq!(r.crossings.first(), Some(&0.0));
    assert_eq!(r.tedi, t.time(idx(100)));
    assert!((r.tedi - 0.100).abs() < 1e-12);
    assert!(!r.fallback_applied && !r.no_response_flag);
}

#[test]
fn two_energy_bursts_give_hand_traced_gaps() {
    let t = axis();
    let mut x = vec![0.0; t.n_samples()];
    energy_burst(&mut x, 0, 100);
    energy_burst(&mut x, 700, 750);
    let r = detect_return_to_baseline(&x, &t, None, &DetectorConfig::default()).unwrap();
    let big: Vec<f64> = r.gaps.iter().copied().filter(|g| *g > 0.002).collect();
    assert_eq!(big.len(), 2);
    assert!((big[0] - 0.600).abs() < 1e-12 && (big[1] - 0.250).abs() < 1e-12);
    assert!((r.tedi - 0.100).abs() < 1e-12);
    assert!(!r.fallback_applied && !r.no_response_flag);
}
