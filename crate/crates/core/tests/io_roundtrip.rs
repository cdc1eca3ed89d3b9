//! Write-then-read of every artifact reproduces the in-memory value.

use std::io::Cursor;

use proptest::prelude::*;
use tepidx::classifier::{loso_cv, ForestConfig};
use tepidx::io::{
    read_cv_report, read_detections, read_features, read_manifest, read_metrics, read_pulses,
    read_trials, write_cv_report, write_detections, write_features, write_manifest, write_metrics,
    write_pulses, write_trials, ArtifactHeader, DetectionRecord, MetricRecord, PulseRecord,
    SubjectRecord, TrialSet,
};
use tepidx::metrics::SubjectFeatures;
use tepidx::synth::{benchmark_specs, gen_cohort, standard_axis};
use tepidx::{Epoch, TimeAxis};

fn header() -> ArtifactHeader {
    ArtifactHeader::new("0123abcd", 42)
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e3..1e3f64,
        Just(0.0),
        Just(-0.0),
    ]
}

fn token() -> impl Strategy<Value = String> {
    "[A-Za-z0-9_-]{1,8}"
}

prop_compose! {
    fn metric_record()(
        subject_id in token(), group in token(), trial in any::<u64>(), channel in token(),
        tedi in finite(), edi in finite(), tei in finite(), no_response in any::<bool>(),
    ) -> MetricRecord {
        MetricRecord { subject_id, group, trial, channel, tedi, edi, tei, no_response }
    }
}

prop_compose! {
    fn detection_record()(
        subject_id in token(), group in token(), trial in any::<u64>(), channel in token(),
        window_ms in finite(), tedi in finite(), threshold_used in finite(),
        fallback_applied in any::<bool>(), no_response in any::<bool>(), n_crossings in 0usize..100_000,
    ) -> DetectionRecord {
        DetectionRecord {
            subject_id, group, trial, channel, window_ms, tedi, threshold_used,
            fallback_applied, no_response, n_crossings,
        }
    }
}

prop_compose! {
    fn features()(
        subject_id in token(), group in token(), f in [finite(), finite(), finite()],
        n_trials_used in 0usize..10_000, n_no_response in 0usize..10_000,
    ) -> SubjectFeatures {
        SubjectFeatures { subject_id, group, features: f, n_trials_used, n_no_response }
    }
}

prop_compose! {
    fn trial_set()(
        rate in prop::sample::select(vec![250.0, 500.0, 1000.0, 2000.0]),
        pre in 1usize..50,
        n in 2usize..40,
        n_subjects in 1usize..3,
        n_trials in 1usize..3,
        n_channels in 1usize..3,
    )(
        values in prop::collection::vec(finite(), n * n_subjects * n_trials * n_channels),
        rate in Just(rate), pre in Just(pre), n in Just(n),
        n_subjects in Just(n_subjects), n_trials in Just(n_trials), n_channels in Just(n_channels),
    ) -> TrialSet {
        let time = TimeAxis::new(rate, -(pre as f64) / rate, n).unwrap();
        let mut chunks = values.chunks(n);
        let subjects = (0..n_subjects)
            .map(|s| SubjectRecord {
                subject_id: format!("s{s}"),
                group: if s % 2 == 0 { "AD".into() } else { "HC".into() },
                trial_ids: (0..n_trials as u64).map(|k| 3 * k + 1).collect(),
                epochs: (0..n_trials)
                    .map(|_| {
                        let channels = (0..n_channels).map(|c| format!("C{c}")).collect();
                        let data = (0..n_channels).map(|_| chunks.next().unwrap().to_vec()).collect();
                        Epoch::new(time, channels, data, None).unwrap()
                    })
                    .collect(),
            })
            .collect();
        TrialSet { subjects }
    }
}

proptest! {
    #[test]
    fn metrics_round_trip(rows in prop::collection::vec(metric_record(), 0..20)) {
        let mut buf = Vec::new();
        write_metrics(&mut buf, &header(), &rows).unwrap();
        let (h, back) = read_metrics(Cursor::new(buf), "m.csv").unwrap();
        prop_assert_eq!(h, Some(header()));
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn detections_round_trip(rows in prop::collection::vec(detection_record(), 0..20)) {
        let mut buf = Vec::new();
        write_detections(&mut buf, &header(), &rows).unwrap();
        let (h, back) = read_detections(Cursor::new(buf), "d.csv").unwrap();
        prop_assert_eq!(h, Some(header()));
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn features_round_trip(rows in prop::collection::vec(features(), 0..20)) {
        let mut buf = Vec::new();
        write_features(&mut buf, &header(), &rows).unwrap();
        let (_, back) = read_features(Cursor::new(buf), "f.csv").unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn pulses_round_trip(rows in prop::collection::vec((token(), 0.0..1e4f64), 0..20)) {
        let rows: Vec<PulseRecord> =
            rows.into_iter().map(|(subject_id, time_s)| PulseRecord { subject_id, time_s }).collect();
        let mut buf = Vec::new();
        write_pulses(&mut buf, &header(), &rows).unwrap();
        let (_, back) = read_pulses(Cursor::new(buf), "p.csv").unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn trials_round_trip(set in trial_set()) {
        let mut buf = Vec::new();
        write_trials(&mut buf, &set, Some(&header())).unwrap();
        let (back, report) = read_trials(Cursor::new(buf), "t.csv").unwrap();
        prop_assert_eq!(report.header, Some(header()));
        prop_assert!(report.warnings.is_empty());
        prop_assert_eq!(report.n_series, set.n_series());
        prop_assert_eq!(back, set);
    }
}

#[test]
fn generated_cohort_round_trips_and_matches_manifest() {
    let mut specs = benchmark_specs(3, 2);
    for s in &mut specs {
        s.n_subjects = 2;
    }
    let cohort = gen_cohort(&specs, &standard_axis(), 5).unwrap();
    let set = TrialSet::from_cohort(&cohort);
    let mut buf = Vec::new();
    write_trials(&mut buf, &set, Some(&header())).unwrap();
    let (back, report) = read_trials(Cursor::new(buf), "cohort.csv").unwrap();
    assert_eq!(back, set);
    assert!(report.warnings.is_empty());
    assert_eq!(report.n_subjects, cohort.manifest.subjects.len());
    assert_eq!(report.n_series, cohort.manifest.records.len());
    assert_eq!(report.n_series, 4 * 3 * 2);
    assert_eq!(report.n_rows, (report.n_series * standard_axis().n_samples()) as u64);

    let mut js = Vec::new();
    write_manifest(&mut js, &header(), &cohort.manifest).unwrap();
    let (h, manifest) = read_manifest(Cursor::new(js)).unwrap();
    assert_eq!(h, header());
    assert_eq!(manifest, cohort.manifest);
}

#[test]
fn cv_report_round_trips() {
    let data: Vec<SubjectFeatures> = (0..8)
        .map(|i| SubjectFeatures {
            subject_id: format!("s{i}"),
            group: if i < 4 { "AD".into() } else { "HC".into() },
            features: [0.1 * i as f64 + 1.0 / 3.0, (i as f64).sqrt(), 1e-17 * i as f64],
            n_trials_used: 3,
            n_no_response: 0,
        })
        .collect();
    let cfg = ForestConfig { n_trees: 10, ..ForestConfig::default() };
    let report = loso_cv(&data, &cfg, 3, "AD").unwrap();
    let mut buf = Vec::new();
    write_cv_report(&mut buf, &header(), &report).unwrap();
    let (h, back) = read_cv_report(Cursor::new(buf)).unwrap();
    assert_eq!(h, header());
    assert_eq!(back, report);
}
