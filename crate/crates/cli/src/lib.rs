//! Command-line front end: one subcommand per analysis step, plus `pipeline`
//! which chains them in memory.
//!
//! Artifacts written per step:
//!
//! | step         | reads                                | writes                              |
//! |--------------|--------------------------------------|-------------------------------------|
//! | `simulate`   | config                               | `trials.csv`, `manifest.json`       |
//! | `preprocess` | trial table (+ `--pulses`)           | `preprocessed.csv`                  |
//! | `detect`     | preprocessed table                   | `detections.csv`                    |
//! | `metrics`    | preprocessed table + `--detections`  | `metrics.csv`                       |
//! | `classify`   | `metrics.csv` or `features.csv`      | `features.csv`, `cv_report.json`    |
//! | `sweep`      | preprocessed table (or simulates)    | `sweep.csv`, `sweep_summary.csv`    |
//! | `pipeline`   | raw trial table (or simulates)       | all of the above except sweep files |
//!
//! `pipeline` skips `preprocessed.csv` when the chain is disabled and no pulses
//! are given, since the output would repeat the input.
//!
//! Each invocation also writes `provenance_<step>.json` with a timestamp.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use tepidx::classifier::{loso_cv, window_sweep, CvReport, SweepEntry};
use tepidx::detector::{detect_return_to_baseline, DetectorConfig};
use tepidx::io::{
    load_trials, read_detections, read_features, read_metrics, read_pulses, write_cv_report,
    write_detections, write_features, write_manifest, write_metrics, write_sweep,
    write_sweep_summary, write_trials, ArtifactHeader, DetectionRecord, MetricRecord, PulseRecord,
    RunConfig, SubjectRecord, TrialSet,
};
use tepidx::metrics::{aggregate_indexes, compute_edi, compute_tei, SubjectFeatures};
use tepidx::preprocess::{preprocess_pipeline, RawInput, Recording};
use tepidx::signal::{rectify_normalize, response_onset};
use tepidx::synth::{gen_cohort, Cohort};
use tepidx::{Error, TimeAxis};

#[derive(Debug, Parser)]
#[command(name = "tepidx", version, about = "Energy-based perturbation indexes for TMS-evoked EEG")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Input artifact (trial table, or metrics/features table for `classify`).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Sliding-window length in ms; for `sweep`, restricts the sweep to it.
    #[arg(long, global = true)]
    pub window_ms: Option<f64>,
    /// Number of cross-validation repeats.
    #[arg(long, global = true)]
    pub repeats: Option<usize>,
    /// Pulse table for continuous recordings (`preprocess`, `pipeline`).
    #[arg(long, global = true)]
    pub pulses: Option<PathBuf>,
    /// Detections table (`metrics`).
    #[arg(long, global = true)]
    pub detections: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort from the `[simulate]` section.
    Simulate,
    /// Excise, decimate, filter and re-reference a trial table.
    Preprocess,
    /// Return-to-baseline detection per trial and channel.
    Detect,
    /// EDI and TEI from a trial table and its detections.
    Metrics,
    /// Per-subject features and leave-one-subject-out cross-validation.
    Classify,
    /// Cross-validation across sliding-window lengths.
    Sweep,
    /// All steps from raw trials (or simulation) to the CV report.
    Pipeline,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Preprocess => "preprocess",
            Command::Detect => "detect",
            Command::Metrics => "metrics",
            Command::Classify => "classify",
            Command::Sweep => "sweep",
            Command::Pipeline => "pipeline",
        }
    }
}

/// Machine-readable failure class; each maps to its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Internal,
    Config,
    MissingInput,
    Parse,
    Degenerate,
    Io,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Internal => 1,
            Category::Config => 3,
            Category::MissingInput => 4,
            Category::Parse => 5,
            Category::Degenerate => 6,
            Category::Io => 7,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub category: Category,
    pub message: String,
}

impl CliError {
    fn new(category: Category, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }

    fn missing(what: &str) -> Self {
        Self::new(Category::MissingInput, format!("missing required input: {what}"))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let category = match &e {
            Error::InvalidConfig(_)
            | Error::InvalidWindow { .. }
            | Error::InvalidTimeAxis(_)
            | Error::NonIntegerRatio { .. } => Category::Config,
            Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => Category::MissingInput,
            Error::Io(_) => Category::Io,
            Error::Parse { .. }
            | Error::NonMonotoneTime { .. }
            | Error::NonUniformSampling { .. }
            | Error::InvalidEpoch(_)
            | Error::TooFewSamples { .. }
            | Error::Json(_) => Category::Parse,
            Error::DegenerateFlatTrial
            | Error::InsufficientFlank(_)
            | Error::SingleChannel(_)
            | Error::NoPulses
            | Error::SingleClass(_)
            | Error::InsufficientData(_)
            | Error::UnresolvableGroundTruth { .. } => Category::Degenerate,
        };
        Self::new(category, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Run with process arguments and return the exit code. Errors are reported
/// as one JSON object on stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e).expect("error serializes"));
            e.category.exit_code()
        }
    }
}

/// Resolved settings for one invocation.
pub struct Context {
    pub config: RunConfig,
    pub header: ArtifactHeader,
    pub output: PathBuf,
}

pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            if !p.exists() {
                return Err(CliError::new(
                    Category::MissingInput,
                    format!("config file {} not found", p.display()),
                ));
            }
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.window_ms {
        cfg.detector.window_len = w / 1000.0;
        if cli.command == Command::Sweep {
            cfg.sweep.windows_ms = vec![w];
        }
    }
    if let Some(r) = cli.repeats {
        cfg.cv.n_repeats = r;
    }
    if cli.input.is_some() {
        cfg.paths.input = cli.input.clone();
    }
    if cli.output.is_some() {
        cfg.paths.output = cli.output.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let config = resolve_config(cli)?;
    let output = config
        .paths
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("tepidx-out"));
    std::fs::create_dir_all(&output).map_err(|e| {
        CliError::new(
            Category::Io,
            format!("cannot create output directory {}: {e}", output.display()),
        )
    })?;
    let ctx = Context {
        header: ArtifactHeader::new(&config.config_hash(), config.seed),
        config,
        output,
    };
    let input = ctx.config.paths.input.clone();
    let written = match cli.command {
        Command::Simulate => cmd_simulate(&ctx)?,
        Command::Preprocess => {
            let input = input.ok_or_else(|| CliError::missing("--input trial table"))?;
            cmd_preprocess(&ctx, &input, cli.pulses.as_deref())?
        }
        Command::Detect => {
            let input = input.ok_or_else(|| CliError::missing("--input trial table"))?;
            cmd_detect(&ctx, &input)?
        }
        Command::Metrics => {
            let input = input.ok_or_else(|| CliError::missing("--input trial table"))?;
            let det = cli
                .detections
                .as_deref()
                .ok_or_else(|| CliError::missing("--detections table"))?;
            cmd_metrics(&ctx, &input, det)?
        }
        Command::Classify => {
            let input = input.ok_or_else(|| CliError::missing("--input metrics or features table"))?;
            cmd_classify(&ctx, &input)?
        }
        Command::Sweep => cmd_sweep(&ctx, input.as_deref())?,
        Command::Pipeline => cmd_pipeline(&ctx, input.as_deref(), cli.pulses.as_deref())?,
    };
    write_provenance(&ctx, cli.command, &written)
}

#[derive(Serialize)]
struct Provenance<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: &'a str,
    seed: u64,
    timestamp_unix: u64,
    input: Option<&'a Path>,
    outputs: Vec<String>,
}

fn write_provenance(ctx: &Context, command: Command, written: &[PathBuf]) -> CliResult<()> {
    let p = Provenance {
        command: command.name(),
        version: &ctx.header.version,
        config_hash: &ctx.header.config_hash,
        seed: ctx.header.seed,
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        input: ctx.config.paths.input.as_deref(),
        outputs: written
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
    };
    let path = ctx.output.join(format!("provenance_{}.json", command.name()));
    let text = serde_json::to_string_pretty(&p).expect("provenance serializes");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| {
        let category = if e.kind() == std::io::ErrorKind::NotFound {
            Category::MissingInput
        } else {
            Category::Io
        };
        CliError::new(category, format!("{}: {e}", path.display()))
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn name_of(path: &Path) -> String {
    path.display().to_string()
}

// ---------------------------------------------------------------------------
// In-memory stages shared by the subcommands and `pipeline`.

pub fn simulate_stage(cfg: &RunConfig) -> CliResult<Cohort> {
    let s = &cfg.simulate;
    if s.groups.is_empty() {
        return Err(CliError::new(Category::Config, "simulate.groups is empty"));
    }
    let axis = TimeAxis::around_pulse(s.sampling_rate, s.epoch_pre, s.epoch_post)?;
    Ok(gen_cohort(&s.groups, &axis, cfg.simulate_seed())?)
}

/// Run the preprocessing chain per subject. With pulses, each subject's single
/// trial is treated as a continuous recording and cut into epochs.
pub fn preprocess_stage(set: &TrialSet, pulses: Option<&[PulseRecord]>, cfg: &RunConfig) -> CliResult<TrialSet> {
    let pcfg = &cfg.preprocess;
    if !pcfg.enabled && pulses.is_none() {
        log::info!("preprocessing disabled; trials passed through");
        return Ok(set.clone());
    }
    let mut out = TrialSet::default();
    for s in &set.subjects {
        let (input, ids_from_input) = match pulses {
            Some(p) => {
                if s.epochs.len() != 1 {
                    return Err(CliError::new(
                        Category::Parse,
                        format!(
                            "subject {}: continuous input needs exactly one trial, found {}",
                            s.subject_id,
                            s.epochs.len()
                        ),
                    ));
                }
                let e = &s.epochs[0];
                let times: Vec<f64> = p
                    .iter()
                    .filter(|r| r.subject_id == s.subject_id)
                    .map(|r| r.time_s)
                    .collect();
                let recording = Recording {
                    time: e.time,
                    channels: e.channels.clone(),
                    data: e.data.clone(),
                };
                (
                    RawInput::Continuous {
                        recording,
                        pulse_times: times,
                    },
                    false,
                )
            }
            None => (RawInput::Epochs(s.epochs.clone()), true),
        };
        let done = if pcfg.enabled {
            preprocess_pipeline(input, pcfg)?
        } else {
            segment_only(input, pcfg)?
        };
        for p in &done.provenance {
            log::info!("subject {} trial {}: {:?}", s.subject_id, p.trial, p.stages);
        }
        let trial_ids = if ids_from_input {
            s.trial_ids.clone()
        } else {
            (0..done.epochs.len() as u64).collect()
        };
        out.subjects.push(SubjectRecord {
            subject_id: s.subject_id.clone(),
            group: s.group.clone(),
            trial_ids,
            epochs: done.epochs,
        });
    }
    Ok(out)
}

fn segment_only(input: RawInput, cfg: &tepidx::preprocess::PreprocessConfig) -> CliResult<tepidx::preprocess::Preprocessed> {
    let RawInput::Continuous {
        recording,
        pulse_times,
    } = input
    else {
        unreachable!("segment_only is only called with continuous input");
    };
    let seg = tepidx::preprocess::segment_epochs(&recording, &pulse_times, cfg)?;
    Ok(tepidx::preprocess::Preprocessed {
        epochs: seg.epochs.into_iter().map(|(_, e)| e).collect(),
        provenance: Vec::new(),
        skipped: seg.skipped,
    })
}

/// Mark epochs read back from disk with the excision the chain applied, so
/// the response onset matches the in-memory pipeline.
pub fn with_excision(mut set: TrialSet, cfg: &RunConfig) -> TrialSet {
    let excised = cfg.preprocess.enabled.then_some(cfg.preprocess.excise_window);
    for s in &mut set.subjects {
        for e in &mut s.epochs {
            e.excised = excised;
        }
    }
    set
}

fn window_ms(det: &DetectorConfig) -> f64 {
    (det.window_len * 1e6).round() / 1e3
}

/// Detection for every channel-trial; flat ones are skipped with a warning.
pub fn detect_stage(set: &TrialSet, det: &DetectorConfig) -> CliResult<Vec<DetectionRecord>> {
    let mut out = Vec::new();
    for s in &set.subjects {
        for (id, e) in s.trial_ids.iter().zip(&s.epochs) {
            for (ch, row) in e.channels.iter().zip(&e.data) {
                let tep = match rectify_normalize(row, e.excised, &e.time) {
                    Ok(t) => t,
                    Err(Error::DegenerateFlatTrial) => {
                        log::warn!("subject {} trial {id} channel {ch}: flat, skipped", s.subject_id);
                        continue;
                    }
                    Err(other) => return Err(other.into()),
                };
                let d = detect_return_to_baseline(&tep, &e.time, e.excised, det)?;
                out.push(DetectionRecord {
                    subject_id: s.subject_id.clone(),
                    group: s.group.clone(),
                    trial: *id,
                    channel: ch.clone(),
                    window_ms: window_ms(det),
                    tedi: d.tedi,
                    threshold_used: d.threshold_used,
                    fallback_applied: d.fallback_applied,
                    no_response: d.no_response_flag,
                    n_crossings: d.crossings.len(),
                });
            }
        }
    }
    Ok(out)
}

/// EDI and TEI for each detection, using the matching trial samples.
pub fn metrics_stage(set: &TrialSet, detections: &[DetectionRecord]) -> CliResult<Vec<MetricRecord>> {
    let mut index: HashMap<(&str, u64), &tepidx::Epoch> = HashMap::new();
    for s in &set.subjects {
        for (id, e) in s.trial_ids.iter().zip(&s.epochs) {
            index.insert((s.subject_id.as_str(), *id), e);
        }
    }
    detections
        .iter()
        .map(|d| {
            let unknown = || {
                CliError::new(
                    Category::Parse,
                    format!(
                        "detection for subject {} trial {} channel {} has no matching trial data",
                        d.subject_id, d.trial, d.channel
                    ),
                )
            };
            let e = index.get(&(d.subject_id.as_str(), d.trial)).ok_or_else(unknown)?;
            let c = e.channels.iter().position(|c| *c == d.channel).ok_or_else(unknown)?;
            let tep = rectify_normalize(&e.data[c], e.excised, &e.time)?;
            let onset = response_onset(e.excised);
            Ok(MetricRecord {
                subject_id: d.subject_id.clone(),
                group: d.group.clone(),
                trial: d.trial,
                channel: d.channel.clone(),
                tedi: d.tedi,
                edi: compute_edi(&tep, &e.time, onset, d.tedi)?,
                tei: compute_tei(&tep, &e.time, onset, d.tedi)?,
                no_response: d.no_response,
            })
        })
        .collect()
}

/// Per-subject means in order of first appearance.
pub fn features_stage(metrics: &[MetricRecord]) -> CliResult<Vec<SubjectFeatures>> {
    let mut order: Vec<(&str, &str)> = Vec::new();
    let mut rows: HashMap<&str, (Vec<[f64; 3]>, usize)> = HashMap::new();
    for m in metrics {
        let entry = rows.entry(m.subject_id.as_str()).or_insert_with(|| {
            order.push((m.subject_id.as_str(), m.group.as_str()));
            (Vec::new(), 0)
        });
        entry.0.push([m.tedi, m.edi, m.tei]);
        entry.1 += usize::from(m.no_response);
    }
    for m in metrics {
        let (_, g) = order.iter().find(|(s, _)| *s == m.subject_id).expect("seen");
        if *g != m.group {
            return Err(CliError::new(
                Category::Parse,
                format!("subject {} appears in groups {g} and {}", m.subject_id, m.group),
            ));
        }
    }
    order
        .iter()
        .map(|(s, g)| {
            let (r, n) = &rows[s];
            Ok(aggregate_indexes(r, *n, s, g)?)
        })
        .collect()
}

pub fn classify_stage(features: &[SubjectFeatures], cfg: &RunConfig) -> CliResult<CvReport> {
    Ok(loso_cv(
        features,
        &cfg.forest_config(),
        cfg.cv.n_repeats,
        &cfg.cv.positive_class,
    )?)
}

pub fn sweep_stage(set: &TrialSet, cfg: &RunConfig) -> CliResult<Vec<SweepEntry>> {
    let windows: Vec<f64> = cfg.sweep.windows_ms.iter().map(|w| w / 1000.0).collect();
    Ok(window_sweep(
        &set.to_subject_trials(),
        &windows,
        &cfg.detector,
        &cfg.forest_config(),
        cfg.cv.n_repeats,
        &cfg.cv.positive_class,
    )?)
}

// ---------------------------------------------------------------------------
// Subcommands.

fn load_set(path: &Path) -> CliResult<TrialSet> {
    if !path.exists() {
        return Err(CliError::new(
            Category::MissingInput,
            format!("input {} not found", path.display()),
        ));
    }
    let (set, report) = load_trials(path)?;
    log::info!(
        "{}: {} rows, {} subjects, {} trials, {} series",
        path.display(),
        report.n_rows,
        report.n_subjects,
        report.n_trials,
        report.n_series
    );
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if set.subjects.is_empty() {
        return Err(CliError::new(Category::Degenerate, format!("{} holds no trials", path.display())));
    }
    Ok(set)
}

fn save_trials(ctx: &Context, name: &str, set: &TrialSet) -> CliResult<PathBuf> {
    let path = ctx.output.join(name);
    write_trials(create(&path)?, set, Some(&ctx.header))?;
    Ok(path)
}

fn save_cohort(ctx: &Context, cohort: &Cohort) -> CliResult<Vec<PathBuf>> {
    let trials = save_trials(ctx, "trials.csv", &TrialSet::from_cohort(cohort))?;
    let manifest = ctx.output.join("manifest.json");
    write_manifest(create(&manifest)?, &ctx.header, &cohort.manifest)?;
    Ok(vec![trials, manifest])
}

fn load_pulses(path: Option<&Path>) -> CliResult<Option<Vec<PulseRecord>>> {
    path.map(|p| {
        let (_, rows) = read_pulses(open(p)?, &name_of(p))?;
        Ok(rows)
    })
    .transpose()
}

fn save_detections(ctx: &Context, rows: &[DetectionRecord]) -> CliResult<PathBuf> {
    let path = ctx.output.join("detections.csv");
    write_detections(create(&path)?, &ctx.header, rows)?;
    Ok(path)
}

fn save_metrics(ctx: &Context, rows: &[MetricRecord]) -> CliResult<PathBuf> {
    let path = ctx.output.join("metrics.csv");
    write_metrics(create(&path)?, &ctx.header, rows)?;
    Ok(path)
}

fn save_classification(ctx: &Context, features: &[SubjectFeatures]) -> CliResult<Vec<PathBuf>> {
    let fpath = ctx.output.join("features.csv");
    write_features(create(&fpath)?, &ctx.header, features)?;
    let report = classify_stage(features, &ctx.config)?;
    log::info!(
        "mean accuracy {:?} over {} repeats",
        report.summary.accuracy.mean,
        report.n_repeats
    );
    let rpath = ctx.output.join("cv_report.json");
    write_cv_report(create(&rpath)?, &ctx.header, &report)?;
    Ok(vec![fpath, rpath])
}

fn cmd_simulate(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let cohort = simulate_stage(&ctx.config)?;
    save_cohort(ctx, &cohort)
}

fn cmd_preprocess(ctx: &Context, input: &Path, pulses: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let set = load_set(input)?;
    let pulses = load_pulses(pulses)?;
    let done = preprocess_stage(&set, pulses.as_deref(), &ctx.config)?;
    Ok(vec![save_trials(ctx, "preprocessed.csv", &done)?])
}

fn cmd_detect(ctx: &Context, input: &Path) -> CliResult<Vec<PathBuf>> {
    let set = with_excision(load_set(input)?, &ctx.config);
    let rows = detect_stage(&set, &ctx.config.detector)?;
    Ok(vec![save_detections(ctx, &rows)?])
}

fn cmd_metrics(ctx: &Context, input: &Path, detections: &Path) -> CliResult<Vec<PathBuf>> {
    let set = with_excision(load_set(input)?, &ctx.config);
    let (_, det) = read_detections(open(detections)?, &name_of(detections))?;
    let rows = metrics_stage(&set, &det)?;
    Ok(vec![save_metrics(ctx, &rows)?])
}

/// True when the first non-comment line of a table names the feature columns.
fn is_features_table(text: &str) -> bool {
    text.lines()
        .find(|l| !l.starts_with('#'))
        .is_some_and(|l| l.split(',').any(|c| c.trim() == "n_trials_used"))
}

fn cmd_classify(ctx: &Context, input: &Path) -> CliResult<Vec<PathBuf>> {
    let mut text = String::new();
    open(input)?.read_to_string(&mut text).map_err(io_err(input))?;
    let features = if is_features_table(&text) {
        read_features(text.as_bytes(), &name_of(input))?.1
    } else {
        let (_, metrics) = read_metrics(text.as_bytes(), &name_of(input))?;
        features_stage(&metrics)?
    };
    save_classification(ctx, &features)
}

fn cmd_sweep(ctx: &Context, input: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let set = match input {
        Some(p) => with_excision(load_set(p)?, &ctx.config),
        None => with_excision(
            preprocess_stage(&TrialSet::from_cohort(&simulate_stage(&ctx.config)?), None, &ctx.config)?,
            &ctx.config,
        ),
    };
    let entries = sweep_stage(&set, &ctx.config)?;
    let table = ctx.output.join("sweep.csv");
    write_sweep(create(&table)?, &ctx.header, &entries)?;
    let summary = ctx.output.join("sweep_summary.csv");
    write_sweep_summary(create(&summary)?, &ctx.header, &entries)?;
    Ok(vec![table, summary])
}

fn cmd_pipeline(ctx: &Context, input: Option<&Path>, pulses: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let raw = match input {
        Some(p) => load_set(p)?,
        None => {
            let cohort = simulate_stage(&ctx.config)?;
            written.extend(save_cohort(ctx, &cohort)?);
            TrialSet::from_cohort(&cohort)
        }
    };
    let pulses = load_pulses(pulses)?;
    let pre = preprocess_stage(&raw, pulses.as_deref(), &ctx.config)?;
    // with the chain disabled the raw table already is the detector input
    if ctx.config.preprocess.enabled || pulses.is_some() {
        written.push(save_trials(ctx, "preprocessed.csv", &pre)?);
    }
    let pre = with_excision(pre, &ctx.config);
    let det = detect_stage(&pre, &ctx.config.detector)?;
    written.push(save_detections(ctx, &det)?);
    let met = metrics_stage(&pre, &det)?;
    written.push(save_metrics(ctx, &met)?);
    let features = features_stage(&met)?;
    written.extend(save_classification(ctx, &features)?);
    Ok(written)
}
