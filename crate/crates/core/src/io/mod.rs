//! File formats: trial tables, result artifacts and the run configuration.
//!
//! Every data artifact starts with one comment line
//! `# tepidx version=<v> config_hash=<hex> seed=<n>` naming what produced it.
//! Wall-clock timestamps are kept out of data artifacts.

mod artifacts;
mod config;
mod trials;

pub use artifacts::{
    read_cv_report, read_detections, read_features, read_manifest, read_metrics, read_pulses,
    read_sweep, write_cv_report, write_detections, write_features, write_manifest, write_metrics,
    write_pulses, write_sweep, write_sweep_summary, DetectionRecord, MetricRecord, PulseRecord,
    SweepRow,
};
pub use config::{
    CvSettings, ForestSettings, Paths, RunConfig, SimulateSettings, SweepSettings, CLASSIFY_STREAM,
    SIMULATE_STREAM,
};
pub use trials::{
    load_trials, read_trials, write_trials, ParseReport, SubjectRecord, TrialSet,
};

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What produced an artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl ArtifactHeader {
    pub fn new(config_hash: &str, seed: u64) -> Self {
        Self {
            version: VERSION.to_string(),
            config_hash: config_hash.to_string(),
            seed,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "# tepidx version={} config_hash={} seed={}",
            self.version, self.config_hash, self.seed
        )
    }

    /// Parse a header line; `None` if the line is not one.
    pub fn parse(line: &str) -> Option<Self> {
        let rest = line.trim_end().strip_prefix("# tepidx ")?;
        let (mut version, mut hash, mut seed) = (None, None, None);
        for field in rest.split(' ') {
            let (k, v) = field.split_once('=')?;
            match k {
                "version" => version = Some(v.to_string()),
                "config_hash" => hash = Some(v.to_string()),
                "seed" => seed = v.parse().ok(),
                _ => return None,
            }
        }
        Some(Self {
            version: version?,
            config_hash: hash?,
            seed: seed?,
        })
    }
}

/// Split a leading header line off `text`.
fn split_header(text: &str) -> (Option<ArtifactHeader>, &str) {
    match text.split_once('\n') {
        Some((first, rest)) if first.starts_with('#') => match ArtifactHeader::parse(first) {
            Some(h) => (Some(h), rest),
            None => (None, text),
        },
        _ => (None, text),
    }
}

fn parse_err(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}
