//! Run configuration (TOML).
//!
//! Every section is optional and falls back to the documented defaults;
//! unknown keys are rejected. All randomness derives from the top-level
//! `seed`: the simulator uses stream 0 and the classifier stream 1.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::ForestConfig;
use crate::detector::{DetectorConfig, STANDARD_WINDOWS};
use crate::error::{Error, Result};
use crate::preprocess::PreprocessConfig;
use crate::seed;
use crate::synth::{benchmark_specs, CohortSpec};

pub const SIMULATE_STREAM: u64 = 0;
pub const CLASSIFY_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestSettings {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestSettings {
    fn default() -> Self {
        let f = ForestConfig::default();
        Self {
            n_trees: f.n_trees,
            min_samples_leaf: f.min_samples_leaf,
            features_per_split: f.features_per_split,
            bootstrap: f.bootstrap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSettings {
    pub n_repeats: usize,
    pub positive_class: String,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            n_repeats: 100,
            positive_class: "AD".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    /// Window lengths in milliseconds.
    pub windows_ms: Vec<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            windows_ms: STANDARD_WINDOWS.iter().map(|w| (w * 1e6).round() / 1e3).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSettings {
    pub sampling_rate: f64,
    pub epoch_pre: f64,
    pub epoch_post: f64,
    pub groups: Vec<CohortSpec>,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        Self {
            sampling_rate: 1000.0,
            epoch_pre: 0.5,
            epoch_post: 1.0,
            groups: benchmark_specs(40, 8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub preprocess: PreprocessConfig,
    pub detector: DetectorConfig,
    pub forest: ForestSettings,
    pub cv: CvSettings,
    pub sweep: SweepSettings,
    pub simulate: SimulateSettings,
    pub paths: Paths,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(e.to_string())
}

impl RunConfig {
    /// Parse and validate.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.detector.validate()?;
        self.forest_config().validate(3)?;
        if self.cv.n_repeats == 0 {
            return Err(Error::InvalidConfig("cv.n_repeats must be >= 1".into()));
        }
        if self.cv.positive_class.is_empty() {
            return Err(Error::InvalidConfig("cv.positive_class must not be empty".into()));
        }
        if self.sweep.windows_ms.is_empty() {
            return Err(Error::InvalidConfig("sweep.windows_ms must not be empty".into()));
        }
        for w in &self.sweep.windows_ms {
            self.detector_for_window(*w).validate()?;
        }
        let s = &self.simulate;
        if !(s.sampling_rate > 0.0 && s.epoch_pre > 0.0 && s.epoch_post > 0.0) {
            return Err(Error::InvalidConfig(
                "simulate: sampling_rate, epoch_pre and epoch_post must be positive".into(),
            ));
        }
        for g in &s.groups {
            g.validate()?;
        }
        Ok(())
    }

    pub fn forest_config(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.forest.n_trees,
            min_samples_leaf: self.forest.min_samples_leaf,
            features_per_split: self.forest.features_per_split,
            bootstrap: self.forest.bootstrap,
            rng_seed: seed::derive(self.seed, CLASSIFY_STREAM),
        }
    }

    pub fn simulate_seed(&self) -> u64 {
        seed::derive(self.seed, SIMULATE_STREAM)
    }

    pub fn detector_for_window(&self, window_ms: f64) -> DetectorConfig {
        DetectorConfig {
            window_len: window_ms / 1000.0,
            ..self.detector.clone()
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring `paths` so that the same
    /// analysis written to different places hashes the same.
    pub fn config_hash(&self) -> String {
        let mut canon = self.clone();
        canon.paths = Paths::default();
        let json = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
