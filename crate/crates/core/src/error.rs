use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate flat trial: no nonzero sample outside the excised window")]
    DegenerateFlatTrial,

    #[error("invalid time axis: {0}")]
    InvalidTimeAxis(String),

    #[error("invalid time window [{start}, {end}]: {reason}")]
    InvalidWindow { start: f64, end: f64, reason: String },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid epoch: {0}")]
    InvalidEpoch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient flanking samples around excision window: {0}")]
    InsufficientFlank(String),

    #[error("sampling rate {from} Hz is not an integer multiple of {to} Hz")]
    NonIntegerRatio { from: f64, to: f64 },

    #[error("average re-reference needs at least 2 channels, got {0}")]
    SingleChannel(usize),

    #[error("no pulses given")]
    NoPulses,

    #[error("training set must contain at least two classes, found {0}")]
    SingleClass(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unresolvable ground truth: envelope stays above noise level {noise_sigma} until {t_end} s")]
    UnresolvableGroundTruth { noise_sigma: f64, t_end: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("non-monotone time in subject {subject}, trial {trial}, channel {channel} at line {line}")]
    NonMonotoneTime {
        subject: String,
        trial: u64,
        channel: String,
        line: u64,
    },

    #[error("non-uniform sampling in subject {subject}, trial {trial}, channel {channel}")]
    NonUniformSampling {
        subject: String,
        trial: u64,
        channel: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
