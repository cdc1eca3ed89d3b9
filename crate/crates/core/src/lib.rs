//! Energy-based perturbation indexes for TMS-evoked EEG.
//!
//! The crate covers the whole analysis chain:
//!
//! - [`preprocess`]: segmentation, pulse excision, decimation, zero-phase
//!   bandpass and average re-reference.
//! - [`detector`]: sliding-window energy, baseline threshold and the
//!   return-to-baseline time (TEDI).
//! - [`metrics`]: TEDI, EDI and TEI per trial/channel and their per-subject means.
//! - [`classifier`]: random forest, leave-one-subject-out cross-validation and
//!   the window-length sweep.
//! - [`synth`]: synthetic trials and cohorts with known ground truth.
//! - [`io`]: trial files, result artifacts and run configuration.

pub mod classifier;
pub mod detector;
pub mod error;
pub mod io;
pub mod metrics;
pub mod preprocess;
pub mod seed;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use signal::{Epoch, TimeAxis, TimeWindow};
