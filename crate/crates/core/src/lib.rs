//! Laughter detection in audio recordings.
//!
//! The pipeline frames a signal, gates frames by Welch power against an
//! automatically chosen (Otsu) or fixed threshold, measures the
//! frequency-modulation rhythm of the surviving frames across six octave
//! bands, and keeps frames whose rhythm variability clears a Student-t
//! derived threshold. Selected frames are merged into time intervals.

pub mod cli;
pub mod detector;
pub mod error;
pub mod evalkit;
pub mod rhythm;
pub mod signal;
pub mod spectral;
pub mod synthlab;

pub use detector::{detect, DetectionReport, Detector, PipelineConfig, ThresholdMode, TimeInterval};
pub use error::{Error, Result};
pub use signal::{frame_signal, load_audio, AudioSignal};
