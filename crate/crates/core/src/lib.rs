//! Offline analysis of single-IMU knee rehabilitation sessions: repetition
//! segmentation, per-repetition feature extraction and classification of
//! correct versus deviant executions.

pub mod dsp;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod io;
pub mod learners;
pub mod pipeline;
pub mod segmentation;
pub mod signal;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
