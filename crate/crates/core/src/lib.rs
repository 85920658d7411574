// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Eigenvalue-zone detection of high-impedance faults on a monitored line.
//!
//! The pipeline runs point-on-wave simulation → PMU phasor extraction →
//! per-window line eigenvalue estimation → clustered adaptive zones, with an
//! overcurrent relay evaluated on the same waveforms for comparison.

pub mod circuit;
pub mod error;
pub mod estimator;
pub mod hif;
pub mod pmu;
pub mod relay;
pub mod runner;
pub mod scenario;
pub mod spectrum;
pub mod waveform;
pub mod zone;

pub use error::{Error, Result};
