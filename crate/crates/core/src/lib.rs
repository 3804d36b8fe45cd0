//! Surface-EMG hand-gesture classification.
//!
//! The pipeline runs in a fixed order:
//!
//! 1. [`signal`]: power-line notch, Butterworth band-pass, overlapping windows.
//! 2. [`features`]: eleven time-domain and six frequency-domain features per
//!    window and channel.
//! 3. [`dataset`]: recording/feature CSV formats, stratified splits and a
//!    seeded synthetic recording generator.
//! 4. [`models`]: from-scratch baseline classifiers behind one
//!    [`models::Classifier`] contract.
//! 5. [`meet`]: the mixture-of-experts extra-trees combiner.
//! 6. [`eval`]: confusion matrices, per-class metrics and experiment reports.

pub mod dataset;
pub mod eval;
pub mod features;
pub mod meet;
pub mod models;
pub mod rng;
pub mod signal;

mod error;

pub use error::{Error, Result};
