//! Lifting-risk assessment pipeline: the revised NIOSH lifting equation,
//! surface-EMG spectral feature extraction, from-scratch risk classifiers,
//! and a calibrated synthetic session generator that makes the whole chain
//! reproducible at desk scale.
//!
//! The crate is organised along the pipeline stages:
//!
//! * [`niosh`] — multipliers, recommended weight limit, lifting index, risk class
//! * [`signal`] — recording ingestion, rectification, windowing, magnitude spectra
//! * [`features`] — per-window spectral feature vectors and labelled datasets
//! * [`ml`] — decision tree, random forest, k-NN, and SVM with a repeated
//!   stratified holdout harness
//! * [`synth`] — seeded synthetic sEMG sessions with amplitude calibrated to load
//! * [`pipeline`] — end-to-end orchestration and report emission
//!
//! Everything is deterministic under a fixed seed, independent of thread count.

pub mod error;
pub mod fft;
pub mod features;
pub mod ml;
pub mod niosh;
pub mod pipeline;
pub mod rng;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use niosh::{RiskLabel, RiskThresholds, UnitSystem};
