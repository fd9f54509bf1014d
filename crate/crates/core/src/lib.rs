//! orientpipe — sensor/video fusion toolchain for player body-orientation
//! ground truth.
//!
//! The library fuses wearable-sensor orientation tracks with video-derived
//! player detections to produce camera-compensated, binned orientation
//! labels, and ships the pieces needed to train and evaluate classifiers on
//! them:
//!
//! * [`geometry`] — image/geo/field coordinate types, homography estimation
//!   (normalized DLT), and apparent-zero-vector angle compensation.
//! * [`angles`] — cyclic orientation bins, soft labels, the cyclic
//!   cross-entropy loss with analytic gradient, circular interpolation, and
//!   Euler-to-heading conversion.
//! * [`fusion`] — the dataset-completion pipeline: jersey-color filtering,
//!   detection-to-field mapping, Hungarian matching with gating, and
//!   multi-rate sensor/video synchronization.
//! * [`eval`] — circular MEAE/MDAE metrics and confusion matrices.
//! * [`synthgen`] — deterministic synthetic scenarios with ground-truth
//!   sidecars for end-to-end verification.
//! * [`toytrain`] — a desk-scale linear classifier contrasting the cyclic
//!   loss with plain one-hot cross-entropy.
//! * [`cli`] — the `orientpipe` command-line front end.
//!
//! [`formats`] holds every on-disk schema; [`config`] the validated
//! configuration types.

pub mod angles;
pub mod cli;
pub mod config;
pub mod eval;
pub mod formats;
pub mod fusion;
pub mod geometry;
pub mod synthgen;
pub mod toytrain;
