//! Verification of natural-language statements against tables with a
//! two-stage cascade: a neutral gate followed by an entailed/refuted
//! decision, both driven by median-ensembled statement scorers.
//!
//! The crate covers the full experimental loop around the scorers
//! themselves: synthesizing artificial neutral training data, building
//! the balanced neutral-gate training set, combining model logits,
//! calibrating thresholds, and scoring predictions with per-table
//! micro-F1, confusion matrices, and keyword-slice error analysis.
//! Scores can come from external logit files or from built-in baseline
//! scorers, so the pipeline runs end to end without any trained model.

pub mod cascade;
pub mod cli;
pub mod config;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod report;
pub mod scoring;
pub mod slices;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
