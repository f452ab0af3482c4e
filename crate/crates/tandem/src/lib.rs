//! tandem: a real-time correlation-filter tracker paired with an
//! asynchronous verifier.
//!
//! The tracker runs on every frame and stays fast; the verifier audits
//! sampled frames against the initial target appearance, re-detects the
//! target in a local region when tracking has drifted, and hands the
//! correction back so the tracker can rewind and resume. A benchmark
//! harness runs one-pass evaluations with distance-precision and
//! overlap-success metrics, and a synthetic-sequence generator provides
//! reproducible test footage.
//!
//! Crate layout:
//! - [`geometry`], [`frame`]: boxes, metrics primitives, frames, crops.
//! - [`features`]: intensity+gradient cell features, Hann window, PCA.
//! - [`filter`], [`scale`]: translation and scale correlation filters.
//! - [`tracker`]: the assembled per-frame tracker.
//! - [`verifier`]: verification scoring, sliding-window re-detection and
//!   the adaptive search policy.
//! - [`engine`]: the two-worker coordination loop with trace-back.
//! - [`bench`]: sequence I/O, metrics, synthetic data, reports.
//! - [`config`]: flat key=value run configuration.

pub mod bench;
pub mod config;
pub mod engine;
pub mod error;
pub mod features;
mod fft;
pub mod filter;
pub mod frame;
pub mod geometry;
pub mod scale;
pub mod tracker;
pub mod verifier;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use frame::Frame;
pub use geometry::BoundingBox;
