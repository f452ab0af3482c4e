//! Benchmark harness: sequence ingestion, one-pass evaluation, metrics
//! and curves, synthetic-sequence generation, and report emission.

pub mod metrics;
pub mod ope;
pub mod report;
pub mod sequence;
pub mod synth;

pub use metrics::{dpr_at_20, osr_at_half, precision_curve, success_curve};
pub use ope::{run_ope, OpeRun};
pub use report::{per_frame_csv, EvaluationReport};
pub use sequence::{load_sequence, Sequence};
pub use synth::{generate_synthetic, write_sequence, SynthSpec};
