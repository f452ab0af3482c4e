//! One-pass evaluation: initialize from the first-frame ground truth,
//! run to the end with no re-initialization, and score the final
//! (post-correction) outputs.

use crate::config::RunConfig;
use crate::engine::{self, EventLog};
use crate::error::{Error, Result};
use crate::tracker::CorrelationTracker;
use crate::verifier::CorrelationVerifier;

use super::report::EvaluationReport;
use super::sequence::Sequence;

/// A finished evaluation: the report plus the full event log.
#[derive(Debug, Clone)]
pub struct OpeRun {
    pub report: EvaluationReport,
    pub events: EventLog,
}

/// Runs one sequence once and scores it.
pub fn run_ope(seq: &Sequence, cfg: &RunConfig) -> Result<OpeRun> {
    cfg.validate()?;
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    if seq.ground_truth.len() != seq.frames.len() {
        return Err(Error::InvalidConfig(format!(
            "sequence {}: {} frames but {} ground-truth boxes",
            seq.name,
            seq.frames.len(),
            seq.ground_truth.len()
        )));
    }
    let init = seq.initial_box()?;
    let mut tracker = CorrelationTracker::new(cfg.tracker_params());
    let engine_cfg = cfg.engine_config();

    let outcome = if cfg.no_verifier {
        engine::run(
            &seq.frames,
            &init,
            &mut tracker,
            None::<&mut CorrelationVerifier>,
            &engine_cfg,
        )?
    } else {
        let mut verifier = CorrelationVerifier::new(cfg.detection_config())
            .with_canonical(cfg.verifier_template);
        engine::run(
            &seq.frames,
            &init,
            &mut tracker,
            Some(&mut verifier),
            &engine_cfg,
        )?
    };

    let report = EvaluationReport::new(
        seq.name.clone(),
        cfg.mode.to_string(),
        &outcome.boxes,
        &seq.ground_truth,
        outcome.fps,
        &outcome.events,
        cfg.pairs(),
    )?;
    Ok(OpeRun {
        report,
        events: outcome.events,
    })
}
