//! Evaluation reports: one structured JSON document per run plus a flat
//! per-frame CSV.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::engine::EventLog;
use crate::error::Result;
use crate::geometry::{center_distance, iou, BoundingBox};

use super::metrics::{
    dpr_at_20, osr_at_half, precision_curve, success_curve, PRECISION_POINTS, SUCCESS_POINTS,
};

/// Metrics, curves, outputs and provenance for one sequence run.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub sequence: String,
    pub frames: usize,
    pub mode: String,
    /// Distance precision rate at 20 px.
    pub dpr20: f64,
    /// Overlap success rate at IoU 0.5 (`>=` convention); curve points
    /// use strict `>`.
    pub osr50: f64,
    /// Mean of the 21 success-curve values.
    pub auc: f64,
    /// Engine-loop throughput; wall-clock, varies run to run.
    pub fps: f64,
    pub precision_curve: Vec<f64>,
    pub success_curve: Vec<f64>,
    /// One predicted box per frame, corrections applied.
    pub boxes: Vec<BoundingBox>,
    /// Events by kind over the whole run.
    pub event_counts: BTreeMap<String, usize>,
    /// The effective configuration this run used.
    pub config: BTreeMap<String, String>,
}

impl EvaluationReport {
    /// Assembles a report, checking the curve invariants.
    pub fn new(
        sequence: String,
        mode: String,
        pred: &[BoundingBox],
        gt: &[BoundingBox],
        fps: f64,
        events: &EventLog,
        config: BTreeMap<String, String>,
    ) -> Result<Self> {
        let precision = precision_curve(pred, gt)?;
        let (success, auc) = success_curve(pred, gt)?;
        assert_eq!(precision.len(), PRECISION_POINTS);
        assert_eq!(success.len(), SUCCESS_POINTS);
        assert!(
            precision.windows(2).all(|w| w[0] <= w[1]),
            "precision curve must be non-decreasing"
        );
        assert!(
            success.windows(2).all(|w| w[0] >= w[1]),
            "success curve must be non-increasing"
        );
        let dpr20 = dpr_at_20(pred, gt)?;
        let osr50 = osr_at_half(pred, gt)?;
        assert_eq!(dpr20, precision[20]);

        let mut event_counts = BTreeMap::new();
        for event in events.events() {
            *event_counts.entry(event.kind.as_str().to_string()).or_insert(0) += 1;
        }

        Ok(Self {
            sequence,
            frames: pred.len(),
            mode,
            dpr20,
            osr50,
            auc,
            fps,
            precision_curve: precision,
            success_curve: success,
            boxes: pred.to_vec(),
            event_counts,
            config,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Per-frame CSV: `frame,x,y,w,h,center_err,iou` against ground truth.
pub fn per_frame_csv(pred: &[BoundingBox], gt: &[BoundingBox]) -> String {
    let mut out = String::from("frame,x,y,w,h,center_err,iou\n");
    for (i, (p, g)) in pred.iter().zip(gt.iter()).enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6}\n",
            i,
            p.x,
            p.y,
            p.w,
            p.h,
            center_distance(p, g),
            iou(p, g)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_fields_and_json() {
        let gt: Vec<_> = (0..3)
            .map(|i| BoundingBox::new(i as f64, 0.0, 10.0, 10.0))
            .collect();
        let report = EvaluationReport::new(
            "seq".into(),
            "deterministic".into(),
            &gt,
            &gt,
            42.0,
            &EventLog::default(),
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(report.dpr20, 1.0);
        assert_eq!(report.osr50, 1.0);
        let json = report.to_json();
        assert!(json.contains("\"dpr20\": 1.0"));
        assert!(json.contains("\"sequence\": \"seq\""));
    }

    #[test]
    fn csv_has_one_line_per_frame() {
        let gt: Vec<_> = (0..4)
            .map(|i| BoundingBox::new(i as f64, 0.0, 10.0, 10.0))
            .collect();
        let csv = per_frame_csv(&gt, &gt);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().ends_with("0.000000,1.000000"));
    }
}
