//! Plot-ready serializations of run outputs: JSON Lines step records, CSV
//! curves, and JSON summaries. All output is deterministic for a
//! deterministic run and uses locale-independent number formatting.

use serde::Serialize;

use crate::blind::CalibrationResult;
use crate::harness::{RunSummary, StepRecord, SweepPoint};
use crate::metrics::RetentionReport;

/// One JSON object per step record, newline-terminated.
pub fn steps_jsonl(records: &[StepRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("step record serializes"));
        out.push('\n');
    }
    out
}

/// `step,running_accuracy` rows for scored steps only.
pub fn curve_csv(records: &[StepRecord]) -> String {
    let mut out = String::from("step,running_accuracy\n");
    for r in records {
        if r.scored > 0 {
            let acc = r.running_accuracy.expect("scored steps carry a value");
            out.push_str(&format!("{},{}\n", r.step, acc));
        }
    }
    out
}

/// `step_bin,accuracy,count` rows; empty bins never appear.
pub fn retention_csv(report: &RetentionReport) -> String {
    let mut out = String::from("step_bin,accuracy,count\n");
    for (step, bin) in report.bins() {
        out.push_str(&format!("{},{},{}\n", step, bin.accuracy(), bin.count));
    }
    out
}

/// Pretty-printed run summary.
pub fn summary_json(summary: &RunSummary) -> String {
    pretty(summary)
}

/// `shift,best_K,accuracy` rows of a calibration curve.
pub fn calibration_csv(result: &CalibrationResult) -> String {
    let mut out = String::from("shift,best_K,accuracy\n");
    for (shift, acc) in &result.curve {
        out.push_str(&format!("{},{},{}\n", shift, result.best_k[shift], acc));
    }
    out
}

/// The scalar outcome of a calibration, for the JSON summary file.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationSummary {
    pub s_star: usize,
    pub plateau_level: f64,
    pub degenerate: bool,
}

impl From<&CalibrationResult> for CalibrationSummary {
    fn from(r: &CalibrationResult) -> Self {
        Self {
            s_star: r.s_star,
            plateau_level: r.plateau_level,
            degenerate: r.degenerate,
        }
    }
}

pub fn calibration_json(result: &CalibrationResult) -> String {
    pretty(&CalibrationSummary::from(result))
}

/// Sweep outcomes in grid order.
pub fn sweep_json(points: &[SweepPoint]) -> String {
    pretty(&points)
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report value serializes");
    s.push('\n');
    s
}
