//! File emission for runs, calibrations, and sweeps, plus the text report
//! over a finished run directory.

use std::fs;
use std::path::{Path, PathBuf};

use streameval::blind::CalibrationResult;
use streameval::harness::{RunOutput, RunSummary, StepRecord, SweepPoint};
use streameval::report;
use streameval::{Error, Result};

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.display().to_string(),
            source: e,
        })?;
    }
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Writes steps.jsonl, retention.csv, summary.json, and curve.csv into
/// `out_dir`; returns the paths written.
pub fn emit_reports(out: &RunOutput, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let files = [
        ("steps.jsonl", report::steps_jsonl(&out.records)),
        ("retention.csv", report::retention_csv(&out.retention)),
        ("summary.json", report::summary_json(&out.summary)),
        ("curve.csv", report::curve_csv(&out.records)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = out_dir.join(name);
        write(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes the effective config echo next to the run outputs.
pub fn emit_config_echo(echo: &str, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("config.json");
    write(&path, echo)?;
    Ok(path)
}

/// Writes curve.csv and calibration.json for a shift calibration.
pub fn emit_calibration(result: &CalibrationResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let curve = out_dir.join("curve.csv");
    write(&curve, &report::calibration_csv(result))?;
    let summary = out_dir.join("calibration.json");
    write(&summary, &report::calibration_json(result))?;
    Ok(vec![curve, summary])
}

/// Writes sweep.json with one entry per grid point, in grid order.
pub fn emit_sweep(points: &[SweepPoint], out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("sweep.json");
    write(&path, &report::sweep_json(points))?;
    Ok(path)
}

/// Renders a plain-text report over a finished run directory.
pub fn render_report(run_dir: &Path) -> Result<String> {
    let summary: RunSummary = serde_json::from_str(&read(&run_dir.join("summary.json"))?)
        .map_err(|e| Error::Parse {
            path: run_dir.join("summary.json").display().to_string(),
            msg: e.to_string(),
        })?;
    let steps_text = read(&run_dir.join("steps.jsonl"))?;
    let mut first_scored: Option<StepRecord> = None;
    let mut unscored_steps = 0usize;
    for line in steps_text.lines() {
        let rec: StepRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: run_dir.join("steps.jsonl").display().to_string(),
            msg: e.to_string(),
        })?;
        if rec.scored == 0 {
            unscored_steps += 1;
        } else if first_scored.is_none() {
            first_scored = Some(rec);
        }
    }
    let retention = read(&run_dir.join("retention.csv"))?;
    let bins = retention.lines().count().saturating_sub(1);

    let mut out = String::new();
    out.push_str(&format!("run report: {}\n", run_dir.display()));
    out.push_str(&format!("steps: {}\n", summary.steps));
    out.push_str(&format!(
        "scored: {} of which correct {}\n",
        summary.scored, summary.correct
    ));
    out.push_str(&format!("unscored steps: {unscored_steps}\n"));
    match summary.final_accuracy {
        Some(acc) => out.push_str(&format!("final accuracy: {acc:.6}\n")),
        None => out.push_str("final accuracy: n/a (nothing scored)\n"),
    }
    match summary.bwt_at_t {
        Some(bwt) => out.push_str(&format!("backward transfer: {bwt:.6} over {bins} step bins\n")),
        None => out.push_str("backward transfer: n/a (no holdout)\n"),
    }
    out.push_str(&format!("total updates: {}\n", summary.total_updates));
    out.push_str(&format!("wall time: {:.3}s\n", summary.wall_time_s));
    Ok(out)
}
