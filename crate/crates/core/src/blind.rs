//! Label-only (blind) classifier, its accuracy under evaluation shift, the
//! context-window search, and selection of the smallest decorrelating shift.
//!
//! The blind classifier predicts the mode of the last K revealed labels and
//! never looks at features. Its accuracy above the random floor measures how
//! much a stream's labels can be predicted from recency alone; sweeping the
//! evaluation shift until that advantage disappears yields the smallest
//! shift at which accuracy-based metrics stop rewarding label recency.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stream::LabeledStream;

/// Context window of the blind classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlindConfig {
    pub k: usize,
}

/// Outcome of a shift sweep: per-shift best-window accuracy, the chosen
/// window per shift, the selected minimal shift, and the floor it converged
/// to at the largest probed shift.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub curve: BTreeMap<usize, f64>,
    pub best_k: BTreeMap<usize, usize>,
    pub s_star: usize,
    pub plateau_level: f64,
    /// Set when the stream has a single distinct label, which makes every
    /// shift look identical.
    pub degenerate: bool,
}

/// Default window grid for the context search.
pub fn default_k_grid() -> Vec<usize> {
    vec![1, 2, 4, 8, 16, 32, 64, 128]
}

/// Default shift grid: 0 plus powers of two up to a quarter of the stream.
pub fn default_shift_grid(n: usize) -> Vec<usize> {
    let mut grid = vec![0usize];
    let mut s = 1usize;
    while s <= n / 4 {
        grid.push(s);
        s *= 2;
    }
    grid
}

/// Fraction of the stream used by [`search_k`] by default.
pub const DEFAULT_SEARCH_FRACTION: f64 = 0.1;

/// Mode of the last `min(k, |history|)` labels; ties go to the tied label
/// whose most recent occurrence is latest in the window.
pub fn blind_predict(history: &[usize], k: usize) -> Result<usize> {
    if history.is_empty() {
        return Err(Error::Contract(
            "blind_predict requires a non-empty history".into(),
        ));
    }
    if k == 0 {
        return Err(Error::Contract("context window must be >= 1".into()));
    }
    let window = &history[history.len() - k.min(history.len())..];
    // (label, count, last position); windows are small, linear scan is fine.
    let mut tally: Vec<(usize, u32, usize)> = Vec::new();
    for (pos, &y) in window.iter().enumerate() {
        match tally.iter_mut().find(|e| e.0 == y) {
            Some(e) => {
                e.1 += 1;
                e.2 = pos;
            }
            None => tally.push((y, 1, pos)),
        }
    }
    Ok(tally
        .into_iter()
        .max_by_key(|&(_, count, last)| (count, last))
        .expect("window is non-empty")
        .0)
}

/// One scoring pass over a label sequence: for each position t, predict the
/// label at t+1+shift from the window ending at t. Returns (correct, scored).
fn blind_counts(labels: &[usize], num_classes: usize, k: usize, shift: usize) -> Result<(u64, u64)> {
    let n = labels.len();
    if shift + 1 >= n {
        return Err(Error::Range(format!(
            "shift {shift} leaves nothing to score in a stream of length {n}"
        )));
    }
    if k == 0 {
        return Err(Error::Contract("context window must be >= 1".into()));
    }
    let mut counts = vec![0u32; num_classes];
    let mut last = vec![0usize; num_classes];
    let mut touched: Vec<usize> = Vec::with_capacity(k);
    let mut correct = 0u64;
    let scored = (n - shift - 1) as u64;
    for t in 0..(n - shift - 1) {
        let lo = (t + 1).saturating_sub(k);
        for (pos, &y) in labels[lo..=t].iter().enumerate() {
            if counts[y] == 0 {
                touched.push(y);
            }
            counts[y] += 1;
            last[y] = pos;
        }
        let mut best = touched[0];
        for &y in &touched[1..] {
            if (counts[y], last[y]) > (counts[best], last[best]) {
                best = y;
            }
        }
        if best == labels[t + 1 + shift] {
            correct += 1;
        }
        for &y in &touched {
            counts[y] = 0;
        }
        touched.clear();
    }
    Ok((correct, scored))
}

/// Accuracy of the blind classifier with window `k` when scoring the sample
/// `shift + 1` positions ahead of each revealed position.
pub fn blind_accuracy<F: Scalar>(stream: &LabeledStream<F>, k: usize, shift: usize) -> Result<f64> {
    let labels = stream.labels();
    let (correct, scored) = blind_counts(&labels, stream.num_classes(), k, shift)?;
    Ok(correct as f64 / scored as f64)
}

/// Best-window accuracy over a grid: highest correct count wins, smallest
/// window on ties (every window scores the same positions, so integer counts
/// compare exactly).
fn best_k_counts(
    labels: &[usize],
    num_classes: usize,
    k_grid: &[usize],
    shift: usize,
) -> Result<(usize, u64, u64)> {
    let mut best: Option<(usize, u64, u64)> = None;
    for &k in k_grid {
        let (correct, scored) = blind_counts(labels, num_classes, k, shift)?;
        best = Some(match best {
            None => (k, correct, scored),
            Some(cur) => {
                if correct > cur.1 || (correct == cur.1 && k < cur.0) {
                    (k, correct, scored)
                } else {
                    cur
                }
            }
        });
    }
    best.ok_or_else(|| Error::Config("window grid must be non-empty".into()))
}

/// Searches the window grid at shift 0 on the leading `search_fraction` of
/// the stream; returns the best window, smallest on ties.
pub fn search_k<F: Scalar>(
    stream: &LabeledStream<F>,
    k_grid: &[usize],
    search_fraction: f64,
) -> Result<usize> {
    if !(search_fraction > 0.0 && search_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "search fraction must lie in (0, 1], got {search_fraction}"
        )));
    }
    let labels = stream.labels();
    let prefix = ((search_fraction * labels.len() as f64) as usize)
        .max(2)
        .min(labels.len());
    let (k, _, _) = best_k_counts(&labels[..prefix], stream.num_classes(), k_grid, 0)?;
    Ok(k)
}

/// Sweeps the shift grid, taking the best window per shift, and selects the
/// smallest shift whose accuracy is within `epsilon` of the level reached at
/// the largest probed shift.
pub fn calibrate_shift<F: Scalar>(
    stream: &LabeledStream<F>,
    k_grid: &[usize],
    shift_grid: &[usize],
    epsilon: f64,
) -> Result<CalibrationResult> {
    if k_grid.is_empty() {
        return Err(Error::Config("window grid must be non-empty".into()));
    }
    if shift_grid.is_empty() {
        return Err(Error::Config("shift grid must be non-empty".into()));
    }
    if shift_grid[0] != 0 {
        return Err(Error::Config("shift grid must start at 0".into()));
    }
    if !shift_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config("shift grid must be strictly increasing".into()));
    }
    let n = stream.len();
    if *shift_grid.last().unwrap() + 1 >= n {
        return Err(Error::Config(format!(
            "largest shift {} does not fit a stream of length {n}",
            shift_grid.last().unwrap()
        )));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Config("epsilon must be finite and >= 0".into()));
    }

    let labels = stream.labels();
    let num_classes = stream.num_classes();
    let points: Vec<(usize, usize, f64)> = shift_grid
        .par_iter()
        .map(|&shift| {
            let (k, correct, scored) = best_k_counts(&labels, num_classes, k_grid, shift)?;
            Ok((shift, k, correct as f64 / scored as f64))
        })
        .collect::<Result<_>>()?;

    let mut curve = BTreeMap::new();
    let mut best_k = BTreeMap::new();
    for &(shift, k, acc) in &points {
        curve.insert(shift, acc);
        best_k.insert(shift, k);
    }
    let plateau_level = points.last().unwrap().2;
    let s_star = points
        .iter()
        .find(|&&(_, _, acc)| acc <= plateau_level + epsilon)
        .map(|&(shift, _, _)| shift)
        .expect("the largest shift always qualifies");
    let first = labels[0];
    let degenerate = labels.iter().all(|&y| y == first);
    Ok(CalibrationResult {
        curve,
        best_k,
        s_star,
        plateau_level,
        degenerate,
    })
}
