//! Temporally ordered stream data model: samples, batching, shifted
//! evaluation windows, and holdout splitting.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One stream element: a feature vector with its label and arrival position.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<F> {
    /// Position in stream order, 0-based and contiguous.
    pub index: usize,
    /// Arrival time in arbitrary monotone units.
    pub timestamp: u64,
    pub features: Vec<F>,
    /// Class id in `[0, num_classes)`.
    pub label: usize,
}

/// A finite, temporally ordered labeled stream over a fixed class universe.
///
/// Immutable after construction; see [`LabeledStream::new`] for the
/// invariants enforced.
#[derive(Debug, Clone)]
pub struct LabeledStream<F> {
    samples: Vec<Sample<F>>,
    num_classes: usize,
    feature_dim: usize,
}

impl<F: Scalar> LabeledStream<F> {
    /// Validates and wraps a sample sequence.
    ///
    /// Invariants: at least one sample; indices contiguous from 0; timestamps
    /// non-decreasing; every feature vector of length `feature_dim` with all
    /// entries finite; every label below `num_classes`.
    pub fn new(samples: Vec<Sample<F>>, num_classes: usize, feature_dim: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Validation {
                index: 0,
                msg: "stream must contain at least one sample".into(),
            });
        }
        if num_classes == 0 || feature_dim == 0 {
            return Err(Error::Config(
                "num_classes and feature_dim must be positive".into(),
            ));
        }
        let mut prev_ts = 0u64;
        for (i, s) in samples.iter().enumerate() {
            if s.index != i {
                return Err(Error::Validation {
                    index: i,
                    msg: format!("expected index {i}, found {}", s.index),
                });
            }
            if i > 0 && s.timestamp < prev_ts {
                return Err(Error::Validation {
                    index: i,
                    msg: format!("timestamp {} decreases below {}", s.timestamp, prev_ts),
                });
            }
            prev_ts = s.timestamp;
            if s.features.len() != feature_dim {
                return Err(Error::Validation {
                    index: i,
                    msg: format!(
                        "feature vector has {} entries, expected {feature_dim}",
                        s.features.len()
                    ),
                });
            }
            if let Some(j) = s.features.iter().position(|x| !x.is_finite()) {
                return Err(Error::Validation {
                    index: i,
                    msg: format!("non-finite feature at component {j}"),
                });
            }
            if s.label >= num_classes {
                return Err(Error::Validation {
                    index: i,
                    msg: format!("label {} outside [0, {num_classes})", s.label),
                });
            }
        }
        Ok(Self {
            samples,
            num_classes,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one sample
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn samples(&self) -> &[Sample<F>] {
        &self.samples
    }

    pub fn get(&self, index: usize) -> &Sample<F> {
        &self.samples[index]
    }

    /// Copies the label sequence out (handy for label-only passes).
    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Number of training steps under batch size `b` (short final batch kept).
    pub fn num_steps(&self, b: usize) -> usize {
        self.len().div_ceil(b)
    }

    /// Index of the last training step under batch size `b`.
    pub fn final_step(&self, b: usize) -> usize {
        self.num_steps(b) - 1
    }

    /// Index range of the training batch for step `t`: `[t*b, min((t+1)*b, N))`.
    pub fn batch_range(&self, t: usize, b: usize) -> Result<Range<usize>> {
        if b == 0 {
            return Err(Error::Contract("batch size must be positive".into()));
        }
        let start = t * b;
        if start >= self.len() {
            return Err(Error::Range(format!(
                "step {t} starts at sample {start}, beyond stream length {}",
                self.len()
            )));
        }
        Ok(start..((t + 1) * b).min(self.len()))
    }

    /// The training batch for step `t`; the final batch may be short.
    pub fn batch_at(&self, t: usize, b: usize) -> Result<&[Sample<F>]> {
        let r = self.batch_range(t, b)?;
        Ok(&self.samples[r])
    }
}

/// Test-then-train schedule: batch size and evaluation shift in samples.
///
/// With `shift = 0` the evaluation window coincides with the training batch,
/// which makes the resulting metric the plain online accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalProtocol {
    pub batch_size: usize,
    pub shift: usize,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        Self {
            batch_size: 64,
            shift: 0,
        }
    }
}

impl EvalProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("protocol.batch_size must be >= 1".into()));
        }
        Ok(())
    }

    /// Evaluation window for step `t` on a stream of length `n`: the training
    /// range translated `shift` samples forward. Windows that would cross the
    /// stream end are dropped entirely (the step is trained but not scored),
    /// so only full-size windows are ever scored.
    pub fn eval_indices(&self, t: usize, n: usize) -> Option<Range<usize>> {
        let b = self.batch_size;
        if t * b >= n {
            return None;
        }
        let start = t * b + self.shift;
        let end = start + b;
        (end <= n).then_some(start..end)
    }
}

/// Held-out samples drawn from a training stream, each aligned to the
/// training step its surrounding block belongs to.
#[derive(Debug, Clone)]
pub struct TestStream<F> {
    stream: LabeledStream<F>,
    step_of: Vec<usize>,
}

impl<F: Scalar> TestStream<F> {
    /// Wraps a held-out stream with its step alignment.
    pub fn new(stream: LabeledStream<F>, step_of: Vec<usize>, final_step: usize) -> Result<Self> {
        if step_of.len() != stream.len() {
            return Err(Error::Contract(format!(
                "step alignment has {} entries for {} test samples",
                step_of.len(),
                stream.len()
            )));
        }
        let mut prev = 0usize;
        for (i, &s) in step_of.iter().enumerate() {
            if s > final_step {
                return Err(Error::Validation {
                    index: i,
                    msg: format!("aligned step {s} exceeds final step {final_step}"),
                });
            }
            if s < prev {
                return Err(Error::Validation {
                    index: i,
                    msg: format!("step alignment decreases from {prev} to {s}"),
                });
            }
            prev = s;
        }
        Ok(Self { stream, step_of })
    }

    pub fn len(&self) -> usize {
        self.stream.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stream(&self) -> &LabeledStream<F> {
        &self.stream
    }

    pub fn samples(&self) -> &[Sample<F>] {
        self.stream.samples()
    }

    pub fn step_of(&self) -> &[usize] {
        &self.step_of
    }
}

/// Splits a stream into a re-compacted training stream and a held-out test
/// stream.
///
/// Per contiguous block of `round(1/fraction)` samples, one sample chosen
/// uniformly at random moves to the test stream and is aligned to the
/// training step (under `batch_size`) of the last training sample remaining
/// in its block. A trailing partial block stays entirely in the training
/// stream. Deterministic given `seed`.
pub fn split_holdout<F: Scalar>(
    stream: &LabeledStream<F>,
    fraction: f64,
    seed: u64,
    batch_size: usize,
) -> Result<(LabeledStream<F>, TestStream<F>)> {
    if !fraction.is_finite() || fraction <= 0.0 || fraction >= 1.0 {
        return Err(Error::Config(format!(
            "holdout fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = stream.len();
    if fraction * (n as f64) < 1.0 {
        return Err(Error::Config(format!(
            "holdout fraction {fraction} selects no samples from a stream of length {n}"
        )));
    }
    let block = (1.0 / fraction).round() as usize;
    if block < 2 {
        return Err(Error::Config(format!(
            "holdout fraction {fraction} leaves no training samples per block; use <= 0.5"
        )));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    let num_blocks = n / block;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut train: Vec<Sample<F>> = Vec::with_capacity(n - num_blocks);
    let mut test: Vec<Sample<F>> = Vec::with_capacity(num_blocks);
    let mut step_of: Vec<usize> = Vec::with_capacity(num_blocks);

    for b in 0..num_blocks {
        let victim = b * block + rng.random_range(0..block);
        for i in (b * block)..((b + 1) * block) {
            let mut s = stream.get(i).clone();
            if i == victim {
                s.index = test.len();
                test.push(s);
            } else {
                s.index = train.len();
                train.push(s);
            }
        }
        // Last training sample of this block, in compacted train coordinates.
        let last_train = (b + 1) * (block - 1) - 1;
        step_of.push(last_train / batch_size);
    }
    for i in (num_blocks * block)..n {
        let mut s = stream.get(i).clone();
        s.index = train.len();
        train.push(s);
    }

    let train = LabeledStream::new(train, stream.num_classes(), stream.feature_dim())?;
    let final_step = train.final_step(batch_size);
    let test = LabeledStream::new(test, stream.num_classes(), stream.feature_dim())?;
    let test = TestStream::new(test, step_of, final_step)?;
    Ok((train, test))
}
