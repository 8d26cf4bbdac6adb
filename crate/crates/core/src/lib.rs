//! Streaming evaluation engine for budgeted online learners.
//!
//! Real-world label streams are bursty: the label of the next sample is often
//! predictable from recent labels alone, so accuracy on the immediately next
//! batch rewards recency tracking rather than learning. This crate provides
//! the pieces to measure and correct for that:
//!
//! - a temporally ordered stream model with test-then-train batching and a
//!   shifted evaluation window ([`stream`]),
//! - a synthetic bursty stream generator with closed-form ground truth
//!   ([`synth`]),
//! - a label-only baseline and a calibration sweep that finds the smallest
//!   shift at which it degrades to the random floor ([`blind`]),
//! - exact streaming metrics and a retention report ([`metrics`]),
//! - an unbounded replay buffer with FIFO/uniform/mixed batch construction
//!   ([`buffer`]),
//! - linear/cosine heads with analytic gradients, a k-NN feature memory, and
//!   a label-only learner ([`learners`]),
//! - a budgeted evaluate-then-train harness with parameter sweeps
//!   ([`harness`]) and plot-ready report serialization ([`report`]).
//!
//! Numeric kernels are generic over [`Scalar`] (f32 or f64): production runs
//! use the f32 aliases below, while oracles and gradient checks instantiate
//! the same code at f64.

pub mod blind;
pub mod buffer;
pub mod error;
pub mod harness;
pub mod io;
pub mod learners;
pub mod metrics;
pub mod report;
pub mod scalar;
pub mod stream;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Production-precision sample.
pub type Sample32 = stream::Sample<f32>;
/// Production-precision stream, as loaded from disk or generated for runs.
pub type Stream32 = stream::LabeledStream<f32>;
/// Production-precision holdout stream.
pub type TestStream32 = stream::TestStream<f32>;
/// Production-precision linear head.
pub type LinearHead32 = learners::LinearHead<f32>;
/// Production-precision learner, as the harness builds from a config.
pub type Learner32 = learners::AnyLearner<f32>;
