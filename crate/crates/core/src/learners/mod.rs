//! Pluggable online learners over feature vectors: gradient-trained linear
//! heads (dot or cosine, plain or class-masked cross-entropy), the
//! training-free k-NN memory, and the label-only recency baseline.

mod acm;
mod linear;

pub use acm::AcmMemory;
pub use linear::{
    ace_ce, argmax, grad_ce, sgd_step, softmax_ce, HeadGradient, HeadMode, LinearHead, LossKind,
    Mat, SgdConfig,
};

use std::collections::HashSet;

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::blind::blind_predict;
use crate::buffer::{Buffer, SamplerKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stream::{LabeledStream, Sample};

/// Learner families selectable from a run configuration.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    /// Replay-trained linear head plus trainable feature adapter.
    Er,
    /// Replay-trained linear head over frozen features.
    FcOnly,
    /// Like `Er` with the incoming half of each batch trained under the
    /// present-class-masked loss.
    Ace,
    /// Training-free k-NN feature memory.
    Acm,
    /// Like `Er` with scaled-cosine logits.
    CosineFc,
    /// Label-only recency baseline; never reads features.
    Blind,
}

impl LearnerKind {
    pub fn all() -> [LearnerKind; 6] {
        [
            LearnerKind::Er,
            LearnerKind::FcOnly,
            LearnerKind::Ace,
            LearnerKind::Acm,
            LearnerKind::CosineFc,
            LearnerKind::Blind,
        ]
    }

    /// Whether updates of this family cost gradient computation.
    pub fn is_gradient(self) -> bool {
        matches!(
            self,
            LearnerKind::Er | LearnerKind::FcOnly | LearnerKind::Ace | LearnerKind::CosineFc
        )
    }
}

fn default_learning_rate() -> f64 {
    0.005
}
fn default_weight_decay() -> f64 {
    1e-4
}
fn default_gamma() -> f64 {
    16.0
}
fn default_neighbors() -> usize {
    2
}
fn default_blind_window() -> usize {
    1
}

/// Learner selection plus hyperparameters, as read from a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    /// Cosine logit scale; used by `cosine_fc` only.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Feature adapter rank: absent = family default (full rank for
    /// `er`/`ace`/`cosine_fc`, none for `fc_only`); 0 = no adapter.
    #[serde(default)]
    pub adapter_rank: Option<usize>,
    /// k for the `acm` memory.
    #[serde(default = "default_neighbors")]
    pub neighbors: usize,
    /// Context window for the `blind` baseline.
    #[serde(default = "default_blind_window")]
    pub blind_window: usize,
}

impl LearnerSpec {
    pub fn of_kind(kind: LearnerKind) -> Self {
        Self {
            kind,
            learning_rate: default_learning_rate(),
            weight_decay: default_weight_decay(),
            gamma: default_gamma(),
            adapter_rank: None,
            neighbors: default_neighbors(),
            blind_window: default_blind_window(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Config(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.neighbors == 0 {
            return Err(Error::Config("neighbors must be >= 1".into()));
        }
        if self.blind_window == 0 {
            return Err(Error::Config("blind_window must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything an update step may touch. The incoming batch has already been
/// inserted into the buffer when `update` runs.
pub struct UpdateContext<'a, F> {
    pub stream: &'a LabeledStream<F>,
    pub buffer: &'a Buffer,
    pub sampler: SamplerKind,
    pub batch_size: usize,
    /// Budgeted number of updates this step.
    pub n_updates: usize,
    /// Stream indices of the newest incoming batch.
    pub incoming: &'a [usize],
    pub rng: &'a mut ChaCha12Rng,
}

/// A test-then-train learner as the harness drives it.
pub trait OnlineLearner<F: Scalar> {
    fn kind(&self) -> LearnerKind;

    /// False while the learner has no state to predict from; such steps are
    /// excluded from scoring.
    fn can_predict(&self) -> bool {
        true
    }

    fn predict_batch(&self, samples: &[Sample<F>]) -> Result<Vec<usize>>;

    /// Runs up to `ctx.n_updates` updates and reports how many happened.
    fn update(&mut self, ctx: &mut UpdateContext<'_, F>) -> Result<usize>;
}

/// Linear head trained by SGD on replayed batches.
#[derive(Debug, Clone)]
pub struct GradientLearner<F> {
    pub head: LinearHead<F>,
    pub loss: LossKind,
    pub sgd: SgdConfig<F>,
    kind: LearnerKind,
}

impl<F: Scalar> GradientLearner<F> {
    pub fn new(head: LinearHead<F>, loss: LossKind, sgd: SgdConfig<F>, kind: LearnerKind) -> Self {
        Self {
            head,
            loss,
            sgd,
            kind,
        }
    }
}

impl<F: Scalar> OnlineLearner<F> for GradientLearner<F> {
    fn kind(&self) -> LearnerKind {
        self.kind
    }

    fn predict_batch(&self, samples: &[Sample<F>]) -> Result<Vec<usize>> {
        samples
            .iter()
            .map(|s| Ok(argmax(&self.head.forward(&s.features)?)))
            .collect()
    }

    fn update(&mut self, ctx: &mut UpdateContext<'_, F>) -> Result<usize> {
        if ctx.n_updates == 0 {
            return Ok(0);
        }
        // Present-class mask from the incoming batch; replayed samples always
        // train under plain cross-entropy.
        let (present, incoming_set) = if self.loss == LossKind::Ace {
            let mut mask = vec![false; self.head.num_classes()];
            for &i in ctx.incoming {
                mask[ctx.stream.get(i).label] = true;
            }
            let set: HashSet<usize> = ctx.incoming.iter().copied().collect();
            (Some(mask), set)
        } else {
            (None, HashSet::new())
        };
        for _ in 0..ctx.n_updates {
            let ids = ctx.buffer.sample(ctx.sampler, ctx.batch_size, ctx.rng)?;
            let mut acc = HeadGradient::zeros_like(&self.head);
            for &id in &ids {
                let sample = ctx.stream.get(id);
                let (loss, mask) = match &present {
                    Some(mask) if incoming_set.contains(&id) => {
                        (LossKind::Ace, Some(mask.as_slice()))
                    }
                    _ => (LossKind::CrossEntropy, None),
                };
                let (_, g) = grad_ce(&self.head, &sample.features, sample.label, loss, mask)?;
                acc.accumulate(&g)?;
            }
            acc.scale(F::of_f64(1.0 / ids.len() as f64));
            sgd_step(&mut self.head, &acc, &self.sgd)?;
        }
        Ok(ctx.n_updates)
    }
}

/// k-NN memory learner; one memory insertion per step regardless of budget.
#[derive(Debug, Clone)]
pub struct AcmLearner<F> {
    pub memory: AcmMemory<F>,
}

impl<F: Scalar> OnlineLearner<F> for AcmLearner<F> {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Acm
    }

    fn can_predict(&self) -> bool {
        !self.memory.is_empty()
    }

    fn predict_batch(&self, samples: &[Sample<F>]) -> Result<Vec<usize>> {
        samples
            .iter()
            .map(|s| self.memory.predict(&s.features))
            .collect()
    }

    fn update(&mut self, ctx: &mut UpdateContext<'_, F>) -> Result<usize> {
        if ctx.n_updates == 0 {
            return Ok(0);
        }
        for &i in ctx.incoming {
            let s = ctx.stream.get(i);
            self.memory.insert(&s.features, s.label)?;
        }
        Ok(1)
    }
}

/// Label-only baseline: predicts the mode of the last revealed labels.
#[derive(Debug, Clone)]
pub struct BlindLearner {
    history: Vec<usize>,
    window: usize,
}

impl BlindLearner {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Config("blind window must be >= 1".into()));
        }
        Ok(Self {
            history: Vec::new(),
            window,
        })
    }
}

impl<F: Scalar> OnlineLearner<F> for BlindLearner {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Blind
    }

    fn can_predict(&self) -> bool {
        !self.history.is_empty()
    }

    fn predict_batch(&self, samples: &[Sample<F>]) -> Result<Vec<usize>> {
        let p = blind_predict(&self.history, self.window)?;
        Ok(vec![p; samples.len()])
    }

    fn update(&mut self, ctx: &mut UpdateContext<'_, F>) -> Result<usize> {
        if ctx.n_updates == 0 {
            return Ok(0);
        }
        self.history
            .extend(ctx.incoming.iter().map(|&i| ctx.stream.get(i).label));
        Ok(1)
    }
}

/// Any configurable learner.
#[derive(Debug, Clone)]
pub enum AnyLearner<F> {
    Gradient(GradientLearner<F>),
    Acm(AcmLearner<F>),
    Blind(BlindLearner),
}

impl<F: Scalar> OnlineLearner<F> for AnyLearner<F> {
    fn kind(&self) -> LearnerKind {
        match self {
            AnyLearner::Gradient(l) => OnlineLearner::<F>::kind(l),
            AnyLearner::Acm(l) => OnlineLearner::<F>::kind(l),
            AnyLearner::Blind(l) => OnlineLearner::<F>::kind(l),
        }
    }

    fn can_predict(&self) -> bool {
        match self {
            AnyLearner::Gradient(l) => OnlineLearner::<F>::can_predict(l),
            AnyLearner::Acm(l) => OnlineLearner::<F>::can_predict(l),
            AnyLearner::Blind(l) => OnlineLearner::<F>::can_predict(l),
        }
    }

    fn predict_batch(&self, samples: &[Sample<F>]) -> Result<Vec<usize>> {
        match self {
            AnyLearner::Gradient(l) => l.predict_batch(samples),
            AnyLearner::Acm(l) => l.predict_batch(samples),
            AnyLearner::Blind(l) => l.predict_batch(samples),
        }
    }

    fn update(&mut self, ctx: &mut UpdateContext<'_, F>) -> Result<usize> {
        match self {
            AnyLearner::Gradient(l) => l.update(ctx),
            AnyLearner::Acm(l) => l.update(ctx),
            AnyLearner::Blind(l) => l.update(ctx),
        }
    }
}

/// Instantiates the learner a spec describes for a stream with the given
/// class count and feature dimension.
pub fn build_learner<F: Scalar>(
    spec: &LearnerSpec,
    num_classes: usize,
    feature_dim: usize,
    rng: &mut ChaCha12Rng,
) -> Result<AnyLearner<F>> {
    spec.validate()?;
    let adapter_rank = match spec.adapter_rank {
        Some(0) => None,
        Some(m) => Some(m),
        None => match spec.kind {
            LearnerKind::Er | LearnerKind::Ace | LearnerKind::CosineFc => Some(feature_dim),
            _ => None,
        },
    };
    match spec.kind {
        LearnerKind::Acm => Ok(AnyLearner::Acm(AcmLearner {
            memory: AcmMemory::new(spec.neighbors)?,
        })),
        LearnerKind::Blind => Ok(AnyLearner::Blind(BlindLearner::new(spec.blind_window)?)),
        kind => {
            let head = match kind {
                LearnerKind::CosineFc => {
                    LinearHead::cosine(num_classes, feature_dim, spec.gamma, adapter_rank, rng)?
                }
                _ => LinearHead::dot(num_classes, feature_dim, adapter_rank)?,
            };
            let loss = if kind == LearnerKind::Ace {
                LossKind::Ace
            } else {
                LossKind::CrossEntropy
            };
            Ok(AnyLearner::Gradient(GradientLearner::new(
                head,
                loss,
                SgdConfig {
                    learning_rate: F::of_f64(spec.learning_rate),
                    weight_decay: F::of_f64(spec.weight_decay),
                },
                kind,
            )))
        }
    }
}
