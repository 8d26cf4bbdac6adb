//! Experiment orchestration: the per-step evaluate-then-train loop with shift
//! bookkeeping, compute-budget enforcement, retention evaluation, and
//! parameter sweeps.
//!
//! Step order is fixed: score the (possibly shifted) evaluation window with
//! the current model, insert the incoming batch into the replay buffer, then
//! spend the step's update budget. Everything is deterministic given the
//! config seed.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::buffer::{Buffer, SamplerKind};
use crate::error::{Error, Result};
use crate::io::load_stream;
use crate::learners::{build_learner, LearnerKind, LearnerSpec, OnlineLearner, UpdateContext};
use crate::metrics::{backward_transfer, batch_accuracy, RetentionReport, RunningAccuracy};
use crate::scalar::Scalar;
use crate::stream::{split_holdout, EvalProtocol, LabeledStream, TestStream};
use crate::synth::{generate, BurstSpec};

/// Compute allowance per stream step, in model-update equivalents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    pub units_per_step: f64,
    /// Declared cost of one update per learner family. Cost 0 marks
    /// update-once-per-step learners.
    pub cost_per_update: BTreeMap<LearnerKind, f64>,
}

/// Gradient learners cost one unit per update; the memory and label-only
/// learners are declared free.
pub fn default_costs() -> BTreeMap<LearnerKind, f64> {
    LearnerKind::all()
        .into_iter()
        .map(|k| (k, if k.is_gradient() { 1.0 } else { 0.0 }))
        .collect()
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            units_per_step: 1.0, // fast-stream default: one update per batch
            cost_per_update: default_costs(),
        }
    }
}

impl BudgetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.units_per_step.is_finite() && self.units_per_step > 0.0) {
            return Err(Error::Config(format!(
                "units_per_step must be positive, got {}",
                self.units_per_step
            )));
        }
        for (kind, &cost) in &self.cost_per_update {
            if !(cost.is_finite() && cost >= 0.0) {
                return Err(Error::Config(format!(
                    "cost_per_update for {kind:?} must be >= 0, got {cost}"
                )));
            }
        }
        Ok(())
    }
}

/// Updates a learner of the given family may perform per step:
/// `floor(units / cost)`, with cost-0 learners pinned to once per step.
pub fn updates_allowed(budget: &BudgetConfig, kind: LearnerKind) -> Result<usize> {
    budget.validate()?;
    let cost = *budget.cost_per_update.get(&kind).ok_or_else(|| {
        Error::Config(format!("no cost_per_update entry for learner kind {kind:?}"))
    })?;
    if cost == 0.0 {
        return Ok(1);
    }
    Ok((budget.units_per_step / cost).floor() as usize)
}

/// Where the stream comes from: generated or loaded from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StreamSource {
    Synthetic(BurstSpec),
    Files { features: PathBuf, labels: PathBuf },
}

impl StreamSource {
    pub fn load(&self) -> Result<LabeledStream<f32>> {
        match self {
            StreamSource::Synthetic(spec) => generate(spec),
            StreamSource::Files { features, labels } => load_stream(features, labels),
        }
    }
}

fn default_sampler() -> SamplerKind {
    SamplerKind::Uniform
}
fn default_holdout() -> f64 {
    0.1
}
fn default_output() -> PathBuf {
    PathBuf::from("run_out")
}

/// One fully reproducible experiment. A config file plus nothing else
/// determines the run, including every random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub stream: StreamSource,
    #[serde(default)]
    pub protocol: EvalProtocol,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    pub learner: LearnerSpec,
    #[serde(default)]
    pub budget: BudgetConfig,
    /// Fraction of the stream held out for retention scoring; 0 disables the
    /// holdout and the retention report.
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        self.learner.validate()?;
        self.budget.validate()?;
        if let StreamSource::Synthetic(spec) = &self.stream {
            spec.validate()?;
        }
        if !(self.holdout_fraction.is_finite()
            && (0.0..1.0).contains(&self.holdout_fraction))
        {
            return Err(Error::Config(format!(
                "holdout_fraction must lie in [0, 1), got {}",
                self.holdout_fraction
            )));
        }
        // Fail early if the budget has no entry for the learner in use.
        updates_allowed(&self.budget, self.learner.kind)?;
        Ok(())
    }
}

/// Per-step record emitted by the harness, one JSON line each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub trained_on: (usize, usize),
    pub evaluated_range: Option<(usize, usize)>,
    pub correct: u64,
    pub scored: u64,
    pub running_accuracy: Option<f64>,
    pub updates: usize,
}

/// Final aggregates of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub scored: u64,
    pub correct: u64,
    /// Running accuracy over all scored evaluation windows.
    pub final_accuracy: Option<f64>,
    /// Accuracy of the final model on the holdout, when one exists.
    pub bwt_at_t: Option<f64>,
    pub total_updates: u64,
    pub wall_time_s: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub retention: RetentionReport,
    pub summary: RunSummary,
}

const SALT_SPLIT: u64 = 1;
const SALT_LEARNER: u64 = 2;
const SALT_SAMPLER: u64 = 3;

/// Stable per-component seed derivation.
fn derive_seed(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Seed for sweep grid point `index`, derived from the base seed.
pub fn sweep_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs the experiment a config describes end to end.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let stream = cfg.stream.load()?;
    run_on_stream(cfg, stream)
}

/// Like [`run_experiment`] but on an already-materialized stream.
pub fn run_on_stream(cfg: &ExperimentConfig, stream: LabeledStream<f32>) -> Result<RunOutput> {
    cfg.validate()?;
    let b = cfg.protocol.batch_size;
    let (train, test) = if cfg.holdout_fraction > 0.0 {
        let (tr, te) = split_holdout(
            &stream,
            cfg.holdout_fraction,
            derive_seed(cfg.seed, SALT_SPLIT),
            b,
        )?;
        (tr, Some(te))
    } else {
        (stream, None)
    };
    let mut init_rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, SALT_LEARNER));
    let mut learner = build_learner::<f32>(
        &cfg.learner,
        train.num_classes(),
        train.feature_dim(),
        &mut init_rng,
    )?;
    let allowance = updates_allowed(&cfg.budget, cfg.learner.kind)?;
    run_with_learner(
        &train,
        test.as_ref(),
        &cfg.protocol,
        cfg.sampler,
        allowance,
        &mut learner,
        derive_seed(cfg.seed, SALT_SAMPLER),
    )
}

/// The core evaluate-then-train loop, generic over learner and scalar so
/// instrumented learners and f64 shadow runs can drive it too.
pub fn run_with_learner<F: Scalar, L: OnlineLearner<F>>(
    train: &LabeledStream<F>,
    test: Option<&TestStream<F>>,
    protocol: &EvalProtocol,
    sampler: SamplerKind,
    updates_per_step: usize,
    learner: &mut L,
    sampler_seed: u64,
) -> Result<RunOutput> {
    protocol.validate()?;
    let started = Instant::now();
    let n = train.len();
    let b = protocol.batch_size;
    let steps = train.num_steps(b);
    let mut rng = ChaCha12Rng::seed_from_u64(sampler_seed);
    let mut buffer = Buffer::new();
    let mut acc = RunningAccuracy::new();
    let mut records = Vec::with_capacity(steps);
    let mut total_updates = 0u64;

    for t in 0..steps {
        // 1. Score the shifted evaluation window with the pre-update model.
        //    Learners with no state yet (first step of memory or label-only
        //    learners) are excluded from scoring rather than charged errors.
        let eval = protocol.eval_indices(t, n);
        let (mut correct, mut scored) = (0u64, 0u64);
        if let Some(r) = eval.clone() {
            if learner.can_predict() {
                let samples = &train.samples()[r];
                let preds = learner
                    .predict_batch(samples)
                    .map_err(Error::at_step(t))?;
                let truths: Vec<usize> = samples.iter().map(|s| s.label).collect();
                let (c, s) = batch_accuracy(&preds, &truths).map_err(Error::at_step(t))?;
                acc.update(c, s).map_err(Error::at_step(t))?;
                correct = c;
                scored = s;
            }
        }

        // 2. The incoming batch enters the buffer before training, so FIFO
        //    batches contain the newest samples including this step's.
        let batch_range = train.batch_range(t, b).map_err(Error::at_step(t))?;
        buffer.insert_batch(batch_range.clone());

        // 3. Spend the step's update budget.
        let incoming: Vec<usize> = batch_range.clone().collect();
        let mut ctx = UpdateContext {
            stream: train,
            buffer: &buffer,
            sampler,
            batch_size: b,
            n_updates: updates_per_step,
            incoming: &incoming,
            rng: &mut rng,
        };
        let performed = learner.update(&mut ctx).map_err(Error::at_step(t))?;
        total_updates += performed as u64;

        records.push(StepRecord {
            step: t,
            trained_on: (batch_range.start, batch_range.end),
            evaluated_range: eval.map(|r| (r.start, r.end)),
            correct,
            scored,
            running_accuracy: acc.value(),
            updates: performed,
        });
    }

    let retention = match test {
        Some(test) if learner.can_predict() => {
            let preds = learner.predict_batch(test.samples())?;
            backward_transfer(&preds, test, train.final_step(b))?
        }
        _ => RetentionReport::default(),
    };

    let (correct, scored) = acc.counts();
    let summary = RunSummary {
        steps,
        scored,
        correct,
        final_accuracy: acc.value(),
        bwt_at_t: retention.bwt_at_t(),
        total_updates,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        records,
        retention,
        summary,
    })
}

/// Which hyperparameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    LearningRate,
    WeightDecay,
}

/// A one-dimensional hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Outcome of one grid point; failures are recorded, not propagated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub param: SweepParam,
    pub value: f64,
    pub seed: u64,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

/// Runs one experiment per grid value. Points run independently (and may run
/// in parallel); results come back in grid order regardless of scheduling,
/// and a failing point does not abort the rest.
pub fn run_sweep(base: &ExperimentConfig, axis: &SweepAxis) -> Result<Vec<SweepPoint>> {
    if axis.values.is_empty() {
        return Err(Error::Config("sweep grid must be non-empty".into()));
    }
    base.validate()?;
    Ok(axis
        .values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| {
            let mut cfg = base.clone();
            match axis.param {
                SweepParam::LearningRate => cfg.learner.learning_rate = value,
                SweepParam::WeightDecay => cfg.learner.weight_decay = value,
            }
            cfg.seed = sweep_seed(base.seed, index);
            match run_experiment(&cfg) {
                Ok(out) => SweepPoint {
                    index,
                    param: axis.param,
                    value,
                    seed: cfg.seed,
                    summary: Some(out.summary),
                    error: None,
                },
                Err(e) => SweepPoint {
                    index,
                    param: axis.param,
                    value,
                    seed: cfg.seed,
                    summary: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}
