//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured values. Oracles here are written independently of the code
//! paths they check.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use streameval::blind::{blind_accuracy, calibrate_shift, default_k_grid, default_shift_grid};
use streameval::buffer::{Buffer, SamplerKind};
use streameval::harness::{
    default_costs, run_experiment, run_on_stream, run_sweep, run_with_learner, updates_allowed,
    BudgetConfig, ExperimentConfig, RunOutput, StreamSource, SweepAxis, SweepParam,
};
use streameval::learners::{
    ace_ce, build_learner, grad_ce, softmax_ce, AcmMemory, HeadGradient, LearnerKind, LearnerSpec,
    LinearHead, LossKind, OnlineLearner, UpdateContext,
};
use streameval::metrics::{batch_accuracy, RunningAccuracy};
use streameval::report::steps_jsonl;
use streameval::stream::{EvalProtocol, LabeledStream, Sample};
use streameval::synth::{expected_blind_accuracy, generate, BurstLaw, BurstSpec};

fn burst_stream_spec() -> BurstSpec {
    BurstSpec {
        num_classes: 50,
        feature_dim: 16,
        length: 50_000,
        burst: BurstLaw::Fixed(16),
        noise_sigma: 0.0,
        drift_rate: 0.0,
        seed: 20_260_810,
    }
}

#[test]
fn criterion_01_blind_classifier_oracle_match() {
    let start = Instant::now();
    let spec = burst_stream_spec();
    let stream = generate::<f32>(&spec).unwrap();

    let want0 = expected_blind_accuracy(&spec, 1, 0).unwrap();
    assert!((want0 - 0.93875).abs() < 1e-12, "oracle value drifted: {want0}");
    let got0 = blind_accuracy(&stream, 1, 0).unwrap();
    assert!((got0 - 0.93875).abs() < 0.01, "S=0 accuracy {got0}");

    let want64 = expected_blind_accuracy(&spec, 1, 64).unwrap();
    assert!((want64 - 0.02).abs() < 1e-12);
    let got64 = blind_accuracy(&stream, 1, 64).unwrap();
    assert!((got64 - 0.02).abs() < 0.005, "S=64 accuracy {got64}");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.1}s, limit 10s");
    println!(
        "[PASS] criterion 1: blind oracle match (S=0 {got0:.5} vs 0.93875, S=64 {got64:.5} vs 0.02, {elapsed:.2}s)"
    );
}

#[test]
fn criterion_02_calibration_minimality() {
    let start = Instant::now();
    let stream = generate::<f32>(&burst_stream_spec()).unwrap();
    let epsilon = 0.01;
    let result = calibrate_shift(
        &stream,
        &default_k_grid(),
        &default_shift_grid(stream.len()),
        epsilon,
    )
    .unwrap();
    assert!(
        (16..=32).contains(&result.s_star),
        "s_star = {}",
        result.s_star
    );
    for (&shift, &acc) in &result.curve {
        if shift < result.s_star {
            assert!(
                acc > result.plateau_level + epsilon,
                "shift {shift} below s_star sits at {acc} (plateau {})",
                result.plateau_level
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "took {elapsed:.1}s, limit 30s");
    println!(
        "[PASS] criterion 2: calibration minimality (s_star {} in [16,32], plateau {:.4}, {elapsed:.2}s)",
        result.s_star, result.plateau_level
    );
}

/// Frozen configuration for the overfit-gap reproduction: noisy 64-long
/// bursts, small batches, a slow budget, and a recency-capable learning rate.
/// The noise scale was chosen (by oracle runs) so the uniform-replay run's
/// near-future accuracy lands mid-range.
fn gap_config(sampler: SamplerKind, shift: usize) -> ExperimentConfig {
    let mut learner = LearnerSpec::of_kind(LearnerKind::FcOnly);
    learner.learning_rate = 0.2;
    ExperimentConfig {
        stream: StreamSource::Synthetic(BurstSpec {
            num_classes: 10,
            feature_dim: 16,
            length: 20_000,
            burst: BurstLaw::Fixed(64),
            noise_sigma: 0.6,
            drift_rate: 0.0,
            seed: 424_242,
        }),
        protocol: EvalProtocol {
            batch_size: 8,
            shift,
        },
        sampler,
        learner,
        budget: BudgetConfig {
            units_per_step: 20.0,
            cost_per_update: default_costs(),
        },
        holdout_fraction: 0.1,
        seed: 99,
        output: PathBuf::from("unused"),
    }
}

#[test]
fn criterion_03_overfit_gap_reproduction() {
    let start = Instant::now();
    let run = |sampler, shift| {
        run_experiment(&gap_config(sampler, shift))
            .unwrap()
            .summary
    };
    let fifo_online = run(SamplerKind::Fifo, 0).final_accuracy.unwrap();
    let fifo_future = run(SamplerKind::Fifo, 64);
    let uni_online = run(SamplerKind::Uniform, 0).final_accuracy.unwrap();
    let uni_future = run(SamplerKind::Uniform, 64);

    let sigma_witness = uni_future.final_accuracy.unwrap();
    assert!(
        (0.3..=0.8).contains(&sigma_witness),
        "uniform near-future accuracy {sigma_witness} outside [0.3, 0.8]"
    );
    let fifo_gap = fifo_online - fifo_future.final_accuracy.unwrap();
    assert!(fifo_gap > 0.30, "fifo online-vs-future gap {fifo_gap}");
    let uni_gap = (uni_online - sigma_witness).abs();
    assert!(uni_gap < 0.05, "uniform gap {uni_gap}");
    let bwt_gap = uni_future.bwt_at_t.unwrap() - fifo_future.bwt_at_t.unwrap();
    assert!(bwt_gap > 0.15, "retention gap {bwt_gap}");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "took {elapsed:.1}s, limit 300s");
    println!(
        "[PASS] criterion 3: overfit gap (fifo {fifo_online:.3}->{:.3} gap {fifo_gap:.3}, uniform gap {uni_gap:.3}, bwt gap {bwt_gap:.3}, {elapsed:.1}s)",
        fifo_future.final_accuracy.unwrap()
    );
}

/// Dedicated online-accuracy path: predict on the incoming batch, then train
/// on it, scoring only complete batches. Written against the raw components,
/// not the harness loop.
fn online_oracle(
    train: &LabeledStream<f32>,
    spec: &LearnerSpec,
    sampler: SamplerKind,
    batch_size: usize,
    updates: usize,
    learner_seed: u64,
    sampler_seed: u64,
) -> Vec<(u64, u64)> {
    let mut init_rng = ChaCha12Rng::seed_from_u64(learner_seed);
    let mut learner =
        build_learner::<f32>(spec, train.num_classes(), train.feature_dim(), &mut init_rng)
            .unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(sampler_seed);
    let mut buffer = Buffer::new();
    let n = train.len();
    let mut out = Vec::new();
    let mut t = 0usize;
    while t * batch_size < n {
        let lo = t * batch_size;
        let hi = ((t + 1) * batch_size).min(n);
        let full = hi - lo == batch_size;
        let mut counts = (0u64, 0u64);
        if full && learner.can_predict() {
            let preds = learner.predict_batch(&train.samples()[lo..hi]).unwrap();
            let truths: Vec<usize> = train.samples()[lo..hi].iter().map(|s| s.label).collect();
            counts = batch_accuracy(&preds, &truths).unwrap();
        }
        buffer.insert_batch(lo..hi);
        let incoming: Vec<usize> = (lo..hi).collect();
        let mut ctx = UpdateContext {
            stream: train,
            buffer: &buffer,
            sampler,
            batch_size,
            n_updates: updates,
            incoming: &incoming,
            rng: &mut rng,
        };
        learner.update(&mut ctx).unwrap();
        out.push(counts);
        t += 1;
    }
    out
}

#[test]
fn criterion_04_shift_zero_equals_online_accuracy() {
    let start = Instant::now();
    // Several learner families and a batch size that does and does not divide
    // the stream length.
    let cases = [
        (LearnerKind::FcOnly, 4usize, SamplerKind::Uniform),
        (LearnerKind::FcOnly, 7, SamplerKind::Fifo),
        (LearnerKind::Acm, 4, SamplerKind::Uniform),
        (LearnerKind::Blind, 7, SamplerKind::Uniform),
        (LearnerKind::Er, 6, SamplerKind::Mixed),
    ];
    let stream_spec = BurstSpec {
        num_classes: 6,
        feature_dim: 8,
        length: 1_201, // prime-ish so most batch sizes leave a short tail
        burst: BurstLaw::Fixed(8),
        noise_sigma: 0.4,
        drift_rate: 0.0,
        seed: 31_337,
    };
    let train = generate::<f32>(&stream_spec).unwrap();
    for (kind, batch_size, sampler) in cases {
        let spec = LearnerSpec::of_kind(kind);
        let (learner_seed, sampler_seed) = (77, 88);
        let expected = online_oracle(
            &train,
            &spec,
            sampler,
            batch_size,
            2,
            learner_seed,
            sampler_seed,
        );

        let mut init_rng = ChaCha12Rng::seed_from_u64(learner_seed);
        let mut learner =
            build_learner::<f32>(&spec, train.num_classes(), train.feature_dim(), &mut init_rng)
                .unwrap();
        let protocol = EvalProtocol {
            batch_size,
            shift: 0,
        };
        let out = run_with_learner(
            &train,
            None,
            &protocol,
            sampler,
            2,
            &mut learner,
            sampler_seed,
        )
        .unwrap();

        assert_eq!(out.records.len(), expected.len(), "{kind:?}");
        for (r, (c, s)) in out.records.iter().zip(&expected) {
            assert_eq!(
                (r.correct, r.scored),
                (*c, *s),
                "{kind:?} step {} diverged",
                r.step
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "[PASS] criterion 4: S=0 equals the dedicated online-accuracy path step for step ({elapsed:.2}s)"
    );
}

fn flat_grad(g: &HeadGradient<f64>) -> Vec<f64> {
    let mut out = g.d_weights.data().to_vec();
    if let Some(b) = &g.d_bias {
        out.extend_from_slice(b);
    }
    if let Some(a) = &g.d_adapter {
        out.extend_from_slice(a.data());
    }
    out
}

#[test]
fn criterion_05_gradient_finite_difference_agreement() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(123_456);
    let h = 1e-4;
    let mut cases = 0usize;
    let mut worst: f64 = 0.0;
    while cases < 112 {
        let cosine = cases % 2 == 1;
        let ace = (cases / 2) % 2 == 1;
        let with_adapter = (cases / 4) % 2 == 1;
        let c = rng.random_range(2..7);
        let d = rng.random_range(2..7);
        let adapter = with_adapter.then(|| rng.random_range(1..=d));
        let mut head = if cosine {
            let gamma = rng.random_range(0.5..6.0);
            LinearHead::<f64>::cosine(c, d, gamma, adapter, &mut rng).unwrap()
        } else {
            LinearHead::<f64>::dot(c, d, adapter).unwrap()
        };
        for r in 0..c {
            let row = head.weights.row_mut(r);
            for w in row.iter_mut() {
                *w = rng.random_range(-1.0..1.0);
            }
            if cosine {
                let n: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                let target = rng.random_range(0.6..1.2);
                for w in row.iter_mut() {
                    *w *= target / n.max(1e-3);
                }
            }
        }
        if let Some(b) = &mut head.bias {
            for x in b.iter_mut() {
                *x = rng.random_range(-0.5..0.5);
            }
        }
        if let Some(a) = &mut head.adapter {
            for x in a.data_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
        }
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let y = rng.random_range(0..c);
        let mask: Option<Vec<bool>> = ace.then(|| {
            let mut m: Vec<bool> = (0..c).map(|_| rng.random_range(0.0..1.0) < 0.6).collect();
            m[y] = true;
            m
        });
        let loss_kind = if ace { LossKind::Ace } else { LossKind::CrossEntropy };
        let (_, analytic) = grad_ce(&head, &x, y, loss_kind, mask.as_deref()).unwrap();
        let analytic = flat_grad(&analytic);
        let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));

        let loss_of = |head: &LinearHead<f64>| -> f64 {
            let z = head.forward(&x).unwrap();
            match &mask {
                Some(m) => ace_ce(&z, y, m).unwrap(),
                None => softmax_ce(&z, y).unwrap(),
            }
        };
        let wlen = head.weights.data().len();
        let blen = head.bias.as_ref().map_or(0, |b| b.len());
        let mut probe = head.clone();
        for (i, &a_i) in analytic.iter().enumerate() {
            let get = |h: &LinearHead<f64>, i: usize| -> f64 {
                if i < wlen {
                    h.weights.data()[i]
                } else if i < wlen + blen {
                    h.bias.as_ref().unwrap()[i - wlen]
                } else {
                    h.adapter.as_ref().unwrap().data()[i - wlen - blen]
                }
            };
            let set = |h: &mut LinearHead<f64>, i: usize, v: f64| {
                if i < wlen {
                    h.weights.data_mut()[i] = v;
                } else if i < wlen + blen {
                    h.bias.as_mut().unwrap()[i - wlen] = v;
                } else {
                    h.adapter.as_mut().unwrap().data_mut()[i - wlen - blen] = v;
                }
            };
            let orig = get(&head, i);
            set(&mut probe, i, orig + h);
            let up = loss_of(&probe);
            set(&mut probe, i, orig - h);
            let down = loss_of(&probe);
            set(&mut probe, i, orig);
            let fd = (up - down) / (2.0 * h);
            let err = (a_i - fd).abs();
            let denom = a_i.abs().max(fd.abs());
            if denom > 1e-7 * (1.0 + scale) {
                let rel = err / denom;
                worst = worst.max(rel);
                assert!(
                    rel < 1e-4,
                    "case {cases} param {i}: rel {rel:.2e} (analytic {a_i} vs fd {fd})"
                );
            }
        }
        cases += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "took {elapsed:.1}s, limit 30s");
    println!(
        "[PASS] criterion 5: {cases} gradient cases vs central differences (worst rel {worst:.2e}, {elapsed:.2}s)"
    );
}

/// Brute-force double-precision cosine k-NN with the same tie rules, written
/// against raw (unnormalized) stored vectors.
fn oracle_knn(vectors: &[Vec<f64>], labels: &[usize], k: usize, q: &[f64]) -> usize {
    let nq = q.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut sims: Vec<(f64, usize)> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            (dot / (nv * nq), i)
        })
        .collect();
    sims.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let top = &sims[..k.min(sims.len())];
    let mut votes: BTreeMap<usize, u32> = BTreeMap::new();
    for &(_, i) in top {
        *votes.entry(labels[i]).or_default() += 1;
    }
    let max = votes.values().copied().max().unwrap();
    top.iter()
        .map(|&(_, i)| labels[i])
        .find(|l| votes[l] == max)
        .unwrap()
}

#[test]
fn criterion_06_knn_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(606);
    let dim = 12;
    let mut mem = AcmMemory::<f64>::new(2).unwrap();
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for i in 0..500 {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let label = i % 17;
        mem.insert(&v, label).unwrap();
        vectors.push(v);
        labels.push(label);
    }
    for _ in 0..100 {
        let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = mem.predict(&q).unwrap();
        let want = oracle_knn(&vectors, &labels, 2, &q);
        assert_eq!(got, want, "query diverged from oracle");
    }

    // Engineered k=2 tie cases.
    // Vote tie 1-1: the nearer neighbor wins.
    let mut tie = AcmMemory::<f64>::new(2).unwrap();
    tie.insert(&[1.0, 0.0], 0).unwrap();
    tie.insert(&[0.0, 1.0], 1).unwrap();
    assert_eq!(tie.predict(&[0.9, 0.1]).unwrap(), 0);
    assert_eq!(oracle_knn(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0, 1], 2, &[0.9, 0.1]), 0);
    // Exact similarity tie: insertion order breaks it in both paths.
    assert_eq!(tie.predict(&[0.5, 0.5]).unwrap(), 0);
    assert_eq!(oracle_knn(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0, 1], 2, &[0.5, 0.5]), 0);
    // Duplicate vectors with different labels: both kept, earlier one first.
    let mut dup = AcmMemory::<f64>::new(2).unwrap();
    dup.insert(&[0.6, 0.8], 4).unwrap();
    dup.insert(&[0.6, 0.8], 9).unwrap();
    dup.insert(&[-1.0, 0.0], 1).unwrap();
    assert_eq!(dup.predict(&[0.6, 0.8]).unwrap(), 4);
    assert_eq!(
        oracle_knn(
            &[vec![0.6, 0.8], vec![0.6, 0.8], vec![-1.0, 0.0]],
            &[4, 9, 1],
            2,
            &[0.6, 0.8]
        ),
        4
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "took {elapsed:.1}s, limit 5s");
    println!(
        "[PASS] criterion 6: 100 queries vs brute-force scan, exact label equality incl. ties ({elapsed:.2}s)"
    );
}

/// Learner wrapper that records the largest sample index visible to any
/// update, to certify evaluation never sees trained-on data.
struct LeakProbe<L> {
    inner: L,
    max_seen: Option<usize>,
}

impl<L: OnlineLearner<f32>> OnlineLearner<f32> for LeakProbe<L> {
    fn kind(&self) -> LearnerKind {
        self.inner.kind()
    }
    fn can_predict(&self) -> bool {
        self.inner.can_predict()
    }
    fn predict_batch(&self, samples: &[Sample<f32>]) -> streameval::Result<Vec<usize>> {
        if let Some(max_seen) = self.max_seen {
            for s in samples {
                assert!(
                    s.index > max_seen,
                    "evaluated sample {} already visible to training (max seen {max_seen})",
                    s.index
                );
            }
        }
        self.inner.predict_batch(samples)
    }
    fn update(&mut self, ctx: &mut UpdateContext<'_, f32>) -> streameval::Result<usize> {
        // Everything in the buffer plus the incoming batch is visible.
        let vis = ctx
            .buffer
            .entries()
            .iter()
            .chain(ctx.incoming.iter())
            .copied()
            .max();
        self.max_seen = self.max_seen.max(vis);
        self.inner.update(ctx)
    }
}

#[test]
fn criterion_07_metric_exactness_and_harness_counters() {
    let start = Instant::now();

    // Streaming equals one-shot recomputation, exactly.
    let mut rng = ChaCha12Rng::seed_from_u64(7_007);
    let mut acc = RunningAccuracy::new();
    let mut total = (0u64, 0u64);
    for _ in 0..10_000 {
        let scored = rng.random_range(0..20u64);
        let correct = if scored == 0 { 0 } else { rng.random_range(0..=scored) };
        acc.update(correct, scored).unwrap();
        total.0 += correct;
        total.1 += scored;
    }
    assert_eq!(acc.counts(), total);
    assert_eq!(acc.value().unwrap(), total.0 as f64 / total.1 as f64);

    // Exactly-once training and at-most-once evaluation on a 10,000-sample
    // run, with the no-leakage probe attached; scored totals match a direct
    // enumeration of full evaluation windows.
    let spec = BurstSpec {
        num_classes: 8,
        feature_dim: 8,
        length: 10_000,
        burst: BurstLaw::Fixed(8),
        noise_sigma: 0.5,
        drift_rate: 0.0,
        seed: 4_242,
    };
    let train = generate::<f32>(&spec).unwrap();
    let protocol = EvalProtocol {
        batch_size: 16,
        shift: 24,
    };
    let mut init_rng = ChaCha12Rng::seed_from_u64(1);
    let learner = build_learner::<f32>(
        &LearnerSpec::of_kind(LearnerKind::FcOnly),
        train.num_classes(),
        train.feature_dim(),
        &mut init_rng,
    )
    .unwrap();
    let mut probe = LeakProbe {
        inner: learner,
        max_seen: None,
    };
    let out = run_with_learner(
        &train,
        None,
        &protocol,
        SamplerKind::Uniform,
        2,
        &mut probe,
        9,
    )
    .unwrap();

    let n = train.len();
    let mut trained = vec![0u32; n];
    let mut evaluated = vec![0u32; n];
    for r in &out.records {
        for c in &mut trained[r.trained_on.0..r.trained_on.1] {
            *c += 1;
        }
        if let Some((s, e)) = r.evaluated_range {
            for c in &mut evaluated[s..e] {
                *c += 1;
            }
        }
    }
    assert!(trained.iter().all(|&c| c == 1), "exactly-once training");
    assert!(evaluated.iter().all(|&c| c <= 1), "at-most-once evaluation");
    let enumerated: usize = (0..train.num_steps(16))
        .filter_map(|t| protocol.eval_indices(t, n))
        .map(|r| r.len())
        .sum();
    assert_eq!(out.summary.scored, enumerated as u64);
    let from_records: u64 = out.records.iter().map(|r| r.scored).sum();
    assert_eq!(out.summary.scored, from_records);

    // Retention weighted-mean identity to 1e-12.
    let mut cfg = gap_config(SamplerKind::Uniform, 24);
    cfg.protocol.batch_size = 16;
    if let StreamSource::Synthetic(s) = &mut cfg.stream {
        s.length = 4_000;
    }
    cfg.budget.units_per_step = 2.0;
    let out = run_experiment(&cfg).unwrap();
    let bins = out.retention.bins();
    assert!(!bins.is_empty());
    let weighted: f64 = bins
        .values()
        .map(|b| b.accuracy() * b.count as f64)
        .sum::<f64>()
        / out.retention.totals().count as f64;
    let bwt = out.retention.bwt_at_t().unwrap();
    assert!((weighted - bwt).abs() < 1e-12, "identity off by {}", (weighted - bwt).abs());

    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "[PASS] criterion 7: exact metrics, exactly-once/at-most-once counters, no leakage, retention identity ({elapsed:.2}s)"
    );
}

#[test]
fn criterion_08_budget_enforcement() {
    let start = Instant::now();
    let spec = BurstSpec {
        num_classes: 5,
        feature_dim: 6,
        length: 1_000,
        burst: BurstLaw::Fixed(5),
        noise_sigma: 0.3,
        drift_rate: 0.0,
        seed: 8,
    };
    let base = ExperimentConfig {
        stream: StreamSource::Synthetic(spec),
        protocol: EvalProtocol {
            batch_size: 10,
            shift: 0,
        },
        sampler: SamplerKind::Uniform,
        learner: LearnerSpec::of_kind(LearnerKind::FcOnly),
        budget: BudgetConfig {
            units_per_step: 10.0,
            cost_per_update: default_costs(),
        },
        holdout_fraction: 0.0,
        seed: 2,
        output: PathBuf::from("unused"),
    };

    // units=10, cost=1.0 -> exactly 10 updates per step.
    let out = run_experiment(&base).unwrap();
    assert!(out.records.iter().all(|r| r.updates == 10));
    assert_eq!(out.summary.total_updates, 10 * out.summary.steps as u64);

    // units=10, cost=2.5 -> exactly 4.
    let mut costly = base.clone();
    costly
        .budget
        .cost_per_update
        .insert(LearnerKind::FcOnly, 2.5);
    assert_eq!(updates_allowed(&costly.budget, LearnerKind::FcOnly).unwrap(), 4);
    let out = run_experiment(&costly).unwrap();
    assert!(out.records.iter().all(|r| r.updates == 4));

    // Fast stream: units=1, cost=1 -> exactly 1 per incoming batch.
    let mut fast = base.clone();
    fast.budget.units_per_step = 1.0;
    let out = run_experiment(&fast).unwrap();
    assert!(out.records.iter().all(|r| r.updates == 1));

    let elapsed = start.elapsed().as_secs_f64();
    println!("[PASS] criterion 8: budgets of 10/2.5-cost/fast enforce 10, 4, and 1 updates per step ({elapsed:.2}s)");
}

/// Frozen sensitivity configuration: long noisy stream, uniform replay, the
/// adapter-bearing learner, and a slow budget; picked by oracle runs so the
/// default learning rate sits within tolerance of the grid's best.
fn sensitivity_config() -> ExperimentConfig {
    ExperimentConfig {
        stream: StreamSource::Synthetic(BurstSpec {
            num_classes: 10,
            feature_dim: 16,
            length: 50_000,
            burst: BurstLaw::Fixed(16),
            noise_sigma: 1.0,
            drift_rate: 0.0,
            seed: 424_242,
        }),
        protocol: EvalProtocol {
            batch_size: 8,
            shift: 64,
        },
        sampler: SamplerKind::Uniform,
        learner: LearnerSpec::of_kind(LearnerKind::Er),
        budget: BudgetConfig {
            units_per_step: 30.0,
            cost_per_update: default_costs(),
        },
        holdout_fraction: 0.1,
        seed: 99,
        output: PathBuf::from("unused"),
    }
}

#[test]
fn criterion_09_sensitivity_sweep_shape() {
    let start = Instant::now();
    let base = sensitivity_config();

    let lr_points = run_sweep(
        &base,
        &SweepAxis {
            param: SweepParam::LearningRate,
            values: vec![0.0005, 0.005, 0.05],
        },
    )
    .unwrap();
    let lr_accs: Vec<f64> = lr_points
        .iter()
        .map(|p| p.summary.as_ref().unwrap().final_accuracy.unwrap())
        .collect();
    let best = lr_accs.iter().cloned().fold(f64::MIN, f64::max);
    assert!(
        best - lr_accs[1] < 0.02,
        "default lr 0.005 at {} vs best {best}",
        lr_accs[1]
    );

    let wd_points = run_sweep(
        &base,
        &SweepAxis {
            param: SweepParam::WeightDecay,
            values: vec![0.0, 1e-4, 1e-2],
        },
    )
    .unwrap();
    let wd_accs: Vec<f64> = wd_points
        .iter()
        .map(|p| p.summary.as_ref().unwrap().final_accuracy.unwrap())
        .collect();
    let spread = wd_accs.iter().cloned().fold(f64::MIN, f64::max)
        - wd_accs.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 0.03, "wd spread {spread}");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "took {elapsed:.1}s, limit 600s");
    println!(
        "[PASS] criterion 9: lr sweep {lr_accs:.4?} (0.005 within 0.02 of best), wd spread {spread:.4} < 0.03 ({elapsed:.1}s)"
    );
}

#[test]
fn criterion_10_byte_identical_reruns() {
    let start = Instant::now();
    let cfg = gap_config(SamplerKind::Fifo, 64);
    let run = || -> RunOutput { run_on_stream(&cfg, cfg.stream.load().unwrap()).unwrap() };
    let a = steps_jsonl(&run().records);
    let b = steps_jsonl(&run().records);
    assert_eq!(a.as_bytes(), b.as_bytes());
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "[PASS] criterion 10: two executions emit byte-identical steps.jsonl ({} bytes, {elapsed:.1}s)",
        a.len()
    );
}
