//! Streaming metric accumulators: running accuracy over scored samples and
//! the retention (backward-transfer) report for the final model.
//!
//! Accuracies are held as exact integer counters, so the streamed value is
//! identical to a one-shot recomputation no matter how many updates it went
//! through; the running-average recursion is exposed only as the derived
//! ratio.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stream::TestStream;

/// Running accuracy over everything scored so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunningAccuracy {
    correct: u64,
    scored: u64,
}

impl RunningAccuracy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds one scored batch into the counters.
    pub fn update(&mut self, correct: u64, scored: u64) -> Result<()> {
        if correct > scored {
            return Err(Error::Contract(format!(
                "correct count {correct} exceeds scored count {scored}"
            )));
        }
        self.correct += correct;
        self.scored += scored;
        Ok(())
    }

    /// Counter addition, for aggregating accumulators from parallel runs.
    pub fn merge(&mut self, other: RunningAccuracy) {
        self.correct += other.correct;
        self.scored += other.scored;
    }

    pub fn counts(&self) -> (u64, u64) {
        (self.correct, self.scored)
    }

    /// The derived accuracy; `None` until anything has been scored.
    pub fn value(&self) -> Option<f64> {
        (self.scored > 0).then(|| self.correct as f64 / self.scored as f64)
    }
}

/// Exact-match counts for a batch of predictions: (correct, scored).
pub fn batch_accuracy(predictions: &[usize], truths: &[usize]) -> Result<(u64, u64)> {
    if predictions.len() != truths.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let correct = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p == t)
        .count() as u64;
    Ok((correct, predictions.len() as u64))
}

/// Correct/total counters for one retention bin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinCounts {
    pub correct: u64,
    pub count: u64,
}

impl BinCounts {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.count as f64
    }
}

/// Accuracy of the final model on held-out samples, binned by the training
/// step each sample is aligned to, plus the overall backward transfer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RetentionReport {
    bins: BTreeMap<usize, BinCounts>,
    total: BinCounts,
}

impl RetentionReport {
    /// Per-step bins in ascending step order; empty bins never appear.
    pub fn bins(&self) -> &BTreeMap<usize, BinCounts> {
        &self.bins
    }

    /// Overall accuracy of the final model on all test samples, `None` when
    /// there was no test stream.
    pub fn bwt_at_t(&self) -> Option<f64> {
        (self.total.count > 0).then(|| self.total.accuracy())
    }

    pub fn totals(&self) -> BinCounts {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total.count == 0
    }
}

/// Bins final-model predictions over the test stream by aligned step.
pub fn backward_transfer<F: Scalar>(
    final_predictions: &[usize],
    test: &TestStream<F>,
    final_step: usize,
) -> Result<RetentionReport> {
    if final_predictions.len() != test.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} test samples",
            final_predictions.len(),
            test.len()
        )));
    }
    let mut report = RetentionReport::default();
    for ((pred, sample), &step) in final_predictions
        .iter()
        .zip(test.samples())
        .zip(test.step_of())
    {
        if step > final_step {
            return Err(Error::Contract(format!(
                "test sample aligned to step {step} beyond final step {final_step}"
            )));
        }
        let bin = report.bins.entry(step).or_default();
        bin.count += 1;
        report.total.count += 1;
        if *pred == sample.label {
            bin.correct += 1;
            report.total.correct += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{LabeledStream, Sample};
    use proptest::prelude::*;

    #[test]
    fn running_accuracy_counts() {
        let mut acc = RunningAccuracy::new();
        assert_eq!(acc.value(), None);
        acc.update(1, 1).unwrap();
        assert_eq!(acc.value(), Some(1.0));

        let mut acc = RunningAccuracy::new();
        for correct in [1u64, 0, 1] {
            acc.update(correct, 1).unwrap();
        }
        assert_eq!(acc.value(), Some(2.0 / 3.0));

        let mut acc = RunningAccuracy::new();
        acc.update(1, 2).unwrap();
        acc.update(2, 2).unwrap();
        assert_eq!(acc.value(), Some(3.0 / 4.0));

        assert!(matches!(acc.update(3, 2), Err(Error::Contract(_))));
    }

    #[test]
    fn running_average_recursion_identity() {
        // The per-sample recursion A_t = (A_{t-1} (t-1) + a_t) / t over the
        // flattened record equals the counter ratio.
        let outcomes = [1u64, 0, 1, 1, 0, 0, 1, 1, 1, 0, 1];
        let mut acc = RunningAccuracy::new();
        let mut recursion = 0.0f64;
        for (t, &a) in outcomes.iter().enumerate() {
            acc.update(a, 1).unwrap();
            recursion = (recursion * t as f64 + a as f64) / (t + 1) as f64;
        }
        assert!((acc.value().unwrap() - recursion).abs() < 1e-15);
    }

    #[test]
    fn batch_accuracy_counts_exact_matches() {
        assert_eq!(batch_accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), (3, 3));
        assert_eq!(batch_accuracy(&[1, 2, 3], &[0, 2, 0]).unwrap(), (1, 3));
        assert_eq!(batch_accuracy(&[], &[]).unwrap(), (0, 0));
        assert!(batch_accuracy(&[1], &[]).is_err());
    }

    fn test_stream(labels: &[usize], steps: &[usize], c: usize) -> TestStream<f32> {
        let samples = labels
            .iter()
            .enumerate()
            .map(|(i, &y)| Sample {
                index: i,
                timestamp: i as u64,
                features: vec![0.0],
                label: y,
            })
            .collect();
        let stream = LabeledStream::new(samples, c, 1).unwrap();
        TestStream::new(stream, steps.to_vec(), *steps.iter().max().unwrap()).unwrap()
    }

    #[test]
    fn backward_transfer_bins_and_weighted_mean() {
        let test = test_stream(&[0, 1, 0, 1], &[0, 0, 3, 3], 2);
        let perfect = backward_transfer(&[0, 1, 0, 1], &test, 3).unwrap();
        assert_eq!(perfect.bwt_at_t(), Some(1.0));
        assert!(perfect.bins().values().all(|b| b.accuracy() == 1.0));

        let wrong = backward_transfer(&[1, 0, 1, 0], &test, 3).unwrap();
        assert_eq!(wrong.bwt_at_t(), Some(0.0));

        // Bins (1 of 2) and (2 of 2): per-step 0.5 and 1.0, overall 0.75.
        let mixed = backward_transfer(&[0, 0, 0, 1], &test, 3).unwrap();
        let accs: Vec<f64> = mixed.bins().values().map(|b| b.accuracy()).collect();
        assert_eq!(accs, vec![0.5, 1.0]);
        assert_eq!(mixed.bwt_at_t(), Some(0.75));

        assert!(backward_transfer(&[0, 1], &test, 3).is_err());
    }

    proptest! {
        /// Streaming equals one-shot recomputation exactly, and merge equals
        /// concatenation.
        #[test]
        fn streaming_matches_oneshot(batches in proptest::collection::vec((0u64..50, 0u64..50), 0..40)) {
            let mut acc = RunningAccuracy::new();
            let mut total_c = 0u64;
            let mut total_s = 0u64;
            let mut left = RunningAccuracy::new();
            let mut right = RunningAccuracy::new();
            for (i, &(a, b)) in batches.iter().enumerate() {
                let (c, s) = (a.min(b), a.max(b));
                acc.update(c, s).unwrap();
                if i % 2 == 0 { left.update(c, s).unwrap() } else { right.update(c, s).unwrap() }
                total_c += c;
                total_s += s;
            }
            prop_assert_eq!(acc.counts(), (total_c, total_s));
            left.merge(right);
            prop_assert_eq!(left.counts(), acc.counts());
            if total_s > 0 {
                prop_assert_eq!(acc.value().unwrap(), total_c as f64 / total_s as f64);
            }
        }

        /// The weighted mean of per-bin accuracies reproduces the overall rate.
        #[test]
        fn retention_weighted_mean_identity(
            labels in proptest::collection::vec(0usize..3, 1..80),
            preds in proptest::collection::vec(0usize..3, 80),
        ) {
            let steps: Vec<usize> = (0..labels.len()).map(|i| i / 7).collect();
            let test = test_stream(&labels, &steps, 3);
            let report = backward_transfer(&preds[..labels.len()], &test, steps[labels.len()-1]).unwrap();
            let weighted: f64 = report
                .bins()
                .values()
                .map(|b| b.accuracy() * b.count as f64)
                .sum::<f64>() / report.totals().count as f64;
            prop_assert!((weighted - report.bwt_at_t().unwrap()).abs() < 1e-12);
        }
    }
}
