//! Training-free memory classifier: stores unit-normalized feature vectors
//! and predicts by k-nearest-neighbor vote under cosine similarity, with an
//! exact linear scan.

use crate::error::{Error, Result};
use crate::scalar::{dot, normalize, Scalar};

/// Accumulated feature memory with k-NN prediction (default k = 2).
#[derive(Debug, Clone)]
pub struct AcmMemory<F> {
    vectors: Vec<Vec<F>>,
    labels: Vec<usize>,
    k: usize,
}

impl<F: Scalar> AcmMemory<F> {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("neighbor count must be >= 1".into()));
        }
        Ok(Self {
            vectors: Vec::new(),
            labels: Vec::new(),
            k,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn stored(&self) -> impl Iterator<Item = (&[F], usize)> {
        self.vectors
            .iter()
            .map(|v| v.as_slice())
            .zip(self.labels.iter().copied())
    }

    /// Normalizes and appends one vector. Duplicates are kept.
    pub fn insert(&mut self, features: &[F], label: usize) -> Result<()> {
        let mut v = features.to_vec();
        if !normalize(&mut v) {
            return Err(Error::Contract(
                "cannot normalize a zero-norm feature vector".into(),
            ));
        }
        self.vectors.push(v);
        self.labels.push(label);
        Ok(())
    }

    /// Majority vote over the `min(k, len)` nearest stored vectors by cosine
    /// similarity. A vote tie goes to the label of the nearer neighbor;
    /// similarity ties keep the earlier-inserted vector first.
    pub fn predict(&self, x: &[F]) -> Result<usize> {
        if self.vectors.is_empty() {
            return Err(Error::EmptyMemory);
        }
        let k = self.k.min(self.vectors.len());
        // Stored vectors are unit norm, so ranking by dot product matches
        // ranking by cosine similarity for any query scale.
        let mut top: Vec<(F, usize)> = Vec::with_capacity(k + 1);
        for (i, v) in self.vectors.iter().enumerate() {
            let sim = dot(v, x);
            let pos = top.partition_point(|&(s, _)| s >= sim);
            if pos < k {
                top.insert(pos, (sim, i));
                top.truncate(k);
            }
        }
        // Vote; on ties the best-ranked neighbor of a tied label wins.
        let mut votes: Vec<(usize, u32)> = Vec::with_capacity(k);
        for &(_, i) in &top {
            let label = self.labels[i];
            match votes.iter_mut().find(|(l, _)| *l == label) {
                Some(entry) => entry.1 += 1,
                None => votes.push((label, 1)),
            }
        }
        let max_votes = votes.iter().map(|&(_, n)| n).max().expect("k >= 1");
        let winner = top
            .iter()
            .map(|&(_, i)| self.labels[i])
            .find(|label| votes.iter().any(|&(l, n)| l == *label && n == max_votes))
            .expect("some neighbor carries the max vote");
        Ok(winner)
    }
}
