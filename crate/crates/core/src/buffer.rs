//! Unbounded replay store over stream indices with FIFO, uniform, and mixed
//! batch construction.
//!
//! The buffer stores indices into an immutable stream rather than copies;
//! nothing is ever evicted.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Batch-construction strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// The newest stored entries, in insertion order.
    Fifo,
    /// Uniform without replacement over everything stored.
    Uniform,
    /// Newest half by FIFO plus a uniform half; the halves may overlap.
    Mixed,
}

/// Append-only store of sample indices in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Buffer {
    entries: Vec<usize>,
}

impl Buffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    /// Appends a batch, preserving stream order.
    pub fn insert_batch(&mut self, batch: impl IntoIterator<Item = usize>) {
        self.entries.extend(batch);
    }

    /// The last `min(b, len)` entries in insertion order.
    pub fn sample_fifo(&self, b: usize) -> Result<Vec<usize>> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let take = b.min(self.entries.len());
        Ok(self.entries[self.entries.len() - take..].to_vec())
    }

    /// `min(b, len)` entries drawn uniformly without replacement.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, b: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let take = b.min(self.entries.len());
        Ok(rand::seq::index::sample(rng, self.entries.len(), take)
            .into_iter()
            .map(|i| self.entries[i])
            .collect())
    }

    /// `ceil(b/2)` newest entries followed by `floor(b/2)` uniform draws over
    /// all entries; duplicates across the two halves are permitted.
    pub fn sample_mixed<R: Rng + ?Sized>(&self, b: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let mut batch = self.sample_fifo(b.div_ceil(2))?;
        batch.extend(self.sample_uniform(b / 2, rng)?);
        Ok(batch)
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        kind: SamplerKind,
        b: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        match kind {
            SamplerKind::Fifo => self.sample_fifo(b),
            SamplerKind::Uniform => self.sample_uniform(b, rng),
            SamplerKind::Mixed => self.sample_mixed(b, rng),
        }
    }
}
