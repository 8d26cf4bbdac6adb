//! Synthetic bursty stream generator with controllable label autocorrelation.
//!
//! Streams are concatenations of bursts: each burst draws a class uniformly
//! at random (independently of the previous burst, so consecutive bursts may
//! repeat a class), draws a length from the burst law, and emits noisy copies
//! of that class's prototype. Fixed-length bursts admit an exact closed form
//! for the accuracy of a window-1 label-mode predictor at any shift, which
//! the test suites use as ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{normalize, Scalar};
use crate::stream::{LabeledStream, Sample};

/// Burst-length law. All closed-form oracles require `Fixed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum BurstLaw {
    /// Every burst has exactly this length.
    Fixed(usize),
    /// Burst lengths are 1 + Geometric, with the given mean (>= 1).
    Geometric(f64),
}

/// Full description of a synthetic stream; generation is a pure function of
/// this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstSpec {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub length: usize,
    pub burst: BurstLaw,
    /// Gaussian feature noise scale; 0 emits prototypes exactly.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Magnitude of the prototype step applied each time one of its bursts
    /// ends; 0 keeps prototypes stationary.
    #[serde(default)]
    pub drift_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl BurstSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Config("num_classes must be >= 2".into()));
        }
        if self.length < self.num_classes {
            return Err(Error::Config(
                "length must be at least num_classes".into(),
            ));
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("feature_dim must be >= 1".into()));
        }
        match self.burst {
            BurstLaw::Fixed(l) if l < 1 => {
                return Err(Error::Config("fixed burst length must be >= 1".into()))
            }
            BurstLaw::Geometric(mean) if !(mean.is_finite() && mean >= 1.0) => {
                return Err(Error::Config("geometric burst mean must be >= 1".into()))
            }
            _ => {}
        }
        for (name, v) in [("noise_sigma", self.noise_sigma), ("drift_rate", self.drift_rate)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

fn gaussian_vec<F: Scalar>(rng: &mut ChaCha12Rng, dim: usize) -> Vec<F> {
    (0..dim)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            F::of_f64(g)
        })
        .collect()
}

fn unit_gaussian_vec<F: Scalar>(rng: &mut ChaCha12Rng, dim: usize) -> Vec<F> {
    loop {
        let mut v = gaussian_vec::<F>(rng, dim);
        if normalize(&mut v) {
            return v;
        }
    }
}

/// Generates the stream described by `spec`. Deterministic given the seed.
pub fn generate<F: Scalar>(spec: &BurstSpec) -> Result<LabeledStream<F>> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let c = spec.num_classes;
    let d = spec.feature_dim;
    let sigma = F::of_f64(spec.noise_sigma);

    let mut prototypes: Vec<Vec<F>> = (0..c).map(|_| unit_gaussian_vec(&mut rng, d)).collect();

    let geometric = match spec.burst {
        BurstLaw::Geometric(mean) => {
            Some(Geometric::new(1.0 / mean).map_err(|e| Error::Config(e.to_string()))?)
        }
        BurstLaw::Fixed(_) => None,
    };

    let mut samples: Vec<Sample<F>> = Vec::with_capacity(spec.length);
    while samples.len() < spec.length {
        let class = rng.random_range(0..c);
        let burst_len = match spec.burst {
            BurstLaw::Fixed(l) => l,
            BurstLaw::Geometric(_) => {
                1 + geometric.as_ref().unwrap().sample(&mut rng) as usize
            }
        };
        let emit = burst_len.min(spec.length - samples.len());
        for _ in 0..emit {
            let features = if spec.noise_sigma > 0.0 {
                let mut f = prototypes[class].clone();
                for x in f.iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *x += sigma * F::of_f64(g);
                }
                if !normalize(&mut f) {
                    f = prototypes[class].clone();
                }
                f
            } else {
                prototypes[class].clone()
            };
            let index = samples.len();
            samples.push(Sample {
                index,
                timestamp: index as u64,
                features,
                label: class,
            });
        }
        if spec.drift_rate > 0.0 {
            let step = unit_gaussian_vec::<F>(&mut rng, d);
            let rho = F::of_f64(spec.drift_rate);
            let proto = &mut prototypes[class];
            for (p, s) in proto.iter_mut().zip(&step) {
                *p += rho * *s;
            }
            if !normalize(proto) {
                *proto = step;
            }
        }
    }
    LabeledStream::new(samples, c, d)
}

/// Exact accuracy of the window-1 label-mode predictor at shift `s` on a
/// `Fixed(L)` burst stream, averaged over burst phase.
///
/// The predictor at position t guesses the label of position t+1+s. Both lie
/// in the same burst with probability `max(0, L - (s+1)) / L`, in which case
/// the guess is certain; otherwise the classes are independent and match
/// with probability 1/C. Only `k = 1` and fixed-length bursts have this
/// closed form; use Monte Carlo estimates for anything else.
pub fn expected_blind_accuracy(spec: &BurstSpec, k: usize, shift: usize) -> Result<f64> {
    spec.validate()?;
    if k != 1 {
        return Err(Error::NotImplemented(format!(
            "closed-form blind accuracy requires k = 1, got {k}"
        )));
    }
    let l = match spec.burst {
        BurstLaw::Fixed(l) => l,
        BurstLaw::Geometric(_) => {
            return Err(Error::NotImplemented(
                "closed-form blind accuracy requires a fixed burst law".into(),
            ))
        }
    };
    let c = spec.num_classes as f64;
    let delta = shift + 1;
    let mut acc = 0.0f64;
    for phase in 0..l {
        // Position with this phase stays inside its burst for delta more
        // samples iff phase + delta <= l - 1.
        acc += if phase + delta < l { 1.0 } else { 1.0 / c };
    }
    Ok(acc / l as f64)
}
