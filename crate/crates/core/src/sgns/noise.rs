use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;

use crate::error::{Error, Result};

/// Noise distribution for negative sampling: counts raised to `exponent`
/// and normalised, sampled exactly with the alias method.
#[derive(Debug, Clone)]
pub struct NoiseTable {
    alias: WeightedAliasIndex<f64>,
    probabilities: Vec<f64>,
}

impl NoiseTable {
    pub fn new(counts: &[u64], exponent: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&exponent) {
            return Err(Error::InvalidParameter(format!(
                "unigram exponent {exponent} outside [0, 1]"
            )));
        }
        // Zero counts stay at zero weight even when the exponent is 0.
        let weights: Vec<f64> = counts
            .iter()
            .map(|&c| {
                if c == 0 {
                    0.0
                } else {
                    (c as f64).powf(exponent)
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter(
                "noise distribution has no mass".into(),
            ));
        }
        let probabilities = weights.iter().map(|w| w / total).collect();
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::InvalidParameter(format!("noise table: {e}")))?;
        Ok(NoiseTable {
            alias,
            probabilities,
        })
    }

    pub fn probability(&self, id: u32) -> f64 {
        self.probabilities[id as usize]
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.alias.sample(rng) as u32
    }

    pub(crate) fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u32]) {
        for slot in out {
            *slot = self.draw(rng);
        }
    }
}

/// `count` independent draws from the noise distribution.
pub fn negative_sample<R: Rng + ?Sized>(rng: &mut R, count: usize, noise: &NoiseTable) -> Vec<u32> {
    (0..count).map(|_| noise.draw(rng)).collect()
}
