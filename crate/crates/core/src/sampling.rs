//! Seeds, sampling configuration and exhaustive walks over structure-matrix space.

use serde::{Deserialize, Serialize};

use crate::cartan::{CartanDatum, RankVector};
use crate::hmod::StructureMatrices;

/// splitmix64 step; used to derive independent per-sample seeds from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// random samples for generic statistics
    pub samples: usize,
    /// master seed
    pub seed: u64,
    /// scan structure space exhaustively when it has at most this many points
    pub exhaustive_budget: u64,
    /// random invertibility trials in isomorphism tests
    pub iso_trials: usize,
    /// exhaustive scan of a Hom space when p^dim is at most this
    pub iso_budget: u64,
    /// random endomorphisms tried per Fitting sweep
    pub fitting_trials: usize,
    /// exhaustive endomorphism scan when p^dim End is at most this
    pub fitting_budget: u64,
    /// majority threshold for generic statements
    pub threshold: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            samples: 200,
            seed: 0x5eed,
            exhaustive_budget: 1 << 22,
            iso_trials: 32,
            iso_budget: 1 << 20,
            fitting_trials: 64,
            fitting_budget: 1 << 14,
            threshold: 0.5,
        }
    }
}

impl SamplingConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }
    pub fn with_exhaustive_budget(mut self, b: u64) -> Self {
        self.exhaustive_budget = b;
        self
    }
}

/// p^n if it fits in a u64.
pub fn space_size(p: u32, n: usize) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..n {
        acc = acc.checked_mul(p as u64)?;
    }
    Some(acc)
}

/// Base-p digits of `index`, least significant first.
pub fn digits(mut index: u64, p: u32, n: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push((index % p as u64) as i64);
        index /= p as u64;
    }
    out
}

/// The `index`-th point of structure-matrix space in base-p order.
pub fn structure_point(datum: &CartanDatum, k: usize, p: u32, r: &RankVector, index: u64) -> StructureMatrices {
    let n = datum.structure_param_count(k, r);
    StructureMatrices::from_params(datum, k, r, &digits(index, p, n))
}
