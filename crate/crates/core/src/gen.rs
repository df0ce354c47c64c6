//! Seeded random instance generation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AgentId, CategoryId, PrecedenceOrder, PriorityRanking, ReserveSystem, SequentialReserveSystem,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("eligibility density {0} is outside [0, 1]")]
    Density(f64),
    #[error("preferential fraction {0} is outside [0, 1]")]
    PreferentialFraction(f64),
    #[error("capacity range {lo}..={hi} is empty")]
    CapacityRange { lo: usize, hi: usize },
    #[error("random tier count must be positive")]
    ZeroTiers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CapacityDist {
    Fixed { value: usize },
    Uniform { lo: usize, hi: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TierScheme {
    AllEqual,
    /// Category `c` gets tier `c`.
    Strict,
    /// Each category draws one of `k` tiers uniformly.
    RandomK {
        k: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub num_agents: usize,
    pub num_categories: usize,
    pub capacity: CapacityDist,
    pub density: f64,
    pub preferential_fraction: f64,
    pub tiers: TierScheme,
    /// Perturb one shared permutation per category instead of drawing
    /// independent rankings.
    pub correlated: bool,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(num_agents: usize, num_categories: usize, seed: u64) -> Self {
        Self {
            num_agents,
            num_categories,
            capacity: CapacityDist::Fixed { value: 1 },
            density: 0.5,
            preferential_fraction: 0.0,
            tiers: TierScheme::AllEqual,
            correlated: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if !(0.0..=1.0).contains(&self.density) {
            return Err(GenError::Density(self.density));
        }
        if !(0.0..=1.0).contains(&self.preferential_fraction) {
            return Err(GenError::PreferentialFraction(self.preferential_fraction));
        }
        if let CapacityDist::Uniform { lo, hi } = self.capacity {
            if lo > hi {
                return Err(GenError::CapacityRange { lo, hi });
            }
        }
        if self.tiers == (TierScheme::RandomK { k: 0 }) {
            return Err(GenError::ZeroTiers);
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<SequentialReserveSystem, GenError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.num_agents;
        let shared = permutation(n, &mut rng);
        let mut caps = Vec::with_capacity(self.num_categories);
        let mut rankings = Vec::with_capacity(self.num_categories);
        for _ in 0..self.num_categories {
            caps.push(match self.capacity {
                CapacityDist::Fixed { value } => value,
                CapacityDist::Uniform { lo, hi } => rng.gen_range(lo..=hi),
            });
            let order = if self.correlated {
                let mut order = shared.clone();
                // n random adjacent swaps keep most of the shared order
                for _ in 0..n.saturating_sub(1) {
                    let k = rng.gen_range(0..n - 1);
                    order.swap(k, k + 1);
                }
                order
            } else {
                permutation(n, &mut rng)
            };
            let cutoff = (0..n).filter(|_| rng.gen_bool(self.density)).count();
            rankings.push(PriorityRanking::new(order, cutoff).expect("generated ranking is valid"));
        }
        let base = ReserveSystem::new(n, caps, rankings).expect("generated system is valid");
        let mut cats: Vec<CategoryId> = (0..self.num_categories).map(CategoryId).collect();
        cats.shuffle(&mut rng);
        let take = (self.preferential_fraction * self.num_categories as f64).round() as usize;
        let mut preferential = cats[..take.min(cats.len())].to_vec();
        preferential.sort();
        let tiers = match self.tiers {
            TierScheme::AllEqual => vec![0; self.num_categories],
            TierScheme::Strict => (0..self.num_categories as u32).collect(),
            TierScheme::RandomK { k } => (0..self.num_categories).map(|_| rng.gen_range(0..k)).collect(),
        };
        Ok(SequentialReserveSystem::new(base, &preferential, PrecedenceOrder::new(tiers))
            .expect("generated sequential system is valid"))
    }
}

fn permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<AgentId> {
    let mut p: Vec<AgentId> = (0..n).map(AgentId).collect();
    p.shuffle(rng);
    p
}

/// Bounds for a family of small random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepBounds {
    pub max_agents: usize,
    pub max_categories: usize,
    pub max_capacity: usize,
}

/// `count` random small instances: sizes, capacities, cutoffs, preferential
/// sets, and tiers all drawn uniformly within `bounds`.
pub fn random_sweep(bounds: SweepBounds, count: usize, seed: u64) -> Vec<SequentialReserveSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=bounds.max_agents);
            let k = rng.gen_range(1..=bounds.max_categories);
            let mut caps = Vec::with_capacity(k);
            let mut rankings = Vec::with_capacity(k);
            for _ in 0..k {
                caps.push(rng.gen_range(0..=bounds.max_capacity));
                let order = permutation(n, &mut rng);
                let cutoff = rng.gen_range(0..=n);
                rankings.push(PriorityRanking::new(order, cutoff).expect("valid ranking"));
            }
            let base = ReserveSystem::new(n, caps, rankings).expect("valid system");
            let preferential: Vec<CategoryId> =
                (0..k).filter(|_| rng.gen_bool(0.5)).map(CategoryId).collect();
            let tiers: Vec<u32> = (0..k).map(|_| rng.gen_range(0..k as u32)).collect();
            SequentialReserveSystem::new(base, &preferential, PrecedenceOrder::new(tiers))
                .expect("valid sequential system")
        })
        .collect()
}
