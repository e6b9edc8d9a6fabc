//! Seeded random scenario families for the larger-network comparison.
//!
//! Every parameter is drawn uniformly from its range. Each provider
//! connects to a random subset of caches whose size is drawn from `links`
//! (capped at the number of caches).

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alloc::{
    enumerate_optimal_with, routing_count, solve_acs, static_routing_baseline_with, AcsOptions,
    EnumerationOptions,
};
use crate::che::CachePolicy;
use crate::par::Execution;
use crate::sim::derive_seed;
use crate::{CacheNode, ContentProvider, DemandModel, Error, Matrix, Problem, Result, Scenario, Solution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub caches: usize,
    pub providers: usize,
    pub instances: usize,
    pub seed: u64,
    #[serde(default = "defaults::catalog")]
    pub catalog: [usize; 2],
    #[serde(default = "defaults::alpha")]
    pub alpha: [f64; 2],
    #[serde(default = "defaults::rate")]
    pub rate: [f64; 2],
    #[serde(default = "defaults::capacity")]
    pub capacity: [f64; 2],
    #[serde(default = "defaults::links")]
    pub links: [usize; 2],
    #[serde(default)]
    pub policy: CachePolicy,
}

mod defaults {
    pub fn catalog() -> [usize; 2] {
        [1000, 5000]
    }
    pub fn alpha() -> [f64; 2] {
        [0.6, 0.8]
    }
    pub fn rate() -> [f64; 2] {
        [10.0, 15.0]
    }
    pub fn capacity() -> [f64; 2] {
        [200.0, 500.0]
    }
    pub fn links() -> [usize; 2] {
        [2, 5]
    }
}

impl FamilySpec {
    /// Default parameter ranges with the given network size.
    pub fn new(caches: usize, providers: usize, instances: usize, seed: u64) -> Self {
        Self {
            caches,
            providers,
            instances,
            seed,
            catalog: defaults::catalog(),
            alpha: defaults::alpha(),
            rate: defaults::rate(),
            capacity: defaults::capacity(),
            links: defaults::links(),
            policy: CachePolicy::Lru,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = self.catalog[0] <= self.catalog[1]
            && self.alpha[0] <= self.alpha[1]
            && self.rate[0] <= self.rate[1]
            && self.capacity[0] <= self.capacity[1]
            && self.links[0] <= self.links[1];
        if !ordered {
            return Err(Error::InvalidArgument("family ranges must be [low, high]".into()));
        }
        if self.caches == 0 || self.providers == 0 || self.links[0] == 0 || self.catalog[0] == 0 {
            return Err(Error::InvalidArgument("family sizes must be positive".into()));
        }
        if self.rate[0] <= 0.0 || self.capacity[0] <= 0.0 || self.alpha[0] < 0.0 {
            return Err(Error::InvalidArgument("family rates and capacities must be positive".into()));
        }
        Ok(())
    }

    /// Instance `index`, seeded by `derive_seed(seed, index)`.
    pub fn generate(&self, index: usize) -> Result<Scenario> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, index as u64));
        let caches = (0..self.caches)
            .map(|_| CacheNode::new(rng.random_range(self.capacity[0]..=self.capacity[1]), self.policy))
            .collect();
        let mut adjacency = Matrix::zeros(self.providers, self.caches);
        let mut providers = Vec::with_capacity(self.providers);
        for k in 0..self.providers {
            let demand = DemandModel::new(
                rng.random_range(self.catalog[0]..=self.catalog[1]),
                rng.random_range(self.alpha[0]..=self.alpha[1]),
                rng.random_range(self.rate[0]..=self.rate[1]),
            )?;
            providers.push(ContentProvider::new(demand));
            let hi = self.links[1].min(self.caches);
            let lo = self.links[0].min(hi);
            let degree = rng.random_range(lo..=hi);
            for m in sample(&mut rng, self.caches, degree) {
                adjacency[(k, m)] = 1.0;
            }
        }
        let scenario = Scenario {
            caches,
            providers,
            adjacency,
            bandwidth: None,
            delays: None,
        };
        scenario.ensure_valid()?;
        Ok(scenario)
    }

    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        (0..self.instances).map(|i| self.generate(i)).collect()
    }
}

/// Joint optimum versus equal-split routing on one instance.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub joint: Solution,
    pub baseline: Solution,
    /// Whether `joint` came from enumeration (global) or ACS (partial).
    pub exact: bool,
}

impl Comparison {
    pub fn improvement(&self) -> f64 {
        (self.joint.objective - self.baseline.objective) / self.baseline.objective
    }
}

/// Solves one instance both ways. Enumeration is used when the routing
/// count is within `cap`, otherwise ACS started from the baseline.
pub fn compare_joint_static(problem: &Problem, cap: u128, exec: Execution) -> Result<Comparison> {
    let baseline = static_routing_baseline_with(problem, exec)?;
    let (joint, exact) = if routing_count(problem) <= cap {
        (enumerate_optimal_with(problem, EnumerationOptions { cap, exec })?, true)
    } else {
        let opts = AcsOptions {
            exec,
            ..AcsOptions::default()
        };
        (solve_acs(problem, &baseline, opts)?.solution, false)
    };
    Ok(Comparison { joint, baseline, exact })
}
