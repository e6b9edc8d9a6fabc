//! Request-level cache simulator.
//!
//! Requests follow the independent reference model: each request picks a
//! file independently from the provider's popularity distribution. Under
//! LRU, FIFO and RANDOM the hit sequence only depends on the order of
//! requests, so arrival times are never drawn; rates are recovered as
//! `Λ · hits / requests`.
//!
//! Caches start filled with the most popular files and the first `warmup`
//! requests are not counted.
//!
//! Every run is a pure function of its seed. Sub-run seeds are derived from
//! a master seed with [`derive_seed`].

mod policy;

pub use policy::{AnyPolicy, EvictionPolicy, Fifo, Lru, Random};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::che::{CachePolicy, HitCurve};
use crate::par::Execution;
use crate::{DemandModel, Error, Problem, Result, Solution};

/// Number of batches behind the confidence half-width.
pub const BATCHES: usize = 20;
/// Two-sided 95% Student-t quantile with `BATCHES - 1` degrees of freedom.
const T_QUANTILE: f64 = 2.093;

/// SplitMix64 finalizer applied to `master + (index + 1)·φ`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Default warmup: a tenth of the horizon.
pub fn default_warmup(horizon: u64) -> u64 {
    horizon / 10
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub policy: CachePolicy,
    pub slice: usize,
    /// Per-file request rates; file ids are indices.
    pub rates: Vec<f64>,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn from_demand(policy: CachePolicy, demand: &DemandModel, slice: usize, horizon: u64, seed: u64) -> Self {
        Self {
            policy,
            slice,
            rates: demand.file_rates(),
            horizon,
            warmup: default_warmup(horizon),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon <= self.warmup {
            return Err(Error::InvalidArgument(format!(
                "horizon {} must exceed warmup {}",
                self.horizon, self.warmup
            )));
        }
        if self.slice > self.rates.len() {
            return Err(Error::InvalidArgument(format!(
                "slice {} exceeds the catalog of {} files",
                self.slice,
                self.rates.len()
            )));
        }
        if self.rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || self.rates.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument("rates must be nonnegative with a positive sum".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Empirical hit rate in requests per unit time.
    pub hit_rate: f64,
    /// 95% confidence half-width of `hit_rate` from batch means.
    pub half_width: f64,
    pub counted_requests: u64,
    pub hits: u64,
    pub per_file_hits: Vec<u64>,
}

impl SimResult {
    pub fn hit_ratio(&self) -> f64 {
        self.hits as f64 / self.counted_requests as f64
    }
}

fn sampler(weights: &[f64]) -> Result<WeightedAliasIndex<f64>> {
    WeightedAliasIndex::new(weights.to_vec())
        .map_err(|e| Error::InvalidArgument(format!("cannot build sampling table: {e}")))
}

fn prefilled(policy: CachePolicy, slice: usize, catalog: usize, rng: &mut ChaCha8Rng) -> AnyPolicy {
    let mut cache = AnyPolicy::new(policy, slice, catalog);
    // Least popular first so LRU ends with file 0 most recent.
    for f in (0..slice).rev() {
        cache.access(f, rng);
    }
    cache
}

/// Batch-means half-width of the hit ratio, scaled by `rate`.
struct BatchStats {
    size: u64,
    in_batch: u64,
    hits_in_batch: u64,
    ratios: Vec<f64>,
}

impl BatchStats {
    fn new(counted: u64) -> Self {
        Self {
            size: (counted / BATCHES as u64).max(1),
            in_batch: 0,
            hits_in_batch: 0,
            ratios: Vec::with_capacity(BATCHES),
        }
    }

    fn record(&mut self, hit: bool) {
        self.in_batch += 1;
        self.hits_in_batch += u64::from(hit);
        if self.in_batch == self.size {
            self.ratios.push(self.hits_in_batch as f64 / self.size as f64);
            self.in_batch = 0;
            self.hits_in_batch = 0;
        }
    }

    fn half_width(&self, rate: f64) -> f64 {
        let n = self.ratios.len();
        if n < 2 {
            return f64::INFINITY;
        }
        let mean = self.ratios.iter().sum::<f64>() / n as f64;
        let var = self.ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        T_QUANTILE * (var / n as f64).sqrt() * rate
    }
}

/// Simulates one slice.
pub fn simulate_slice(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let catalog = config.rates.len();
    let rate: f64 = config.rates.iter().sum();
    let files = sampler(&config.rates)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache = prefilled(config.policy, config.slice, catalog, &mut rng);
    let counted = config.horizon - config.warmup;
    let mut per_file_hits = vec![0u64; catalog];
    let mut hits = 0u64;
    let mut batches = BatchStats::new(counted);
    for i in 0..config.horizon {
        let f = files.sample(&mut rng);
        let hit = cache.access(f, &mut rng);
        if i >= config.warmup {
            if hit {
                hits += 1;
                per_file_hits[f] += 1;
            }
            batches.record(hit);
        }
    }
    Ok(SimResult {
        hit_rate: rate * hits as f64 / counted as f64,
        half_width: batches.half_width(rate),
        counted_requests: counted,
        hits,
        per_file_hits,
    })
}

/// Simulated traffic through one (provider, cache) slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSim {
    pub provider: usize,
    pub cache: usize,
    pub slice: usize,
    pub fraction: f64,
    /// Share of the provider's counted requests that went to this cache.
    pub arrival_share: f64,
    /// Contribution to the provider's hit rate, `Λ · hits / requests`.
    pub hit_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSim {
    pub per_cp_hit_rate: Vec<f64>,
    pub per_cp_latency: Option<Vec<f64>>,
    /// Objective re-evaluated at the empirical hit rates.
    pub objective: f64,
    pub slices: Vec<SliceSim>,
}

/// Simulates every provider's stream under a solution.
///
/// Each request of provider `k` is sent to cache `m` with probability
/// `p_km` (independent thinning of a Poisson stream), then served by that
/// cache's slice for `k`. Slices are rounded to whole files. Each provider
/// draws `horizon` requests with its own derived seed.
pub fn simulate_solution(
    problem: &Problem,
    solution: &Solution,
    horizon: u64,
    seed: u64,
    exec: Execution,
) -> Result<SolutionSim> {
    let (kc, mc) = (problem.num_providers(), problem.num_caches());
    let warmup = default_warmup(horizon);
    if horizon <= warmup {
        return Err(Error::InvalidArgument("horizon too short".into()));
    }
    let delays = problem.scenario().delays.as_ref();
    let runs = exec.map_range(kc, |k| -> Result<(f64, Option<f64>, Vec<SliceSim>)> {
        let demand = &problem.scenario().providers[k].demand;
        let rates = demand.file_rates();
        let catalog = rates.len();
        let files = sampler(&rates)?;
        let row = solution.routing.row(k);
        let caches = sampler(row)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
        let slices: Vec<usize> = (0..mc)
            .map(|m| (solution.partition[(k, m)].max(0.0).round() as usize).min(catalog))
            .collect();
        let mut stores: Vec<Option<AnyPolicy>> = (0..mc)
            .map(|m| {
                (row[m] > 0.0)
                    .then(|| prefilled(problem.scenario().caches[m].policy, slices[m], catalog, &mut rng))
            })
            .collect();
        let mut arrivals = vec![0u64; mc];
        let mut hits = vec![0u64; mc];
        for i in 0..horizon {
            let m = caches.sample(&mut rng);
            let f = files.sample(&mut rng);
            let hit = stores[m].as_mut().expect("routed cache").access(f, &mut rng);
            if i >= warmup {
                arrivals[m] += 1;
                hits[m] += u64::from(hit);
            }
        }
        let counted = (horizon - warmup) as f64;
        let rate = demand.aggregate_rate;
        let per_slice: Vec<SliceSim> = (0..mc)
            .filter(|&m| row[m] > 0.0)
            .map(|m| SliceSim {
                provider: k,
                cache: m,
                slice: slices[m],
                fraction: row[m],
                arrival_share: arrivals[m] as f64 / counted,
                hit_rate: rate * hits[m] as f64 / counted,
            })
            .collect();
        let hit_rate = per_slice.iter().map(|s| s.hit_rate).sum();
        let latency = delays.map(|d| {
            (0..mc)
                .map(|m| {
                    let misses = arrivals[m] - hits[m];
                    d.hit[(k, m)] * hits[m] as f64 + d.miss[(k, m)] * misses as f64
                })
                .sum::<f64>()
                / counted
        });
        Ok((hit_rate, latency, per_slice))
    });
    let mut per_cp_hit_rate = Vec::with_capacity(kc);
    let mut latencies = Vec::with_capacity(kc);
    let mut slices = Vec::new();
    let mut objective = 0.0;
    for (k, run) in runs.into_iter().enumerate() {
        let (h, t, s) = run?;
        let row = solution.routing.row(k);
        let argument = problem.offset(k, row)
            + s.iter().map(|x| problem.gain(k, x.cache) * x.hit_rate).sum::<f64>();
        objective += problem.provider_value(k, argument);
        per_cp_hit_rate.push(h);
        latencies.extend(t);
        slices.extend(s);
    }
    Ok(SolutionSim {
        per_cp_hit_rate,
        per_cp_latency: delays.map(|_| latencies),
        objective,
        slices,
    })
}

/// One cell of a model-versus-simulation campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCell {
    pub policy: CachePolicy,
    pub demand: DemandModel,
    pub slice: usize,
    pub horizon: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub policy: CachePolicy,
    #[serde(rename = "N")]
    pub catalog_size: usize,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub rate: f64,
    pub slice: usize,
    pub horizon: u64,
    pub seed: u64,
    pub empirical_rate: f64,
    pub model_rate: f64,
    pub rel_err: f64,
    pub half_width: f64,
}

/// Cartesian grid of cells with per-cell seeds derived from `master_seed`
/// in grid order.
pub fn validation_grid(
    policies: &[CachePolicy],
    demands: &[DemandModel],
    slices: &[usize],
    horizon: u64,
    master_seed: u64,
) -> Vec<ValidationCell> {
    let mut cells = Vec::new();
    for &policy in policies {
        for demand in demands {
            for &slice in slices {
                let seed = derive_seed(master_seed, cells.len() as u64);
                cells.push(ValidationCell {
                    policy,
                    demand: demand.clone(),
                    slice,
                    horizon,
                    seed,
                });
            }
        }
    }
    cells
}

/// Runs each cell and compares against the characteristic-time model.
pub fn run_validation(cells: &[ValidationCell], exec: Execution) -> Result<Vec<ValidationRow>> {
    exec.map(cells, |cell| {
        let config = SimConfig::from_demand(cell.policy, &cell.demand, cell.slice, cell.horizon, cell.seed);
        let sim = simulate_slice(&config)?;
        let curve = HitCurve::new(cell.policy, config.rates)?;
        let model = curve.hit_rate(cell.slice as f64)?;
        Ok(ValidationRow {
            policy: cell.policy,
            catalog_size: cell.demand.catalog_size,
            alpha: cell.demand.zipf_alpha,
            rate: cell.demand.aggregate_rate,
            slice: cell.slice,
            horizon: cell.horizon,
            seed: cell.seed,
            empirical_rate: sim.hit_rate,
            model_rate: model,
            rel_err: if model > 0.0 {
                (sim.hit_rate - model).abs() / model
            } else {
                sim.hit_rate
            },
            half_width: sim.half_width,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demand() -> DemandModel {
        DemandModel::new(200, 0.8, 5.0).unwrap()
    }

    #[test]
    fn full_slice_hits_everything() {
        for policy in CachePolicy::ALL {
            let r = simulate_slice(&SimConfig::from_demand(policy, &demand(), 200, 20_000, 1)).unwrap();
            assert_eq!(r.hits, r.counted_requests);
            assert!((r.hit_rate - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_slice_never_hits() {
        let r = simulate_slice(&SimConfig::from_demand(CachePolicy::Lru, &demand(), 0, 10_000, 1)).unwrap();
        assert_eq!(r.hit_rate, 0.0);
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = SimConfig::from_demand(CachePolicy::Random, &demand(), 30, 50_000, 42);
        assert_eq!(simulate_slice(&cfg).unwrap(), simulate_slice(&cfg).unwrap());
        let other = SimConfig { seed: 43, ..cfg.clone() };
        assert_ne!(simulate_slice(&cfg).unwrap().hits, simulate_slice(&other).unwrap().hits);
    }

    #[test]
    fn config_checks() {
        let mut cfg = SimConfig::from_demand(CachePolicy::Lru, &demand(), 10, 100, 1);
        cfg.warmup = 100;
        assert!(simulate_slice(&cfg).is_err());
        cfg.warmup = 0;
        cfg.slice = 201;
        assert!(simulate_slice(&cfg).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
