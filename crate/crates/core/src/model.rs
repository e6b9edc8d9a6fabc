//! Scenario description shared by every solver and the simulator.
//!
//! A [`Scenario`] is the JSON document the CLI ingests:
//!
//! ```json
//! {
//!   "caches":    [{"capacity": 500, "policy": "LRU"}, ...],
//!   "providers": [{"catalog_size": 10000, "zipf_alpha": 0.6, "aggregate_rate": 10,
//!                  "weight": 1, "utility": {"kind": "linear"}}, ...],
//!   "adjacency": [[1, 1, 0], [0, 1, 1]],
//!   "bandwidth": [[6, 8, 0], [0, 10, 8]],
//!   "delays":    {"hit": [[...]], "miss": [[...]]}
//! }
//! ```
//!
//! `bandwidth` and `delays` are optional. Matrices are indexed
//! `[provider][cache]`. Cache sizes and slices are measured in files and are
//! continuous; rates are requests per unit time.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::che::CachePolicy;
use crate::{Error, Matrix, Result};

/// Relative tolerance used when checking that bandwidth covers demand.
const FEASIBILITY_EPS: f64 = 1e-9;

/// Per-provider request model: `catalog_size` files whose popularity follows
/// a Zipf law with exponent `zipf_alpha`, requested at `aggregate_rate` in
/// total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub catalog_size: usize,
    pub zipf_alpha: f64,
    pub aggregate_rate: f64,
}

impl DemandModel {
    pub fn new(catalog_size: usize, zipf_alpha: f64, aggregate_rate: f64) -> Result<Self> {
        let demand = Self {
            catalog_size,
            zipf_alpha,
            aggregate_rate,
        };
        match demand.problems().first() {
            Some(msg) => Err(Error::InvalidArgument(msg.clone())),
            None => Ok(demand),
        }
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.catalog_size == 0 {
            out.push("catalog_size must be positive".to_string());
        }
        if !(self.zipf_alpha >= 0.0 && self.zipf_alpha.is_finite()) {
            out.push(format!("zipf_alpha must be >= 0, got {}", self.zipf_alpha));
        }
        if !(self.aggregate_rate > 0.0 && self.aggregate_rate.is_finite()) {
            out.push(format!(
                "aggregate_rate must be > 0, got {}",
                self.aggregate_rate
            ));
        }
        out
    }

    /// Per-file request rates, most popular first.
    pub fn file_rates(&self) -> Vec<f64> {
        file_rates(self)
    }
}

/// Zipf-normalized per-file rates `R * i^-alpha / sum_j j^-alpha`,
/// descending, summing to the aggregate rate.
///
/// The normalizer is a direct partial sum; no integral approximation.
pub fn file_rates(demand: &DemandModel) -> Vec<f64> {
    let alpha = demand.zipf_alpha;
    let weights: Vec<f64> = (1..=demand.catalog_size)
        .map(|i| (i as f64).powf(-alpha))
        .collect();
    // Summing smallest-first keeps the rounding error of the long tail.
    let norm: f64 = weights.iter().rev().sum();
    weights
        .into_iter()
        .map(|w| demand.aggregate_rate * w / norm)
        .collect()
}

/// Utility a provider derives from its performance.
///
/// `linear`, `log` and `beta_fair` apply to a hit rate (increasing, concave).
/// `negated_latency` applies to a mean latency: `U(t) = -t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilitySpec {
    #[default]
    Linear,
    Log,
    BetaFair {
        beta: f64,
    },
    NegatedLatency,
}

/// Kept as an alias so callers can name the variant family explicitly.
pub type UtilityKind = UtilitySpec;

impl UtilitySpec {
    pub fn value(self, x: f64) -> f64 {
        match self {
            UtilitySpec::Linear => x,
            UtilitySpec::Log => x.ln(),
            UtilitySpec::BetaFair { beta } => {
                if beta == 0.0 {
                    x
                } else {
                    x.powf(1.0 - beta) / (1.0 - beta)
                }
            }
            UtilitySpec::NegatedLatency => -x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            UtilitySpec::Linear => 1.0,
            UtilitySpec::Log => 1.0 / x,
            UtilitySpec::BetaFair { beta } => {
                if beta == 0.0 {
                    1.0
                } else {
                    x.powf(-beta)
                }
            }
            UtilitySpec::NegatedLatency => -1.0,
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(
            self,
            UtilitySpec::Linear | UtilitySpec::NegatedLatency | UtilitySpec::BetaFair { beta: 0.0 }
        )
    }

    fn problem(self) -> Option<String> {
        match self {
            UtilitySpec::BetaFair { beta } if !(beta >= 0.0 && beta.is_finite()) => {
                Some(format!("beta must be finite and >= 0, got {beta}"))
            }
            UtilitySpec::BetaFair { beta } if beta == 1.0 => {
                Some("beta = 1 is the log utility; use kind `log`".to_string())
            }
            _ => None,
        }
    }
}

fn default_weight() -> f64 {
    1.0
}

fn default_latency_utility() -> UtilitySpec {
    UtilitySpec::NegatedLatency
}

/// A content provider. Its id is its position in [`Scenario::providers`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentProvider {
    #[serde(flatten)]
    pub demand: DemandModel,
    #[serde(default = "default_weight")]
    pub weight: f64,
    /// Utility of the hit rate, used by the hit-rate objectives.
    #[serde(default)]
    pub utility: UtilitySpec,
    /// Utility of the mean latency, used by the latency objective. Hit-rate
    /// forms are applied to the latency slack `max(d0) - t`.
    #[serde(default = "default_latency_utility")]
    pub latency_utility: UtilitySpec,
}

impl ContentProvider {
    pub fn new(demand: DemandModel) -> Self {
        Self {
            demand,
            weight: 1.0,
            utility: UtilitySpec::Linear,
            latency_utility: UtilitySpec::NegatedLatency,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_utility(mut self, utility: UtilitySpec) -> Self {
        self.utility = utility;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheNode {
    pub capacity: f64,
    #[serde(default)]
    pub policy: CachePolicy,
}

impl CacheNode {
    pub fn new(capacity: f64, policy: CachePolicy) -> Self {
        Self { capacity, policy }
    }

    pub fn lru(capacity: f64) -> Self {
        Self::new(capacity, CachePolicy::Lru)
    }
}

/// Hit delay `d_km` and miss delay `d0_km` per provider/cache pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    pub hit: Matrix,
    pub miss: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub caches: Vec<CacheNode>,
    pub providers: Vec<ContentProvider>,
    pub adjacency: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<DelayProfile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    NoCaches,
    NoProviders,
    InvalidCapacity,
    InvalidDemand,
    InvalidWeight,
    InvalidUtility,
    AdjacencyShape,
    AdjacencyNotBinary,
    ProviderDisconnected,
    BandwidthShape,
    BandwidthNegative,
    BandwidthOnDisconnectedPair,
    BandwidthInsufficient,
    DelayShape,
    DelayOrder,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::NoCaches => "no_caches",
            ViolationCode::NoProviders => "no_providers",
            ViolationCode::InvalidCapacity => "invalid_capacity",
            ViolationCode::InvalidDemand => "invalid_demand",
            ViolationCode::InvalidWeight => "invalid_weight",
            ViolationCode::InvalidUtility => "invalid_utility",
            ViolationCode::AdjacencyShape => "adjacency_shape",
            ViolationCode::AdjacencyNotBinary => "adjacency_not_binary",
            ViolationCode::ProviderDisconnected => "provider_disconnected",
            ViolationCode::BandwidthShape => "bandwidth_shape",
            ViolationCode::BandwidthNegative => "bandwidth_negative",
            ViolationCode::BandwidthOnDisconnectedPair => "bandwidth_on_disconnected_pair",
            ViolationCode::BandwidthInsufficient => "bandwidth_insufficient",
            ViolationCode::DelayShape => "delay_shape",
            ViolationCode::DelayOrder => "delay_order",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code.as_str(), self.message)
    }
}

impl Scenario {
    pub fn num_caches(&self) -> usize {
        self.caches.len()
    }

    pub fn num_providers(&self) -> usize {
        self.providers.len()
    }

    pub fn connected(&self, k: usize, m: usize) -> bool {
        self.adjacency[(k, m)] != 0.0
    }

    /// Caches provider `k` may route to, ascending.
    pub fn connected_caches(&self, k: usize) -> Vec<usize> {
        (0..self.num_caches())
            .filter(|&m| self.connected(k, m))
            .collect()
    }

    /// Every invariant violation; an empty list means the scenario is valid.
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    /// Fails with [`Error::InvalidScenario`] unless the scenario is valid.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(violations))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Three LRU caches of sizes 500/1200/500 and two providers
    /// (N = 1e4, alpha = 0.6, R = 10 and N = 2e4, alpha = 0.8, R = 15).
    /// Provider 0 reaches caches 0 and 1, provider 1 reaches caches 1 and 2.
    pub fn example_base() -> Self {
        let providers = vec![
            ContentProvider::new(DemandModel {
                catalog_size: 10_000,
                zipf_alpha: 0.6,
                aggregate_rate: 10.0,
            }),
            ContentProvider::new(DemandModel {
                catalog_size: 20_000,
                zipf_alpha: 0.8,
                aggregate_rate: 15.0,
            }),
        ];
        Scenario {
            caches: vec![
                CacheNode::lru(500.0),
                CacheNode::lru(1200.0),
                CacheNode::lru(500.0),
            ],
            providers,
            adjacency: Matrix::from_rows(vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]),
            bandwidth: None,
            delays: None,
        }
    }

    /// [`Scenario::example_base`] with volume limits V = [[6, 8, 0], [0, 10, 8]].
    pub fn example_bandwidth() -> Self {
        Scenario {
            bandwidth: Some(Matrix::from_rows(vec![
                vec![6.0, 8.0, 0.0],
                vec![0.0, 10.0, 8.0],
            ])),
            ..Self::example_base()
        }
    }

    pub fn with_capacity(mut self, cache: usize, capacity: f64) -> Self {
        self.caches[cache].capacity = capacity;
        self
    }
}

pub fn validate(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, message: String| out.push(Violation { code, message });
    let (k_count, m_count) = (s.num_providers(), s.num_caches());

    if m_count == 0 {
        push(ViolationCode::NoCaches, "scenario has no caches".into());
    }
    if k_count == 0 {
        push(ViolationCode::NoProviders, "scenario has no providers".into());
    }
    for (m, cache) in s.caches.iter().enumerate() {
        if !(cache.capacity > 0.0 && cache.capacity.is_finite()) {
            push(
                ViolationCode::InvalidCapacity,
                format!("cache {m}: capacity must be > 0, got {}", cache.capacity),
            );
        }
    }
    for (k, p) in s.providers.iter().enumerate() {
        for msg in p.demand.problems() {
            push(ViolationCode::InvalidDemand, format!("provider {k}: {msg}"));
        }
        if !(p.weight > 0.0 && p.weight.is_finite()) {
            push(
                ViolationCode::InvalidWeight,
                format!("provider {k}: weight must be > 0, got {}", p.weight),
            );
        }
        if let Some(msg) = p.utility.problem() {
            push(ViolationCode::InvalidUtility, format!("provider {k}: {msg}"));
        }
        if p.utility == UtilitySpec::NegatedLatency {
            push(
                ViolationCode::InvalidUtility,
                format!("provider {k}: negated_latency is a latency utility, not a hit-rate utility"),
            );
        }
        if let Some(msg) = p.latency_utility.problem() {
            push(
                ViolationCode::InvalidUtility,
                format!("provider {k}: latency utility: {msg}"),
            );
        }
    }

    if s.adjacency.rows() != k_count || s.adjacency.cols() != m_count {
        push(
            ViolationCode::AdjacencyShape,
            format!(
                "adjacency is {}x{}, expected {k_count}x{m_count}",
                s.adjacency.rows(),
                s.adjacency.cols()
            ),
        );
        return out;
    }
    for k in 0..k_count {
        for m in 0..m_count {
            let a = s.adjacency[(k, m)];
            if a != 0.0 && a != 1.0 {
                push(
                    ViolationCode::AdjacencyNotBinary,
                    format!("adjacency[{k}][{m}] = {a} is not 0 or 1"),
                );
            }
        }
        if s.adjacency.row(k).iter().all(|&a| a == 0.0) {
            push(
                ViolationCode::ProviderDisconnected,
                format!("provider {k} connects to no cache"),
            );
        }
    }

    if let Some(v) = &s.bandwidth {
        if v.rows() != k_count || v.cols() != m_count {
            push(
                ViolationCode::BandwidthShape,
                format!(
                    "bandwidth is {}x{}, expected {k_count}x{m_count}",
                    v.rows(),
                    v.cols()
                ),
            );
        } else {
            for k in 0..k_count {
                let mut reachable = 0.0;
                for m in 0..m_count {
                    let vol = v[(k, m)];
                    if !(vol >= 0.0) {
                        push(
                            ViolationCode::BandwidthNegative,
                            format!("bandwidth[{k}][{m}] = {vol} is negative"),
                        );
                    } else if vol > 0.0 && !s.connected(k, m) {
                        push(
                            ViolationCode::BandwidthOnDisconnectedPair,
                            format!("bandwidth[{k}][{m}] = {vol} but provider {k} is not connected to cache {m}"),
                        );
                    } else if s.connected(k, m) {
                        reachable += vol;
                    }
                }
                let rate = s.providers[k].demand.aggregate_rate;
                if reachable < rate * (1.0 - FEASIBILITY_EPS) {
                    push(
                        ViolationCode::BandwidthInsufficient,
                        format!("provider {k}: total bandwidth {reachable} is below its request rate {rate}"),
                    );
                }
            }
        }
    }

    if let Some(d) = &s.delays {
        let shape_ok = [&d.hit, &d.miss]
            .iter()
            .all(|x| x.rows() == k_count && x.cols() == m_count);
        if !shape_ok {
            push(
                ViolationCode::DelayShape,
                format!("delay matrices must be {k_count}x{m_count}"),
            );
        } else {
            for k in 0..k_count {
                for m in 0..m_count {
                    if !s.connected(k, m) {
                        continue;
                    }
                    let (hit, miss) = (d.hit[(k, m)], d.miss[(k, m)]);
                    if !(0.0 <= hit && hit < miss && miss.is_finite()) {
                        push(
                            ViolationCode::DelayOrder,
                            format!("provider {k}, cache {m}: need 0 <= hit delay ({hit}) < miss delay ({miss})"),
                        );
                    }
                }
            }
        }
    }
    out
}

/// Joint partition and routing returned by every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Slice `C_km` (files) given to provider `k` in cache `m`.
    pub partition: Matrix,
    /// Fraction `p_km` of provider `k`'s requests routed to cache `m`.
    pub routing: Matrix,
    pub per_cp_hit_rate: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_cp_latency: Option<Vec<f64>>,
    pub objective: f64,
    /// Human-readable routing structure per provider.
    pub routing_label: Vec<String>,
}

impl Solution {
    /// Total hit rate over all providers.
    pub fn total_hit_rate(&self) -> f64 {
        self.per_cp_hit_rate.iter().sum()
    }

    /// The single cache each provider routes to, if the routing is
    /// deterministic.
    pub fn assignment(&self) -> Option<Vec<usize>> {
        (0..self.routing.rows())
            .map(|k| {
                let row = self.routing.row(k);
                row.iter()
                    .position(|&p| (p - 1.0).abs() < 1e-12)
                    .filter(|_| row.iter().filter(|&&p| p > 1e-12).count() == 1)
            })
            .collect()
    }

    /// Invariant violations of this solution with respect to `scenario`:
    /// capacity, routing simplex, connectivity and catalog bounds.
    pub fn feasibility_issues(&self, scenario: &Scenario) -> Vec<String> {
        let mut out = Vec::new();
        for (m, cache) in scenario.caches.iter().enumerate() {
            let used = self.partition.column_sum(m);
            if used > cache.capacity + 1e-6 {
                out.push(format!(
                    "cache {m}: allocated {used} exceeds capacity {}",
                    cache.capacity
                ));
            }
        }
        for (k, provider) in scenario.providers.iter().enumerate() {
            let total = self.routing.row_sum(k);
            if (total - 1.0).abs() > 1e-9 {
                out.push(format!("provider {k}: routing sums to {total}"));
            }
            for m in 0..scenario.num_caches() {
                let p = self.routing[(k, m)];
                let c = self.partition[(k, m)];
                if p < 0.0 || p > scenario.adjacency[(k, m)] + 1e-12 {
                    out.push(format!("p[{k}][{m}] = {p} violates 0 <= p <= a"));
                }
                if c < -1e-9 || c > provider.demand.catalog_size as f64 + 1e-6 {
                    out.push(format!("C[{k}][{m}] = {c} outside [0, N_k]"));
                }
                if let Some(v) = &scenario.bandwidth {
                    let volume = p * provider.demand.aggregate_rate;
                    if volume > v[(k, m)] + 1e-9 {
                        out.push(format!(
                            "provider {k}, cache {m}: volume {volume} exceeds limit {}",
                            v[(k, m)]
                        ));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_base_is_valid() {
        assert!(Scenario::example_base().validate().is_empty());
        assert!(Scenario::example_bandwidth().validate().is_empty());
    }

    #[test]
    fn disconnected_provider_is_reported() {
        let mut s = Scenario::example_base();
        s.adjacency.row_mut(1).fill(0.0);
        let v = s.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::ProviderDisconnected);
    }

    #[test]
    fn bandwidth_checks() {
        let mut s = Scenario::example_bandwidth();
        s.bandwidth.as_mut().unwrap()[(0, 1)] = 3.0;
        let codes: Vec<_> = s.validate().into_iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::BandwidthInsufficient]);

        let mut s = Scenario::example_bandwidth();
        s.bandwidth.as_mut().unwrap()[(0, 2)] = 1.0;
        let codes: Vec<_> = s.validate().into_iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::BandwidthOnDisconnectedPair]);
    }

    #[test]
    fn delay_order_is_checked_on_connected_pairs_only() {
        let mut s = Scenario::example_base();
        s.delays = Some(DelayProfile {
            hit: Matrix::from_rows(vec![vec![1.0, 2.0, 9.0], vec![0.0, 1.0, 1.0]]),
            miss: Matrix::from_rows(vec![vec![5.0, 6.0, 0.0], vec![0.0, 4.0, 1.0]]),
        });
        let v = s.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::DelayOrder);
        assert!(v[0].message.contains("provider 1, cache 2"));
    }

    #[test]
    fn invalid_fields_collect_every_violation() {
        let mut s = Scenario::example_base();
        s.caches[0].capacity = 0.0;
        s.providers[0].weight = -1.0;
        s.providers[1].demand.zipf_alpha = -0.5;
        s.providers[1].utility = UtilitySpec::BetaFair { beta: 1.0 };
        let mut codes: Vec<_> = s.validate().into_iter().map(|v| v.code).collect();
        codes.sort_by_key(|c| c.as_str());
        assert_eq!(
            codes,
            vec![
                ViolationCode::InvalidCapacity,
                ViolationCode::InvalidDemand,
                ViolationCode::InvalidUtility,
                ViolationCode::InvalidWeight,
            ]
        );
    }

    #[test]
    fn file_rates_small_cases() {
        let uniform = file_rates(&DemandModel::new(4, 0.0, 8.0).unwrap());
        assert_eq!(uniform, vec![2.0, 2.0, 2.0, 2.0]);
        let two = file_rates(&DemandModel::new(2, 1.0, 3.0).unwrap());
        assert!((two[0] - 2.0).abs() < 1e-15 && (two[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn file_rates_is_homogeneous_in_rate() {
        let a = file_rates(&DemandModel::new(5000, 0.7, 3.3).unwrap());
        let b = file_rates(&DemandModel::new(5000, 0.7, 6.6).unwrap());
        assert!(a.iter().zip(&b).all(|(x, y)| 2.0 * x == *y));
    }

    #[test]
    fn utility_derivatives_match_finite_differences() {
        let kinds = [
            UtilitySpec::Linear,
            UtilitySpec::Log,
            UtilitySpec::BetaFair { beta: 0.5 },
            UtilitySpec::BetaFair { beta: 2.0 },
        ];
        for u in kinds {
            for i in 1..50 {
                let x = 0.1 * i as f64;
                let h = 1e-5;
                let fd = (u.value(x + h) - u.value(x - h)) / (2.0 * h);
                assert!((fd - u.derivative(x)).abs() < 1e-6 * (1.0 + fd.abs()), "{u:?} at {x}");
                assert!(u.derivative(x) >= 0.0);
                let second = u.value(x + h) - 2.0 * u.value(x) + u.value(x - h);
                assert!(second <= 1e-9, "{u:?} not concave at {x}");
            }
        }
    }

    #[test]
    fn json_round_trip_uses_flat_provider_fields() {
        let text = r#"{
            "caches": [{"capacity": 100, "policy": "FIFO"}],
            "providers": [{"catalog_size": 50, "zipf_alpha": 0.8, "aggregate_rate": 2.5,
                           "utility": {"kind": "beta_fair", "beta": 2.0}}],
            "adjacency": [[1]]
        }"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.caches[0].policy, CachePolicy::Fifo);
        assert_eq!(s.providers[0].weight, 1.0);
        assert_eq!(s.providers[0].utility, UtilitySpec::BetaFair { beta: 2.0 });
        assert_eq!(s.providers[0].latency_utility, UtilitySpec::NegatedLatency);
        let again = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, again);
    }
}
