//! The weighted-utility objective shared by all solvers.
//!
//! Every objective handled by this crate has the form
//!
//! ```text
//! Σ_k w_k G_k( a_k(P_k) + Σ_m q_km p_km h_k(C_km) )
//! ```
//!
//! with `G_k` concave and increasing, `h_k` the provider's full-stream hit
//! curve under cache `m`'s policy, and `q_km >= 0` a per-pair gain:
//!
//! * hit-rate objective: `a_k = 0`, `q_km = 1`, `G_k = U_k`;
//! * latency objective: the mean latency is
//!   `t_k = Σ_m p_km d0_km - Σ_m (d0_km - d_km)/Λ_k · p_km h_k(C_km)`,
//!   so `q_km = (d0_km - d_km)/Λ_k` and `a_k = -Σ_m p_km d0_km` for
//!   `U(t) = -t`, or `a_k = τ - Σ_m p_km d0_km` when a hit-rate-style
//!   utility is applied to the slack `τ - t_k` (`τ` = largest miss delay).
//!
//! Writing both objectives this way lets one allocation and routing
//! machinery serve the basic, bandwidth-limited and latency variants.

use std::sync::Arc;

use crate::che::HitCurve;
use crate::model::{Scenario, Solution, UtilitySpec};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectiveKind {
    /// Weighted utility of per-provider hit rates.
    #[default]
    HitRate,
    /// Weighted utility of per-provider mean latencies.
    Latency,
}

/// A validated scenario together with the objective to optimize and the
/// provider hit curves it needs.
#[derive(Debug, Clone)]
pub struct Problem {
    scenario: Scenario,
    kind: ObjectiveKind,
    /// `curves[k][m]`; caches sharing a policy share the same curve.
    curves: Vec<Vec<Arc<HitCurve>>>,
    transforms: Vec<UtilitySpec>,
    latency_ceiling: f64,
    enforce_bandwidth: bool,
}

/// Objective value and per-provider performance of a (partition, routing).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub hit_rates: Vec<f64>,
    pub latencies: Option<Vec<f64>>,
}

impl Problem {
    pub fn new(scenario: Scenario, kind: ObjectiveKind) -> Result<Self> {
        scenario.ensure_valid()?;
        if kind == ObjectiveKind::Latency && scenario.delays.is_none() {
            return Err(Error::MissingDelays);
        }
        let mut curves = Vec::with_capacity(scenario.num_providers());
        for provider in &scenario.providers {
            let mut by_policy: [Option<Arc<HitCurve>>; 3] = [None, None, None];
            let row = scenario
                .caches
                .iter()
                .map(|cache| {
                    by_policy[cache.policy.index()]
                        .get_or_insert_with(|| {
                            Arc::new(HitCurve::from_demand(cache.policy, &provider.demand))
                        })
                        .clone()
                })
                .collect();
            curves.push(row);
        }
        let transforms = scenario
            .providers
            .iter()
            .map(|p| match kind {
                ObjectiveKind::HitRate => p.utility,
                ObjectiveKind::Latency => match p.latency_utility {
                    UtilitySpec::NegatedLatency => UtilitySpec::Linear,
                    other => other,
                },
            })
            .collect();
        let latency_ceiling = match &scenario.delays {
            Some(d) => {
                let mut tau: f64 = 0.0;
                for k in 0..scenario.num_providers() {
                    for m in 0..scenario.num_caches() {
                        if scenario.connected(k, m) {
                            tau = tau.max(d.miss[(k, m)]);
                        }
                    }
                }
                tau
            }
            None => 0.0,
        };
        Ok(Self {
            scenario,
            kind,
            curves,
            transforms,
            latency_ceiling,
            enforce_bandwidth: false,
        })
    }

    pub fn hit_rate(scenario: Scenario) -> Result<Self> {
        Self::new(scenario, ObjectiveKind::HitRate)
    }

    pub fn latency(scenario: Scenario) -> Result<Self> {
        Self::new(scenario, ObjectiveKind::Latency)
    }

    /// Makes routing-side solvers respect the per-pair volume limits.
    pub fn with_bandwidth_limits(mut self) -> Result<Self> {
        if self.scenario.bandwidth.is_none() {
            return Err(Error::MissingBandwidth);
        }
        self.enforce_bandwidth = true;
        Ok(self)
    }

    pub fn without_bandwidth_limits(mut self) -> Self {
        self.enforce_bandwidth = false;
        self
    }

    pub fn enforces_bandwidth(&self) -> bool {
        self.enforce_bandwidth
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn num_providers(&self) -> usize {
        self.scenario.num_providers()
    }

    pub fn num_caches(&self) -> usize {
        self.scenario.num_caches()
    }

    pub fn curve(&self, k: usize, m: usize) -> &HitCurve {
        &self.curves[k][m]
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.scenario.providers[k].weight
    }

    /// Aggregate request rate `Λ_k`.
    pub fn provider_rate(&self, k: usize) -> f64 {
        self.scenario.providers[k].demand.aggregate_rate
    }

    pub fn capacity(&self, m: usize) -> f64 {
        self.scenario.caches[m].capacity
    }

    /// Concave increasing transform `G_k` applied to the provider's argument.
    pub fn transform(&self, k: usize) -> UtilitySpec {
        self.transforms[k]
    }

    /// Gain `q_km` of a full-stream hit on cache `m`.
    pub fn gain(&self, k: usize, m: usize) -> f64 {
        match self.kind {
            ObjectiveKind::HitRate => 1.0,
            ObjectiveKind::Latency => {
                let d = self.scenario.delays.as_ref().expect("checked in new");
                (d.miss[(k, m)] - d.hit[(k, m)]) / self.provider_rate(k)
            }
        }
    }

    /// Part of the provider's argument that depends on routing alone:
    /// `a_k(P_k) = Σ_m p_km · base_km` plus the latency ceiling when needed.
    pub fn offset(&self, k: usize, routing_row: &[f64]) -> f64 {
        let routed: f64 = routing_row
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(m, &p)| p * self.route_base(k, m))
            .sum();
        routed + self.offset_constant(k)
    }

    fn offset_constant(&self, k: usize) -> f64 {
        match (self.kind, self.scenario.providers[k].latency_utility) {
            (ObjectiveKind::Latency, UtilitySpec::NegatedLatency) | (ObjectiveKind::HitRate, _) => 0.0,
            (ObjectiveKind::Latency, _) => self.latency_ceiling,
        }
    }

    /// Per-unit-routing contribution to the argument that does not depend on
    /// the slice: `-d0_km` for latency, 0 for hit rate.
    pub fn route_base(&self, k: usize, m: usize) -> f64 {
        match self.kind {
            ObjectiveKind::HitRate => 0.0,
            ObjectiveKind::Latency => {
                -self.scenario.delays.as_ref().expect("checked in new").miss[(k, m)]
            }
        }
    }

    /// Largest admissible `p_km`: the adjacency entry, further capped by
    /// `V_km / Λ_k` when bandwidth limits are enforced.
    pub fn routing_cap(&self, k: usize, m: usize) -> f64 {
        let a = self.scenario.adjacency[(k, m)];
        match (&self.scenario.bandwidth, self.enforce_bandwidth) {
            (Some(v), true) if a > 0.0 => (v[(k, m)] / self.provider_rate(k)).min(a),
            _ => a,
        }
    }

    /// `w_k G_k(arg)`.
    pub fn provider_value(&self, k: usize, argument: f64) -> f64 {
        self.weight(k) * self.transform(k).value(argument)
    }

    /// Objective and per-provider hit rates (and latencies) of a partition
    /// and routing.
    pub fn evaluate(&self, partition: &Matrix, routing: &Matrix) -> Result<Evaluation> {
        let (kc, mc) = (self.num_providers(), self.num_caches());
        for m in [partition, routing] {
            if m.rows() != kc || m.cols() != mc {
                return Err(Error::InvalidArgument(format!(
                    "expected {kc}x{mc} matrices, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let mut objective = 0.0;
        let mut hit_rates = Vec::with_capacity(kc);
        let mut latencies = Vec::with_capacity(kc);
        for k in 0..kc {
            let row = routing.row(k);
            let mut hit = 0.0;
            let mut argument = self.offset(k, row);
            for (m, &p) in row.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let size = partition[(k, m)].min(self.curve(k, m).catalog_size());
                let h = p * self.curve(k, m).hit_rate(size.max(0.0))?;
                hit += h;
                argument += self.gain(k, m) * h;
            }
            hit_rates.push(hit);
            if self.kind == ObjectiveKind::Latency {
                latencies.push(argument_to_latency(argument, self.offset_constant(k)));
            }
            objective += self.provider_value(k, argument);
        }
        Ok(Evaluation {
            objective,
            hit_rates,
            latencies: (self.kind == ObjectiveKind::Latency).then_some(latencies),
        })
    }

    /// Assembles a [`Solution`] from a partition and routing.
    pub fn solution(
        &self,
        partition: Matrix,
        routing: Matrix,
        routing_label: Vec<String>,
    ) -> Result<Solution> {
        let eval = self.evaluate(&partition, &routing)?;
        Ok(Solution {
            partition,
            routing,
            per_cp_hit_rate: eval.hit_rates,
            per_cp_latency: eval.latencies,
            objective: eval.objective,
            routing_label,
        })
    }
}

/// The argument is `c - t_k` where `c` is the constant part of the offset.
fn argument_to_latency(argument: f64, constant: f64) -> f64 {
    constant - argument
}

/// Label for a routing row: `cache 1` for deterministic rows, otherwise the
/// non-zero fractions.
pub fn describe_row(row: &[f64]) -> String {
    let used: Vec<(usize, f64)> = row
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, p)| *p > 0.0)
        .collect();
    match used.as_slice() {
        [(m, p)] if (*p - 1.0).abs() < 1e-12 => format!("cache {m}"),
        _ => used
            .iter()
            .map(|(m, p)| format!("cache {m}:{p:.4}"))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DelayProfile;

    fn latency_scenario() -> Scenario {
        let mut s = Scenario::example_base();
        s.delays = Some(DelayProfile {
            hit: Matrix::from_rows(vec![vec![1.0, 2.0, 0.0], vec![0.0, 1.5, 0.5]]),
            miss: Matrix::from_rows(vec![vec![10.0, 8.0, 0.0], vec![0.0, 9.0, 12.0]]),
        });
        s
    }

    #[test]
    fn latency_evaluation_matches_direct_formula() {
        let problem = Problem::latency(latency_scenario()).unwrap();
        let partition = Matrix::from_rows(vec![vec![300.0, 200.0, 0.0], vec![0.0, 1000.0, 500.0]]);
        let routing = Matrix::from_rows(vec![vec![0.25, 0.75, 0.0], vec![0.0, 0.6, 0.4]]);
        let eval = problem.evaluate(&partition, &routing).unwrap();
        let d = problem.scenario().delays.clone().unwrap();
        for k in 0..2 {
            let rate = problem.provider_rate(k);
            let mut t = 0.0;
            for m in 0..3 {
                let p = routing[(k, m)];
                if p == 0.0 {
                    continue;
                }
                let h = p * problem.curve(k, m).hit_rate(partition[(k, m)]).unwrap();
                t += (d.hit[(k, m)] * h + d.miss[(k, m)] * (rate * p - h)) / rate;
            }
            let got = eval.latencies.as_ref().unwrap()[k];
            assert!((got - t).abs() < 1e-12, "provider {k}: {got} vs {t}");
        }
        let expected: f64 = -eval.latencies.unwrap().iter().sum::<f64>();
        assert!((eval.objective - expected).abs() < 1e-12);
    }

    #[test]
    fn latency_requires_delays() {
        assert!(matches!(
            Problem::latency(Scenario::example_base()),
            Err(Error::MissingDelays)
        ));
    }

    #[test]
    fn routing_cap_respects_bandwidth_only_when_enforced() {
        let problem = Problem::hit_rate(Scenario::example_bandwidth()).unwrap();
        assert_eq!(problem.routing_cap(0, 0), 1.0);
        let limited = problem.with_bandwidth_limits().unwrap();
        assert!((limited.routing_cap(0, 0) - 0.6).abs() < 1e-15);
        assert!((limited.routing_cap(1, 2) - 8.0 / 15.0).abs() < 1e-15);
        assert_eq!(limited.routing_cap(0, 2), 0.0);
    }

    #[test]
    fn caches_with_same_policy_share_curves() {
        let problem = Problem::hit_rate(Scenario::example_base()).unwrap();
        assert!(Arc::ptr_eq(&problem.curves[0][0], &problem.curves[0][1]));
    }
}
