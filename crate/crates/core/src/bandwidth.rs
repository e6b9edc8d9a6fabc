//! Bandwidth-limited routing.
//!
//! With per-pair volume limits `V_km` an optimal routing sends a provider's
//! traffic at full volume to a set of caches `I`, and the remainder (if any)
//! to one more cache `s`. Enumerating those structures per provider and
//! solving the allocation for each combination gives the optimum.

use std::collections::BTreeSet;
use std::fmt;

use crate::alloc::{allocate, DEFAULT_ENUMERATION_CAP};
use crate::par::Execution;
use crate::{Error, Matrix, Problem, Result, Scenario, Solution};

const VOLUME_EPS: f64 = 1e-12;

/// One provider's routing structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderStructure {
    pub provider: usize,
    /// Caches receiving exactly `V_km`, ascending.
    pub saturated: Vec<usize>,
    /// Cache receiving the remainder and the routed fraction, if the
    /// saturated caches leave any traffic over.
    pub residual: Option<(usize, f64)>,
}

impl ProviderStructure {
    /// Routing row induced by the structure.
    pub fn row(&self, problem: &Problem) -> Vec<f64> {
        let mut row = vec![0.0; problem.num_caches()];
        for &m in &self.saturated {
            row[m] = problem.routing_cap(self.provider, m);
        }
        if let Some((s, r)) = self.residual {
            row[s] = r;
        }
        row
    }
}

impl fmt::Display for ProviderStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set: Vec<String> = self.saturated.iter().map(usize::to_string).collect();
        write!(f, "I={{{}}}", set.join(","))?;
        match self.residual {
            Some((s, r)) => write!(f, ",s={s},r={r:.4}"),
            None => f.write_str(",s=-"),
        }
    }
}

/// A structure for every provider.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthRouting {
    pub structures: Vec<ProviderStructure>,
}

impl BandwidthRouting {
    pub fn to_matrix(&self, problem: &Problem) -> Matrix {
        Matrix::from_rows(self.structures.iter().map(|s| s.row(problem)).collect())
    }

    pub fn labels(&self) -> Vec<String> {
        self.structures.iter().map(ToString::to_string).collect()
    }

    /// Checks membership, volumes and that the rows sum to one.
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        if self.structures.len() != problem.num_providers() {
            return Err(Error::InfeasibleRouting("one structure per provider is required".into()));
        }
        for (k, st) in self.structures.iter().enumerate() {
            let bad = |msg: String| Err(Error::InfeasibleRouting(format!("provider {k}: {msg}")));
            if st.provider != k {
                return bad(format!("structure is for provider {}", st.provider));
            }
            let mut seen = BTreeSet::new();
            for &m in st.saturated.iter().chain(st.residual.iter().map(|(s, _)| s)) {
                if m >= problem.num_caches() || !problem.scenario().connected(k, m) {
                    return bad(format!("cache {m} is not connected"));
                }
                if !seen.insert(m) {
                    return bad(format!("cache {m} appears twice"));
                }
            }
            if let Some((s, r)) = st.residual {
                if !(r > 0.0) || r > problem.routing_cap(k, s) + VOLUME_EPS {
                    return bad(format!("residual fraction {r} exceeds the limit of cache {s}"));
                }
            }
            let total: f64 = st.row(problem).iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return bad(format!("routed fractions sum to {total}"));
            }
        }
        Ok(())
    }
}

fn subsets(items: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0u64..1 << items.len()).map(move |mask| {
        items
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &m)| m)
            .collect()
    })
}

/// Every feasible structure for provider `k`, deduplicated by induced
/// routing row. The problem must enforce bandwidth limits.
pub fn provider_structures(problem: &Problem, k: usize) -> Vec<ProviderStructure> {
    let caches: Vec<usize> = problem
        .scenario()
        .connected_caches(k)
        .into_iter()
        .filter(|&m| problem.routing_cap(k, m) > 0.0)
        .collect();
    let mut out: Vec<ProviderStructure> = Vec::new();
    let mut seen: Vec<Vec<f64>> = Vec::new();
    let mut push = |st: ProviderStructure| {
        let row = st.row(problem);
        let duplicate = seen
            .iter()
            .any(|r| r.iter().zip(&row).all(|(a, b)| (a - b).abs() <= VOLUME_EPS));
        if !duplicate {
            seen.push(row);
            out.push(st);
        }
    };
    for set in subsets(&caches) {
        let used: f64 = set.iter().map(|&m| problem.routing_cap(k, m)).sum();
        let rest = 1.0 - used;
        if rest < -VOLUME_EPS {
            continue;
        }
        if rest <= VOLUME_EPS {
            push(ProviderStructure {
                provider: k,
                saturated: set,
                residual: None,
            });
            continue;
        }
        for &s in caches.iter().filter(|m| !set.contains(m)) {
            let cap = problem.routing_cap(k, s);
            if cap < rest - VOLUME_EPS {
                continue;
            }
            if (cap - rest).abs() <= VOLUME_EPS {
                // Residual fills s exactly: that is the saturated set I ∪ {s}.
                let mut full = set.clone();
                full.push(s);
                full.sort_unstable();
                push(ProviderStructure {
                    provider: k,
                    saturated: full,
                    residual: None,
                });
            } else {
                push(ProviderStructure {
                    provider: k,
                    saturated: set.clone(),
                    residual: Some((s, rest)),
                });
            }
        }
    }
    out
}

/// Number of combined structures, `Π_k |structures(k)|`.
pub fn structure_count(problem: &Problem) -> u128 {
    (0..problem.num_providers())
        .map(|k| provider_structures(problem, k).len() as u128)
        .product()
}

/// All combinations of per-provider structures, later providers varying
/// fastest.
pub fn enumerate_bandwidth_routings(problem: &Problem, cap: u128) -> Result<Vec<BandwidthRouting>> {
    if !problem.enforces_bandwidth() {
        return Err(Error::MissingBandwidth);
    }
    let per: Vec<Vec<ProviderStructure>> = (0..problem.num_providers())
        .map(|k| provider_structures(problem, k))
        .collect();
    let count: u128 = per.iter().map(|p| p.len() as u128).product();
    if count > cap {
        return Err(Error::InstanceTooLarge { count, cap });
    }
    if let Some(k) = per.iter().position(Vec::is_empty) {
        return Err(Error::InfeasibleRouting(format!(
            "provider {k} has no routing within its bandwidth limits"
        )));
    }
    let mut out = vec![Vec::new()];
    for options in &per {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<ProviderStructure>| {
                options.iter().map(move |st| {
                    let mut next = prefix.clone();
                    next.push(st.clone());
                    next
                })
            })
            .collect();
    }
    Ok(out
        .into_iter()
        .map(|structures| BandwidthRouting { structures })
        .collect())
}

#[derive(Debug, Clone, Copy)]
pub struct BandwidthOptions {
    pub cap: u128,
    pub exec: Execution,
}

impl Default for BandwidthOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ENUMERATION_CAP,
            exec: Execution::default(),
        }
    }
}

/// Optimal bandwidth-limited solution of a scenario under the hit-rate
/// objective.
pub fn solve_bandwidth(scenario: Scenario) -> Result<Solution> {
    let problem = Problem::hit_rate(scenario)?.with_bandwidth_limits()?;
    solve_bandwidth_problem(&problem, BandwidthOptions::default())
}

/// Evaluates every combined structure and keeps the best; ties go to the
/// first in enumeration order.
pub fn solve_bandwidth_problem(problem: &Problem, opts: BandwidthOptions) -> Result<Solution> {
    let routings = enumerate_bandwidth_routings(problem, opts.cap)?;
    let scored = opts.exec.map(&routings, |r| {
        allocate(problem, &r.to_matrix(problem), Execution::Sequential).map(|a| a.objective)
    });
    let mut best: Option<(usize, f64)> = None;
    for (i, score) in scored.into_iter().enumerate() {
        let score = score?;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    let (index, _) = best.expect("at least one structure");
    evaluate_bandwidth_routing(problem, &routings[index], opts.exec)
}

pub fn evaluate_bandwidth_routing(
    problem: &Problem,
    routing: &BandwidthRouting,
    exec: Execution,
) -> Result<Solution> {
    routing.validate(problem)?;
    let matrix = routing.to_matrix(problem);
    let alloc = allocate(problem, &matrix, exec)?;
    problem.solution(alloc.partition, matrix, routing.labels())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limited() -> Problem {
        Problem::hit_rate(Scenario::example_bandwidth())
            .unwrap()
            .with_bandwidth_limits()
            .unwrap()
    }

    #[test]
    fn reference_structures_for_first_provider() {
        let problem = limited();
        let labels: Vec<String> = provider_structures(&problem, 0)
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(labels, ["I={0},s=1,r=0.4000", "I={1},s=0,r=0.2000"]);
    }

    #[test]
    fn slack_limits_give_single_cache_routings() {
        let mut s = Scenario::example_bandwidth();
        s.bandwidth = Some(Matrix::from_rows(vec![vec![100.0, 100.0, 0.0], vec![0.0, 150.0, 150.0]]));
        let problem = Problem::hit_rate(s).unwrap().with_bandwidth_limits().unwrap();
        for k in 0..2 {
            let st = provider_structures(&problem, k);
            assert_eq!(st.len(), 2);
            for s in &st {
                let row = s.row(&problem);
                assert_eq!(row.iter().filter(|&&p| p == 1.0).count(), 1, "{s}");
                assert_eq!(row.iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn exact_volume_is_one_structure() {
        let mut s = Scenario::example_bandwidth();
        s.adjacency = Matrix::from_rows(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]]);
        s.bandwidth = Some(Matrix::from_rows(vec![vec![10.0, 0.0, 0.0], vec![0.0, 10.0, 8.0]]));
        let problem = Problem::hit_rate(s).unwrap().with_bandwidth_limits().unwrap();
        let st = provider_structures(&problem, 0);
        assert_eq!(st.len(), 1);
        assert_eq!(st[0].saturated, vec![0]);
        assert_eq!(st[0].residual, None);
    }

    #[test]
    fn solutions_respect_limits() {
        let problem = limited();
        let sol = solve_bandwidth_problem(&problem, BandwidthOptions::default()).unwrap();
        assert!(sol.feasibility_issues(problem.scenario()).is_empty());
    }

    #[test]
    fn requires_enforced_limits() {
        let problem = Problem::hit_rate(Scenario::example_bandwidth()).unwrap();
        assert!(matches!(enumerate_bandwidth_routings(&problem, 10), Err(Error::MissingBandwidth)));
    }
}
