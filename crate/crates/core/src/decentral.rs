//! Price-based decentralized mechanism.
//!
//! Each cache posts a price per unit of storage. Every round, each provider
//! asks each of its caches for the slice that maximizes its utility minus
//! the price paid, then every cache moves its price along the excess demand:
//!
//! ```text
//! μ_m ← [μ_m + γ_t (Σ_k C_km − C_m)]⁺
//! ```
//!
//! Rounds are synchronous: all bids are computed against the same prices.

use std::collections::VecDeque;

use log::{debug, warn};

use crate::alloc::{enumerate_routings, Participant, RoutingConfig, DEFAULT_ENUMERATION_CAP};
use crate::bandwidth::BandwidthRouting;
use crate::numeric::{find_root, RootTol};
use crate::objective::describe_row;
use crate::par::Execution;
use crate::{Error, Matrix, Problem, Result, Solution, UtilitySpec};

/// Overshoot above which the final proportional clipping is flagged.
pub const OVERSHOOT_WARNING: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepSchedule {
    /// `γ_t = γ`.
    #[default]
    Constant,
    /// `γ_t = γ / √t`.
    InverseSqrt,
}

impl std::str::FromStr for StepSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "sqrt" | "inverse-sqrt" => Ok(Self::InverseSqrt),
            other => Err(Error::InvalidArgument(format!(
                "unknown step schedule {other:?} (expected constant or sqrt)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecentralOptions {
    pub gamma: f64,
    pub schedule: StepSchedule,
    pub max_rounds: usize,
    /// Convergence threshold on the price drift over `window` rounds.
    pub stop_tol: f64,
    pub window: usize,
    /// Starting prices; zero when absent.
    pub initial_prices: Option<Vec<f64>>,
    /// Keep every `trace_stride`-th round in the trace.
    pub trace_stride: usize,
    pub exec: Execution,
}

impl Default for DecentralOptions {
    fn default() -> Self {
        Self {
            gamma: 1e-6,
            schedule: StepSchedule::Constant,
            max_rounds: 100_000,
            stop_tol: 1e-8,
            window: 100,
            initial_prices: None,
            trace_stride: 1,
            exec: Execution::default(),
        }
    }
}

/// Prices and the demands they produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceState {
    pub prices: Vec<f64>,
    pub demands: Matrix,
    pub round: usize,
    pub step: f64,
}

impl PriceState {
    pub fn new(prices: Vec<f64>, providers: usize, step: f64) -> Self {
        let caches = prices.len();
        Self {
            prices,
            demands: Matrix::zeros(providers, caches),
            round: 0,
            step,
        }
    }

    /// Step size for round `t` (1-based).
    pub fn step_at(&self, schedule: StepSchedule, t: usize) -> f64 {
        match schedule {
            StepSchedule::Constant => self.step,
            StepSchedule::InverseSqrt => self.step / (t.max(1) as f64).sqrt(),
        }
    }
}

/// Projected subgradient step for one cache.
pub fn price_update(price: f64, step: f64, total_demand: f64, capacity: f64) -> f64 {
    (price + step * (total_demand - capacity)).max(0.0)
}

/// A provider's answer to the posted prices.
#[derive(Debug, Clone, PartialEq)]
pub struct CpBid {
    pub provider: usize,
    pub routing: Vec<f64>,
    /// Requested slice per cache (zero where the provider routes nothing).
    pub demands: Vec<f64>,
    /// Full-stream hit rate per cache at the requested slice.
    pub hit_rates: Vec<f64>,
    /// Characteristic time per cache at the requested slice.
    pub times: Vec<f64>,
    /// `w G(a + Σ_m q_km p_km h_k(C_km))` at the bid.
    pub utility: f64,
}

impl CpBid {
    pub fn required_cache_size(&self) -> f64 {
        self.demands.iter().sum()
    }
}

/// Provider `k`'s utility-maximizing slices under `prices` for a fixed
/// routing row.
///
/// The provider maximizes `w G(a + Σ_m q p_m h(C_m)) − Σ_m μ_m C_m`. When `G`
/// is linear or only one cache is used, this separates into independent
/// one-dimensional problems. Otherwise the optimum satisfies
/// `ν q p_m h'(C_m) = μ_m` for the common multiplier `ν = w G'(·)`, and `ν` is
/// found by a scalar root search.
pub fn cp_best_response(problem: &Problem, k: usize, routing_row: &[f64], prices: &[f64]) -> CpBid {
    cp_best_response_near(problem, k, routing_row, prices, None)
}

/// [`cp_best_response`] with per-cache characteristic-time hints (usually
/// the previous round's [`CpBid::times`]) to speed up the search.
pub fn cp_best_response_near(
    problem: &Problem,
    k: usize,
    routing_row: &[f64],
    prices: &[f64],
    hints: Option<&[f64]>,
) -> CpBid {
    let hint = |m: usize| hints.map(|h| h[m]);
    let mc = problem.num_caches();
    let used: Vec<usize> = (0..mc)
        .filter(|&m| routing_row[m] > 0.0 && problem.gain(k, m) > 0.0)
        .collect();
    let utility = problem.transform(k);
    let offset = problem.offset(k, routing_row);
    let weight = problem.weight(k);
    let participant = |m: usize, weight: f64, utility: UtilitySpec| Participant {
        curve: problem.curve(k, m),
        weight,
        utility,
        offset,
        gain: problem.gain(k, m) * routing_row[m],
    };
    let mut demands = vec![0.0; mc];
    let mut hit_rates = vec![0.0; mc];
    let mut times = vec![0.0; mc];

    if used.len() <= 1 || utility.is_linear() {
        for &m in &used {
            let r = participant(m, weight, utility).best_response_near(prices[m], hint(m));
            demands[m] = r.size;
            hit_rates[m] = r.hit_rate;
            times[m] = r.time;
        }
    } else {
        let z_at = |nu: f64, demands: &mut [f64], hits: &mut [f64], times: &mut [f64]| -> f64 {
            let mut z = 0.0;
            for &m in &used {
                let r = participant(m, nu, UtilitySpec::Linear).best_response_near(prices[m], hint(m));
                demands[m] = r.size;
                hits[m] = r.hit_rate;
                times[m] = r.time;
                z += problem.gain(k, m) * routing_row[m] * r.hit_rate;
            }
            z
        };
        let mut scratch_d = vec![0.0; mc];
        let mut scratch_h = vec![0.0; mc];
        let mut scratch_t = vec![0.0; mc];
        let mut gap = |nu: f64| -> f64 {
            let z = z_at(nu, &mut scratch_d, &mut scratch_h, &mut scratch_t);
            nu.ln() - (weight * utility.derivative(offset + z)).ln()
        };
        let z_max: f64 = used
            .iter()
            .map(|&m| problem.gain(k, m) * routing_row[m] * problem.curve(k, m).total_rate())
            .sum();
        let mut lo = weight * utility.derivative(offset + z_max);
        let mut g_lo = gap(lo);
        while g_lo > 0.0 {
            lo /= 2.0;
            g_lo = gap(lo);
        }
        let mut hi = lo * 2.0;
        let mut g_hi = gap(hi);
        while g_hi < 0.0 {
            hi *= 2.0;
            g_hi = gap(hi);
        }
        let tol = RootTol {
            ftol: 0.0,
            xtol: 1e-13,
            max_iter: 300,
        };
        let v = find_root(|v| gap(v.exp()), lo.ln(), hi.ln(), g_lo, g_hi, tol);
        z_at(v.exp(), &mut demands, &mut hit_rates, &mut times);
    }
    let argument = offset
        + used
            .iter()
            .map(|&m| problem.gain(k, m) * routing_row[m] * hit_rates[m])
            .sum::<f64>();
    CpBid {
        provider: k,
        routing: routing_row.to_vec(),
        demands,
        hit_rates,
        times,
        utility: weight * utility.value(argument),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub round: usize,
    /// Prices the bids of this round responded to.
    pub prices: Vec<f64>,
    pub demands: Matrix,
    /// Per-provider hit rate `Σ_m p_km h_k(C_km)` at the bids.
    pub hit_rates: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    pub rounds: usize,
    /// Largest price movement over the final window.
    pub final_drift: f64,
    /// Relative excess demand per cache before the final clipping.
    pub overshoot: Vec<f64>,
    /// Set when some overshoot exceeded [`OVERSHOOT_WARNING`].
    pub feasibility_warning: bool,
}

#[derive(Debug, Clone)]
pub struct DecentralOutcome {
    pub solution: Solution,
    pub prices: Vec<f64>,
    pub trace: Trace,
}

fn check_routing(problem: &Problem, routing: &Matrix) -> Result<()> {
    let (kc, mc) = (problem.num_providers(), problem.num_caches());
    if routing.rows() != kc || routing.cols() != mc {
        return Err(Error::InvalidArgument("routing matrix has the wrong shape".into()));
    }
    for k in 0..kc {
        let total = routing.row_sum(k);
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InfeasibleRouting(format!(
                "provider {k}: routing sums to {total}"
            )));
        }
        for m in 0..mc {
            let p = routing[(k, m)];
            if p < 0.0 || p > problem.routing_cap(k, m) + 1e-12 {
                return Err(Error::InfeasibleRouting(format!(
                    "provider {k}: fraction {p} to cache {m} is not admissible"
                )));
            }
        }
    }
    Ok(())
}

/// Runs the mechanism for a single-cache routing.
pub fn run_routing(problem: &Problem, routing: &RoutingConfig, opts: &DecentralOptions) -> Result<DecentralOutcome> {
    routing.validate(problem)?;
    run_routing_matrix(
        problem,
        &routing.to_matrix(problem.num_caches()),
        routing.labels(),
        opts,
    )
}

/// Runs the mechanism for a bandwidth-limited structured routing. Providers
/// bid on every cache they send traffic to.
pub fn run_routing_bandwidth(
    problem: &Problem,
    routing: &BandwidthRouting,
    opts: &DecentralOptions,
) -> Result<DecentralOutcome> {
    if !problem.enforces_bandwidth() {
        return Err(Error::MissingBandwidth);
    }
    routing.validate(problem)?;
    run_routing_matrix(problem, &routing.to_matrix(problem), routing.labels(), opts)
}

/// Runs the mechanism for an arbitrary admissible routing matrix.
pub fn run_routing_matrix(
    problem: &Problem,
    routing: &Matrix,
    labels: Vec<String>,
    opts: &DecentralOptions,
) -> Result<DecentralOutcome> {
    check_routing(problem, routing)?;
    if !(opts.gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {}", opts.gamma)));
    }
    let (kc, mc) = (problem.num_providers(), problem.num_caches());
    let prices = match &opts.initial_prices {
        Some(p) if p.len() != mc || p.iter().any(|&x| !(x >= 0.0)) => {
            return Err(Error::InvalidArgument(
                "initial prices must be one nonnegative value per cache".into(),
            ))
        }
        Some(p) => p.clone(),
        None => vec![0.0; mc],
    };
    let mut state = PriceState::new(prices, kc, opts.gamma);
    let bids_at = |prices: &[f64], hints: &[Vec<f64>]| -> Vec<CpBid> {
        opts.exec.map_range(kc, |k| {
            cp_best_response_near(problem, k, routing.row(k), prices, Some(&hints[k]))
        })
    };
    let mut hints = vec![vec![0.0; mc]; kc];
    let window = opts.window.max(1);
    let mut history: VecDeque<Vec<f64>> = VecDeque::with_capacity(window + 1);
    history.push_back(state.prices.clone());
    let mut trace = Trace::default();
    let stride = opts.trace_stride.max(1);

    for t in 1..=opts.max_rounds {
        let bids = bids_at(&state.prices, &hints);
        for bid in &bids {
            state.demands.row_mut(bid.provider).copy_from_slice(&bid.demands);
            hints[bid.provider].clone_from(&bid.times);
        }
        if (t - 1) % stride == 0 {
            trace.rows.push(TraceRow {
                round: t - 1,
                prices: state.prices.clone(),
                demands: state.demands.clone(),
                hit_rates: bids
                    .iter()
                    .map(|b| b.hit_rates.iter().zip(&b.routing).map(|(h, p)| h * p).sum())
                    .collect(),
            });
        }
        let step = state.step_at(opts.schedule, t);
        for m in 0..mc {
            let total = state.demands.column_sum(m);
            state.prices[m] = price_update(state.prices[m], step, total, problem.capacity(m));
        }
        state.round = t;
        history.push_back(state.prices.clone());
        if history.len() > window + 1 {
            history.pop_front();
        }
        trace.final_drift = history
            .iter()
            .flat_map(|old| old.iter().zip(&state.prices).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if history.len() == window + 1 && trace.final_drift < opts.stop_tol {
            trace.converged = true;
            break;
        }
    }
    trace.rounds = state.round;
    if trace.converged {
        debug!("prices converged after {} rounds", trace.rounds);
    } else {
        warn!(
            "no convergence after {} rounds (price drift {:.3e})",
            trace.rounds, trace.final_drift
        );
    }

    // Final demands respond to the final prices; trim any overshoot.
    let bids = bids_at(&state.prices, &hints);
    let mut partition = Matrix::zeros(kc, mc);
    for bid in &bids {
        partition.row_mut(bid.provider).copy_from_slice(&bid.demands);
    }
    trace.overshoot = vec![0.0; mc];
    for m in 0..mc {
        let total = partition.column_sum(m);
        let capacity = problem.capacity(m);
        if total > capacity {
            let over = (total - capacity) / capacity;
            trace.overshoot[m] = over;
            if over > OVERSHOOT_WARNING {
                trace.feasibility_warning = true;
                warn!("cache {m}: final demand exceeds capacity by {:.2}%", over * 100.0);
            }
            let scale = capacity / total;
            for k in 0..kc {
                partition[(k, m)] *= scale;
            }
        }
    }
    let solution = problem.solution(partition, routing.clone(), labels)?;
    Ok(DecentralOutcome {
        solution,
        prices: state.prices,
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct ExplorationRun {
    pub routing: RoutingConfig,
    pub outcome: DecentralOutcome,
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub runs: Vec<ExplorationRun>,
    /// Index of the selected run.
    pub best: usize,
}

impl Exploration {
    pub fn winner(&self) -> &ExplorationRun {
        &self.runs[self.best]
    }

    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.outcome.trace.converged)
    }
}

/// Runs the mechanism under every single-cache routing and picks the one
/// with the largest aggregate utility, preferring converged runs.
pub fn run_parallel_exploration(problem: &Problem, opts: &DecentralOptions) -> Result<Exploration> {
    let routings = enumerate_routings(problem, DEFAULT_ENUMERATION_CAP)?;
    let inner = DecentralOptions {
        exec: Execution::Sequential,
        ..opts.clone()
    };
    let outcomes = opts.exec.map(&routings, |r| run_routing(problem, r, &inner));
    let mut runs = Vec::with_capacity(routings.len());
    for (routing, outcome) in routings.into_iter().zip(outcomes) {
        runs.push(ExplorationRun {
            routing,
            outcome: outcome?,
        });
    }
    let any_converged = runs.iter().any(|r| r.outcome.trace.converged);
    let mut best: Option<(usize, f64)> = None;
    for (i, run) in runs.iter().enumerate() {
        if any_converged && !run.outcome.trace.converged {
            continue;
        }
        let value = run.outcome.solution.objective;
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((i, value));
        }
    }
    Ok(Exploration {
        runs,
        best: best.expect("at least one routing").0,
    })
}

/// Short description of a routing matrix, one entry per provider.
pub fn routing_labels(routing: &Matrix) -> Vec<String> {
    (0..routing.rows()).map(|k| describe_row(routing.row(k))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CacheNode, ContentProvider, DemandModel};
    use crate::Scenario;

    #[test]
    fn price_update_arithmetic() {
        assert_eq!(price_update(0.3, 1e-6, 500.0, 500.0), 0.3);
        assert_eq!(price_update(0.0, 1e-6, 100.0, 500.0), 0.0);
        assert!((price_update(0.01, 1e-6, 1000.0, 500.0) - 0.0105).abs() < 1e-15);
    }

    #[test]
    fn sqrt_schedule_decays() {
        let state = PriceState::new(vec![0.0], 1, 1e-6);
        assert_eq!(state.step_at(StepSchedule::Constant, 9), 1e-6);
        assert!((state.step_at(StepSchedule::InverseSqrt, 4) - 5e-7).abs() < 1e-20);
    }

    #[test]
    fn best_response_boundaries() {
        let problem = Problem::hit_rate(Scenario::example_base()).unwrap();
        let row = [1.0, 0.0, 0.0];
        let free = cp_best_response(&problem, 0, &row, &[0.0, 0.0, 0.0]);
        assert_eq!(free.demands[0], 10_000.0);
        let expensive = cp_best_response(&problem, 0, &row, &[1.0, 0.0, 0.0]);
        assert_eq!(expensive.required_cache_size(), 0.0);
    }

    #[test]
    fn uncongested_cache_keeps_zero_price() {
        let s = Scenario {
            caches: vec![CacheNode::lru(500.0)],
            providers: vec![ContentProvider::new(DemandModel::new(300, 0.7, 4.0).unwrap())],
            adjacency: Matrix::from_rows(vec![vec![1.0]]),
            bandwidth: None,
            delays: None,
        };
        let problem = Problem::hit_rate(s).unwrap();
        let out = run_routing(&problem, &RoutingConfig::new(vec![0]), &DecentralOptions::default()).unwrap();
        assert!(out.trace.converged);
        assert_eq!(out.prices, vec![0.0]);
        assert_eq!(out.solution.partition[(0, 0)], 300.0);
    }

    #[test]
    fn nonlinear_multi_cache_response_equalizes_marginals() {
        let mut s = Scenario::example_base();
        s.providers[0].utility = UtilitySpec::Log;
        let problem = Problem::hit_rate(s).unwrap();
        let row = [0.5, 0.5, 0.0];
        let prices = [0.004, 0.002, 0.0];
        let bid = cp_best_response(&problem, 0, &row, &prices);
        let h: f64 = (0..2).map(|m| row[m] * bid.hit_rates[m]).sum();
        let nu = 1.0 / h;
        for m in 0..2 {
            let marginal = problem.curve(0, m).marginal_hit_rate(bid.demands[m]).unwrap();
            let lhs = nu * row[m] * marginal;
            assert!((lhs - prices[m]).abs() < 1e-6 * prices[m], "cache {m}: {lhs} vs {}", prices[m]);
        }
    }

    #[test]
    fn rejects_bad_initial_prices() {
        let problem = Problem::hit_rate(Scenario::example_base()).unwrap();
        let opts = DecentralOptions {
            initial_prices: Some(vec![0.0, -1.0, 0.0]),
            ..Default::default()
        };
        assert!(run_routing(&problem, &RoutingConfig::new(vec![0, 1]), &opts).is_err());
    }
}
