//! Centralized solvers.
//!
//! Under a fixed routing the problem splits into one concave allocation per
//! cache ([`solve_single_cache`]). Optimal routings send each provider's
//! whole stream to a single connected cache, so the global optimum is found
//! by enumerating those routings ([`enumerate_optimal`]). For instances too
//! large to enumerate, [`solve_acs`] alternates exact allocation and routing
//! steps from a starting point and returns a partial optimum.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;

use crate::che::HitCurve;
use crate::model::{Solution, UtilitySpec};
use crate::numeric::{find_root, RootTol};
use crate::objective::{describe_row, Problem};
use crate::par::Execution;
use crate::{Error, Matrix, Result};

/// Default cap on the number of routings [`enumerate_optimal`] will visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

const PRICE_TOL: RootTol = RootTol {
    ftol: 0.0,
    xtol: 1e-12,
    max_iter: 300,
};

/// One provider's stake in a single cache.
///
/// Its contribution to the objective is `weight · G(offset + gain · h(C))`
/// where `h` is the provider's full-stream hit curve at this cache and `G` is
/// `utility`. A provider routing a fraction `p` of its stream here has
/// `gain = p` (times the latency gain, for the latency objective).
#[derive(Debug, Clone, Copy)]
pub struct Participant<'a> {
    pub curve: &'a HitCurve,
    pub weight: f64,
    pub utility: UtilitySpec,
    pub offset: f64,
    pub gain: f64,
}

impl Participant<'_> {
    pub fn value(&self, size: f64) -> f64 {
        let h = self.curve.hit_rate(size.clamp(0.0, self.curve.catalog_size()));
        self.weight * self.utility.value(self.offset + self.gain * h.expect("clamped size"))
    }

    fn marginal_at_time(&self, time: f64) -> f64 {
        let point = self.curve.point(time);
        self.weight
            * self.utility.derivative(self.offset + self.gain * point.hit_rate)
            * self.gain
            * point.marginal
    }

    fn upper(&self) -> f64 {
        self.curve.catalog_size()
    }

    /// Marginal value as the slice approaches zero (may be `+∞`).
    pub fn marginal_at_empty(&self) -> f64 {
        self.marginal_at_time(0.0)
    }

    /// Marginal value as the slice approaches the catalog size.
    pub fn marginal_at_full(&self) -> f64 {
        self.marginal_at_time(f64::INFINITY)
    }

    /// Unique maximizer of `weight·G(offset + gain·h(C)) - price·C` over
    /// `0 <= C <= N`.
    pub fn demand_at_price(&self, price: f64) -> f64 {
        self.best_response(price).size
    }

    /// Slice and full-stream hit rate at the maximizer of
    /// `weight·G(offset + gain·h(C)) - price·C`.
    ///
    /// The objective is concave in `C`, so the maximizer is where the
    /// marginal value crosses `price`. The crossing is located in
    /// characteristic-time space, where one pass over the rates gives size,
    /// hit rate and slope together.
    pub fn best_response(&self, price: f64) -> SliceResponse {
        self.best_response_near(price, None)
    }

    /// [`best_response`](Self::best_response) with the search started
    /// around the characteristic time `hint`, e.g. the previous answer when
    /// prices move slowly.
    pub fn best_response_near(&self, price: f64, hint: Option<f64>) -> SliceResponse {
        let empty = SliceResponse {
            size: 0.0,
            hit_rate: 0.0,
            time: 0.0,
        };
        let full = SliceResponse {
            size: self.upper(),
            hit_rate: self.curve.total_rate(),
            time: f64::INFINITY,
        };
        if self.gain <= 0.0 || self.curve.total_rate() <= 0.0 {
            return empty;
        }
        if price <= 0.0 {
            return full;
        }
        if price >= self.marginal_at_empty() {
            return empty;
        }
        if price <= self.marginal_at_full() {
            return full;
        }
        // Decreasing in t: the marginal value falls as the slice grows.
        let excess = |t: f64| self.marginal_at_time(t).ln() - price.ln();
        let (mut t_lo, mut t_hi, mut f_lo, mut f_hi, grow);
        match hint.filter(|t| t.is_finite() && *t > 0.0) {
            Some(t) => {
                let f = excess(t);
                if f >= 0.0 {
                    (t_lo, f_lo) = (t, f);
                    (t_hi, f_hi) = (t * 1.25, excess(t * 1.25));
                } else {
                    (t_hi, f_hi) = (t, f);
                    (t_lo, f_lo) = (t / 1.25, excess(t / 1.25));
                }
                grow = 4.0;
            }
            None => {
                t_lo = 1.0 / self.curve.max_rate();
                f_lo = excess(t_lo);
                t_hi = 1.0 / self.curve.min_rate();
                f_hi = excess(t_hi);
                grow = 16.0;
            }
        }
        while f_lo < 0.0 {
            (t_hi, f_hi) = (t_lo, f_lo);
            t_lo /= grow;
            if t_lo < 1e-300 {
                return empty;
            }
            f_lo = excess(t_lo);
        }
        while f_hi > 0.0 {
            (t_lo, f_lo) = (t_hi, f_hi);
            t_hi *= grow;
            if t_hi > 1e300 {
                return full;
            }
            f_hi = excess(t_hi);
        }
        let u = find_root(
            |u| excess(u.exp()),
            t_lo.ln(),
            t_hi.ln(),
            f_lo,
            f_hi,
            PRICE_TOL,
        );
        let point = self.curve.point(u.exp());
        SliceResponse {
            size: point.size.min(self.upper()),
            hit_rate: point.hit_rate,
            time: point.time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceResponse {
    pub size: f64,
    /// Full-stream hit rate `h(size)`.
    pub hit_rate: f64,
    /// Characteristic time of the slice.
    pub time: f64,
}

/// Participants sharing one cache of a given capacity.
#[derive(Debug, Clone)]
pub struct SingleCacheProblem<'a> {
    pub capacity: f64,
    pub participants: Vec<Participant<'a>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheAllocation {
    /// Slice per participant, in input order.
    pub slices: Vec<f64>,
    /// Shadow price of capacity (0 when capacity is slack).
    pub price: f64,
    /// `Σ weight·G(offset + gain·h(slice))`.
    pub objective: f64,
}

/// Maximizes the participants' total value subject to
/// `Σ C_j <= capacity`, `0 <= C_j <= N_j`.
///
/// KKT: all interior slices equalize their marginal value at the capacity
/// price `μ`. The price is found by a bracketed search on the total demand
/// `Σ_j C_j(μ)`, each `C_j(μ)` being the participant's own best response.
pub fn solve_single_cache(problem: &SingleCacheProblem<'_>) -> CacheAllocation {
    let parts = &problem.participants;
    let capacity = problem.capacity.max(0.0);
    let active: Vec<usize> = (0..parts.len())
        .filter(|&j| parts[j].gain > 0.0 && parts[j].curve.total_rate() > 0.0)
        .collect();
    let mut slices = vec![0.0; parts.len()];
    let price;

    let demand_all: f64 = active.iter().map(|&j| parts[j].upper()).sum();
    if active.is_empty() || capacity == 0.0 {
        price = active
            .iter()
            .map(|&j| parts[j].marginal_at_empty())
            .fold(0.0, f64::max);
    } else if demand_all <= capacity {
        for &j in &active {
            slices[j] = parts[j].upper();
        }
        price = 0.0;
    } else if let [j] = active[..] {
        // Utility is strictly increasing in the slice, so the cache is full.
        slices[j] = capacity;
        let t = parts[j].curve.time_for_size(capacity).expect("capacity < N");
        price = parts[j].marginal_at_time(t);
    } else {
        let total_at = |mu: f64| -> f64 { active.iter().map(|&j| parts[j].demand_at_price(mu)).sum() };
        let mu_lo = active
            .iter()
            .map(|&j| parts[j].marginal_at_full())
            .fold(f64::INFINITY, f64::min);
        let mut mu_hi = active
            .iter()
            .map(|&j| parts[j].marginal_at_empty())
            .fold(0.0, f64::max);
        if !mu_hi.is_finite() {
            mu_hi = mu_lo.max(1e-12) * 4.0;
            while total_at(mu_hi) > capacity {
                mu_hi *= 4.0;
            }
        }
        let f_lo = total_at(mu_lo) - capacity;
        let f_hi = total_at(mu_hi) - capacity;
        let tol = RootTol {
            ftol: 1e-11 * capacity,
            ..PRICE_TOL
        };
        let v = find_root(
            |v| total_at(v.exp()) - capacity,
            mu_lo.ln(),
            mu_hi.ln(),
            f_lo,
            f_hi,
            tol,
        );
        price = v.exp();
        for &j in &active {
            slices[j] = parts[j].demand_at_price(price);
        }
        // Absorb the root-finder residual so the capacity is used exactly.
        let used: f64 = slices.iter().sum();
        if used > 0.0 {
            let scale = capacity / used;
            for &j in &active {
                slices[j] = (slices[j] * scale).min(parts[j].upper());
            }
        }
    }
    let objective = parts
        .iter()
        .zip(&slices)
        .map(|(p, &c)| p.value(c))
        .sum();
    CacheAllocation {
        slices,
        price,
        objective,
    }
}

/// Optimal partition for an arbitrary (possibly fractional) routing.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub partition: Matrix,
    /// Capacity price per cache at the optimum.
    pub prices: Vec<f64>,
    pub objective: f64,
}

/// Solves the allocation block for a fixed routing matrix.
///
/// The objective is concave in the partition and the constraints are per
/// cache. When no provider with a nonlinear utility spreads over several
/// caches the caches decouple and are solved independently; otherwise
/// exact per-cache solves are repeated cyclically (block coordinate ascent)
/// until the objective stops improving.
pub fn allocate(problem: &Problem, routing: &Matrix, exec: Execution) -> Result<Allocation> {
    let (kc, mc) = (problem.num_providers(), problem.num_caches());
    if routing.rows() != kc || routing.cols() != mc {
        return Err(Error::InvalidArgument("routing matrix has the wrong shape".into()));
    }
    let offsets: Vec<f64> = (0..kc).map(|k| problem.offset(k, routing.row(k))).collect();
    let members: Vec<Vec<usize>> = (0..mc)
        .map(|m| {
            (0..kc)
                .filter(|&k| routing[(k, m)] > 0.0 && problem.gain(k, m) > 0.0)
                .collect()
        })
        .collect();
    let coupled = (0..kc).any(|k| {
        !problem.transform(k).is_linear()
            && (0..mc).filter(|&m| members[m].contains(&k)).count() > 1
    });

    let cache_problem = |m: usize, extra: &dyn Fn(usize) -> f64| SingleCacheProblem {
        capacity: problem.capacity(m),
        participants: members[m]
            .iter()
            .map(|&k| Participant {
                curve: problem.curve(k, m),
                weight: problem.weight(k),
                utility: problem.transform(k),
                offset: offsets[k] + extra(k),
                gain: problem.gain(k, m) * routing[(k, m)],
            })
            .collect(),
    };

    let first: Vec<CacheAllocation> =
        exec.map_range(mc, |m| solve_single_cache(&cache_problem(m, &|_| 0.0)));
    let mut partition = Matrix::zeros(kc, mc);
    let mut prices = vec![0.0; mc];
    for (m, alloc) in first.into_iter().enumerate() {
        for (j, &k) in members[m].iter().enumerate() {
            partition[(k, m)] = alloc.slices[j];
        }
        prices[m] = alloc.price;
    }
    let mut objective = problem.evaluate(&partition, routing)?.objective;

    if coupled {
        let contribution = |partition: &Matrix, k: usize, m: usize| -> f64 {
            let p = routing[(k, m)];
            if p <= 0.0 {
                return 0.0;
            }
            let h = problem
                .curve(k, m)
                .hit_rate(partition[(k, m)].clamp(0.0, problem.curve(k, m).catalog_size()))
                .expect("clamped");
            problem.gain(k, m) * p * h
        };
        for _sweep in 0..500 {
            for m in 0..mc {
                if members[m].is_empty() {
                    continue;
                }
                let snapshot = partition.clone();
                let others = |k: usize| -> f64 {
                    (0..mc)
                        .filter(|&o| o != m)
                        .map(|o| contribution(&snapshot, k, o))
                        .sum()
                };
                let alloc = solve_single_cache(&cache_problem(m, &others));
                for (j, &k) in members[m].iter().enumerate() {
                    partition[(k, m)] = alloc.slices[j];
                }
                prices[m] = alloc.price;
            }
            let next = problem.evaluate(&partition, routing)?.objective;
            let done = next - objective <= 1e-13 * objective.abs().max(1.0);
            objective = next;
            if done {
                break;
            }
        }
    }
    Ok(Allocation {
        partition,
        prices,
        objective,
    })
}

/// Deterministic routing: provider `k` sends its whole stream to cache
/// `assignment[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoutingConfig {
    pub assignment: Vec<usize>,
}

impl RoutingConfig {
    pub fn new(assignment: Vec<usize>) -> Self {
        Self { assignment }
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        let s = problem.scenario();
        if self.assignment.len() != s.num_providers() {
            return Err(Error::InfeasibleRouting(format!(
                "routing names {} providers, scenario has {}",
                self.assignment.len(),
                s.num_providers()
            )));
        }
        for (k, &m) in self.assignment.iter().enumerate() {
            if m >= s.num_caches() || !s.connected(k, m) {
                return Err(Error::InfeasibleRouting(format!(
                    "provider {k} is not connected to cache {m}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_matrix(&self, caches: usize) -> Matrix {
        Matrix::from_fn(self.assignment.len(), caches, |k, m| {
            if self.assignment[k] == m {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn labels(&self) -> Vec<String> {
        self.assignment.iter().map(|m| format!("cache {m}")).collect()
    }

    /// Providers routed to cache `m`, i.e. `CP(m)`.
    pub fn providers_of(&self, m: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&k| self.assignment[k] == m)
            .collect()
    }
}

impl std::fmt::Display for RoutingConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .assignment
            .iter()
            .enumerate()
            .map(|(k, m)| format!("CP {k} - Cache {m}"))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Number of single-cache routings, `Π_k B_k`.
pub fn routing_count(problem: &Problem) -> u128 {
    (0..problem.num_providers())
        .map(|k| problem.scenario().connected_caches(k).len() as u128)
        .product()
}

/// Every single-cache routing in lexicographic order of
/// `(s(0), ..., s(K-1))`.
pub fn enumerate_routings(problem: &Problem, cap: u128) -> Result<Vec<RoutingConfig>> {
    let count = routing_count(problem);
    if count > cap {
        return Err(Error::InstanceTooLarge { count, cap });
    }
    let options: Vec<Vec<usize>> = (0..problem.num_providers())
        .map(|k| problem.scenario().connected_caches(k))
        .collect();
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0usize; options.len()];
    loop {
        out.push(RoutingConfig::new(
            idx.iter().zip(&options).map(|(&i, o)| o[i]).collect(),
        ));
        // Odometer increment, last provider fastest.
        let mut k = options.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn deterministic_cache_problem<'a>(
    problem: &'a Problem,
    m: usize,
    providers: &[usize],
) -> SingleCacheProblem<'a> {
    let unit: Vec<f64> = (0..problem.num_caches())
        .map(|i| if i == m { 1.0 } else { 0.0 })
        .collect();
    SingleCacheProblem {
        capacity: problem.capacity(m),
        participants: providers
            .iter()
            .map(|&k| Participant {
                curve: problem.curve(k, m),
                weight: problem.weight(k),
                utility: problem.transform(k),
                offset: problem.offset(k, &unit),
                gain: problem.gain(k, m),
            })
            .collect(),
    }
}

/// Partition for a single-cache routing: one independent concave problem
/// per cache.
pub fn evaluate_routing(problem: &Problem, routing: &RoutingConfig) -> Result<Solution> {
    evaluate_routing_with(problem, routing, Execution::default())
}

pub fn evaluate_routing_with(
    problem: &Problem,
    routing: &RoutingConfig,
    exec: Execution,
) -> Result<Solution> {
    routing.validate(problem)?;
    let mc = problem.num_caches();
    let groups: Vec<Vec<usize>> = (0..mc).map(|m| routing.providers_of(m)).collect();
    let allocs = exec.map_range(mc, |m| {
        solve_single_cache(&deterministic_cache_problem(problem, m, &groups[m]))
    });
    let mut partition = Matrix::zeros(problem.num_providers(), mc);
    for (m, alloc) in allocs.iter().enumerate() {
        for (j, &k) in groups[m].iter().enumerate() {
            partition[(k, m)] = alloc.slices[j];
        }
    }
    problem.solution(partition, routing.to_matrix(mc), routing.labels())
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    pub cap: u128,
    pub exec: Execution,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ENUMERATION_CAP,
            exec: Execution::default(),
        }
    }
}

/// Objective of every single-cache routing, in enumeration order.
///
/// Each cache's subproblem only depends on which providers it serves, so
/// every distinct (cache, provider set) pair is solved once and routings are
/// scored by summing per-cache optima.
pub fn enumerate_objectives(
    problem: &Problem,
    opts: EnumerationOptions,
) -> Result<Vec<(RoutingConfig, f64)>> {
    let routings = enumerate_routings(problem, opts.cap)?;
    let mc = problem.num_caches();
    let mut distinct: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    for r in &routings {
        for m in 0..mc {
            distinct.insert((m, r.providers_of(m)));
        }
    }
    let keys: Vec<(usize, Vec<usize>)> = distinct.into_iter().collect();
    let values = opts.exec.map(&keys, |(m, providers)| {
        solve_single_cache(&deterministic_cache_problem(problem, *m, providers)).objective
    });
    let table: BTreeMap<(usize, Vec<usize>), f64> = keys.into_iter().zip(values).collect();
    let scores = opts.exec.map(&routings, |r| {
        (0..mc)
            .map(|m| table[&(m, r.providers_of(m))])
            .sum::<f64>()
    });
    Ok(routings.into_iter().zip(scores).collect())
}

/// Global optimum of the unconstrained problem: the best single-cache
/// routing. Ties go to the lexicographically smallest assignment.
pub fn enumerate_optimal(problem: &Problem) -> Result<Solution> {
    enumerate_optimal_with(problem, EnumerationOptions::default())
}

pub fn enumerate_optimal_with(problem: &Problem, opts: EnumerationOptions) -> Result<Solution> {
    let scored = enumerate_objectives(problem, opts)?;
    let best = best_by_objective(scored.iter().map(|(r, v)| (r, *v)))
        .expect("at least one routing")
        .clone();
    evaluate_routing_with(problem, &best, opts.exec)
}

/// First item with the strictly largest score.
fn best_by_objective<T>(items: impl IntoIterator<Item = (T, f64)>) -> Option<T> {
    let mut best: Option<(T, f64)> = None;
    for (item, score) in items {
        let better = match &best {
            None => true,
            Some((_, b)) => score > *b,
        };
        if better {
            best = Some((item, score));
        }
    }
    best.map(|(item, _)| item)
}

#[derive(Debug, Clone, Copy)]
pub struct AcsOptions {
    pub max_rounds: usize,
    /// Minimum objective gain per round to keep iterating.
    pub tol: f64,
    pub exec: Execution,
}

impl Default for AcsOptions {
    fn default() -> Self {
        Self {
            max_rounds: 100,
            tol: 1e-9,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AcsOutcome {
    pub solution: Solution,
    /// Objective after each allocation step, starting with the allocation
    /// for the start routing.
    pub history: Vec<f64>,
    pub rounds: usize,
    pub converged: bool,
}

/// Best routing for a fixed partition.
///
/// With the partition fixed, each provider's argument is affine in its own
/// routing row and `G` is increasing, so the row maximizes
/// `Σ_m p_km (base_km + q_km h_k(C_km))` over `{Σ_m p_km = 1,
/// 0 <= p_km <= cap_km}`. That is a fractional knapsack: fill caches in
/// decreasing coefficient order up to their caps. Without bandwidth limits
/// the result is a single cache. Ties go to the lower cache index.
pub fn best_routing_for_partition(problem: &Problem, partition: &Matrix) -> Result<Matrix> {
    let (kc, mc) = (problem.num_providers(), problem.num_caches());
    let mut routing = Matrix::zeros(kc, mc);
    for k in 0..kc {
        let mut scored = Vec::new();
        for m in 0..mc {
            let cap = problem.routing_cap(k, m);
            if cap <= 0.0 {
                continue;
            }
            let curve = problem.curve(k, m);
            let h = curve.hit_rate(partition[(k, m)].clamp(0.0, curve.catalog_size()))?;
            scored.push((m, cap, problem.route_base(k, m) + problem.gain(k, m) * h));
        }
        scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        let mut remaining = 1.0;
        for (m, cap, _) in scored {
            if remaining <= 0.0 {
                break;
            }
            let take = cap.min(remaining);
            routing[(k, m)] = take;
            remaining -= take;
        }
        if remaining > 1e-12 {
            return Err(Error::InfeasibleRouting(format!(
                "provider {k}: routing caps cannot absorb the whole stream"
            )));
        }
        // Put the rounding residue back on the largest entry.
        let row = routing.row_mut(k);
        let total: f64 = row.iter().sum();
        if let Some(big) = (0..mc).max_by(|&a, &b| row[a].total_cmp(&row[b])) {
            row[big] += 1.0 - total;
        }
    }
    Ok(routing)
}

/// Alternate convex search from `start`.
///
/// Each round solves the routing block exactly for the current partition,
/// then the allocation block exactly for the new routing. The first step
/// re-solves the allocation for the start routing, so only the start's
/// routing matters. Stops when a round gains less than `tol`; the result is
/// then a partial optimum (no improvement from either block alone).
pub fn solve_acs(problem: &Problem, start: &Solution, opts: AcsOptions) -> Result<AcsOutcome> {
    let mut routing = start.routing.clone();
    let mut current = allocate(problem, &routing, opts.exec)?;
    let mut history = vec![current.objective];
    let mut converged = false;
    let mut rounds = 0;
    while rounds < opts.max_rounds {
        rounds += 1;
        let next_routing = best_routing_for_partition(problem, &current.partition)?;
        let next = allocate(problem, &next_routing, opts.exec)?;
        if next.objective <= current.objective + opts.tol {
            if next.objective > current.objective {
                routing = next_routing;
                current = next;
                history.push(current.objective);
            }
            converged = true;
            break;
        }
        routing = next_routing;
        current = next;
        history.push(current.objective);
    }
    let labels = (0..problem.num_providers())
        .map(|k| describe_row(routing.row(k)))
        .collect();
    let solution = problem.solution(current.partition, routing, labels)?;
    Ok(AcsOutcome {
        solution,
        history,
        rounds,
        converged,
    })
}

/// Compositions of `units` into `parts` nonnegative integers.
fn compositions(units: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if units == 0 { vec![vec![]] } else { vec![] };
    }
    if parts == 1 {
        return vec![vec![units]];
    }
    let mut out = Vec::new();
    for first in (0..=units).rev() {
        for mut rest in compositions(units - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Grid search over probabilistic routings with exact inner allocation.
///
/// Each provider's row ranges over the simplex grid of step `grid_step`
/// on its connected caches (filtered by bandwidth caps when enforced). Only
/// meant as an oracle on tiny instances (at most 2 providers and 3 caches).
pub fn brute_force_probabilistic(
    problem: &Problem,
    grid_step: f64,
    exec: Execution,
) -> Result<Solution> {
    let (kc, mc) = (problem.num_providers(), problem.num_caches());
    if kc > 2 || mc > 3 {
        return Err(Error::InvalidArgument(format!(
            "probabilistic grid search is limited to 2 providers and 3 caches, got {kc}x{mc}"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidArgument(format!("grid step {grid_step} outside (0, 1]")));
    }
    let units = (1.0 / grid_step).round() as usize;
    if ((units as f64) * grid_step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "grid step {grid_step} does not divide 1"
        )));
    }
    let rows: Vec<Vec<Vec<f64>>> = (0..kc)
        .map(|k| {
            let connected = problem.scenario().connected_caches(k);
            compositions(units, connected.len())
                .into_iter()
                .map(|c| {
                    let mut row = vec![0.0; mc];
                    for (i, &m) in connected.iter().enumerate() {
                        row[m] = c[i] as f64 / units as f64;
                    }
                    row
                })
                .filter(|row| {
                    (0..mc).all(|m| row[m] <= problem.routing_cap(k, m) + 1e-12)
                })
                .collect()
        })
        .collect();
    if rows.iter().any(Vec::is_empty) {
        return Err(Error::InfeasibleRouting(
            "no grid routing satisfies the bandwidth limits".into(),
        ));
    }
    let mut grid = vec![Vec::<usize>::new()];
    for options in &rows {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                (0..options.len()).map(move |i| {
                    let mut next = prefix.clone();
                    next.push(i);
                    next
                })
            })
            .collect();
    }
    let build = |choice: &Vec<usize>| {
        Matrix::from_rows(choice.iter().enumerate().map(|(k, &i)| rows[k][i].clone()).collect())
    };
    let scores = exec.map(&grid, |choice| {
        allocate(problem, &build(choice), Execution::Sequential).map(|a| a.objective)
    });
    let mut best = None;
    for (choice, score) in grid.iter().zip(scores) {
        let score = score?;
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((choice, score));
        }
    }
    let (choice, _) = best.expect("non-empty grid");
    let routing = build(choice);
    let alloc = allocate(problem, &routing, exec)?;
    let labels = (0..kc).map(|k| describe_row(routing.row(k))).collect();
    problem.solution(alloc.partition, routing, labels)
}

/// Equal-split routing `p_km = a_km / B_k` with the optimal partition for
/// it.
///
/// When bandwidth limits are enforced and an equal split would exceed a
/// limit, the row is redistributed proportionally to the limits instead,
/// which is always feasible because limits cover the request rate.
pub fn static_routing_baseline(problem: &Problem) -> Result<Solution> {
    static_routing_baseline_with(problem, Execution::default())
}

pub fn static_routing_baseline_with(problem: &Problem, exec: Execution) -> Result<Solution> {
    let s = problem.scenario();
    let (kc, mc) = (problem.num_providers(), problem.num_caches());
    let mut routing = Matrix::zeros(kc, mc);
    for k in 0..kc {
        let connected = s.connected_caches(k);
        let share = 1.0 / connected.len() as f64;
        for &m in &connected {
            routing[(k, m)] = share;
        }
        if problem.enforces_bandwidth() {
            let over = connected
                .iter()
                .any(|&m| share > problem.routing_cap(k, m) + 1e-12);
            if over {
                warn!("provider {k}: equal split exceeds a bandwidth limit, splitting proportionally to limits");
                let caps: Vec<f64> = connected.iter().map(|&m| problem.routing_cap(k, m)).collect();
                let total: f64 = caps.iter().sum();
                for (&m, cap) in connected.iter().zip(caps) {
                    routing[(k, m)] = cap / total;
                }
            }
        }
    }
    let alloc = allocate(problem, &routing, exec)?;
    let labels = (0..kc).map(|k| describe_row(routing.row(k))).collect();
    problem.solution(alloc.partition, routing, labels)
}
