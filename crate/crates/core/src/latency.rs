//! Delay-oriented variant.
//!
//! A provider's mean latency is affine in its hit rates, so the latency
//! objective fits the same per-cache decomposition and routing enumeration
//! as the hit-rate objective (see [`crate::objective`]). This module adds
//! the latency formulas themselves and a convenience solver.

pub use crate::model::DelayProfile;

use crate::alloc::{enumerate_optimal_with, EnumerationOptions};
use crate::{Error, Problem, Result, Scenario, Solution};

fn delays(problem: &Problem) -> Result<&DelayProfile> {
    problem.scenario().delays.as_ref().ok_or(Error::MissingDelays)
}

/// Mean latency of the requests provider `k` sends to cache `m`:
/// `(d·h + d0·(Λp - h)) / (Λp)` with `h = p·h_k(C)`.
pub fn mean_latency_km(problem: &Problem, k: usize, m: usize, size: f64, fraction: f64) -> Result<f64> {
    let d = delays(problem)?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "latency through a cache needs a routed fraction in (0, 1], got {fraction}"
        )));
    }
    let curve = problem.curve(k, m);
    let volume = problem.provider_rate(k) * fraction;
    let hits = curve.scaled_hit_rate(size, fraction)?;
    let t = (d.hit[(k, m)] * hits + d.miss[(k, m)] * (volume - hits)) / volume;
    // Rounding can push t a hair outside [d, d0] when h is at either end.
    Ok(t.clamp(d.hit[(k, m)], d.miss[(k, m)]))
}

/// Mean latency of provider `k` over all its caches:
/// `Σ_m [d_km h_km + d0_km (Λ p_km - h_km)] / Λ`.
pub fn mean_latency(problem: &Problem, k: usize, partition_row: &[f64], routing_row: &[f64]) -> Result<f64> {
    let d = delays(problem)?;
    let rate = problem.provider_rate(k);
    let mut total = 0.0;
    for (m, (&size, &p)) in partition_row.iter().zip(routing_row).enumerate() {
        if p <= 0.0 {
            continue;
        }
        let curve = problem.curve(k, m);
        let hits = curve.scaled_hit_rate(size.clamp(0.0, curve.catalog_size()), p)?;
        total += d.hit[(k, m)] * hits + d.miss[(k, m)] * (rate * p - hits);
    }
    Ok(total / rate)
}

/// Latency-optimal partition and routing by routing enumeration.
pub fn solve_latency(scenario: Scenario) -> Result<Solution> {
    solve_latency_with(scenario, EnumerationOptions::default())
}

pub fn solve_latency_with(scenario: Scenario, opts: EnumerationOptions) -> Result<Solution> {
    let problem = Problem::latency(scenario)?;
    enumerate_optimal_with(&problem, opts)
}
