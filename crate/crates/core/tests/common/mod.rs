//! Independent reference implementations used as test oracles. Nothing here
//! calls into the solver internals: rates, characteristic times and optima
//! are recomputed from scratch with the simplest methods that work.
#![allow(dead_code)]

use cachepart::che::CachePolicy;
use cachepart::{CacheNode, ContentProvider, DemandModel, Matrix, Scenario};

/// Zipf rates by forward Kahan summation of the normalizer.
pub fn zipf_rates(n: usize, alpha: f64, rate: f64) -> Vec<f64> {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for j in 1..=n {
        let y = (j as f64).powf(-alpha) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    (1..=n).map(|i| rate * (i as f64).powf(-alpha) / sum).collect()
}

pub fn occupancy(policy: CachePolicy, rate: f64, t: f64) -> f64 {
    match policy {
        CachePolicy::Lru => 1.0 - (-rate * t).exp(),
        CachePolicy::Fifo | CachePolicy::Random => rate * t / (1.0 + rate * t),
    }
}

/// Characteristic time by plain bisection on `Σ o(λ_i, T) = C`.
pub fn time_by_bisection(policy: CachePolicy, rates: &[f64], size: f64) -> f64 {
    let f = |t: f64| rates.iter().map(|&r| occupancy(policy, r, t)).sum::<f64>() - size;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn hit_rate(policy: CachePolicy, rates: &[f64], size: f64) -> f64 {
    if size <= 0.0 {
        return 0.0;
    }
    if size >= rates.len() as f64 {
        return rates.iter().sum();
    }
    let t = time_by_bisection(policy, rates, size);
    rates.iter().map(|&r| r * occupancy(policy, r, t)).sum()
}

/// Golden-section maximum of a unimodal function on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Best point of a uniform grid with `points` intervals on `[a, b]`.
pub fn grid_max(f: impl Fn(f64) -> f64, a: f64, b: f64, points: usize) -> (f64, f64) {
    (0..=points)
        .map(|i| a + (b - a) * i as f64 / points as f64)
        .map(|x| (x, f(x)))
        .fold((a, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Mean latency by per-file expectation: each request for file i routed to
/// cache m hits with probability o_i and then costs d, otherwise d0.
pub fn latency_per_file(
    policy: CachePolicy,
    rates: &[f64],
    sizes: &[f64],
    routing: &[f64],
    hit: &[f64],
    miss: &[f64],
) -> f64 {
    let total: f64 = rates.iter().sum();
    let mut t = 0.0;
    for m in 0..routing.len() {
        if routing[m] == 0.0 {
            continue;
        }
        let time = if sizes[m] >= rates.len() as f64 {
            f64::INFINITY
        } else {
            time_by_bisection(policy, rates, sizes[m])
        };
        for &r in rates {
            let o = if time.is_infinite() { 1.0 } else { occupancy(policy, r, time) };
            t += routing[m] * r / total * (o * hit[m] + (1.0 - o) * miss[m]);
        }
    }
    t
}

pub fn provider(n: usize, alpha: f64, rate: f64) -> ContentProvider {
    ContentProvider::new(DemandModel::new(n, alpha, rate).unwrap())
}

/// One cache shared by the given providers.
pub fn single_cache(capacity: f64, policy: CachePolicy, providers: Vec<ContentProvider>) -> Scenario {
    let k = providers.len();
    Scenario {
        caches: vec![CacheNode::new(capacity, policy)],
        providers,
        adjacency: Matrix::from_fn(k, 1, |_, _| 1.0),
        bandwidth: None,
        delays: None,
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
