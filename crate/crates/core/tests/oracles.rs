mod common;

use cachepart::alloc::{evaluate_routing, solve_single_cache, Participant, RoutingConfig, SingleCacheProblem};
use cachepart::che::{self, CachePolicy, HitCurve};
use cachepart::latency::mean_latency_km;
use cachepart::model::{file_rates, DelayProfile};
use cachepart::{DemandModel, Matrix, Problem, Scenario, UtilitySpec};
use common::{golden_max, grid_max, rel};

const POLICIES: [CachePolicy; 3] = [CachePolicy::Lru, CachePolicy::Fifo, CachePolicy::Random];

fn participant(curve: &HitCurve) -> Participant<'_> {
    Participant {
        curve,
        weight: 1.0,
        utility: UtilitySpec::Linear,
        offset: 0.0,
        gain: 1.0,
    }
}

#[test]
fn file_rates_match_direct_sum() {
    for (n, alpha, r) in [(10_000, 0.6, 10.0), (20_000, 0.8, 15.0), (7, 0.0, 3.0), (500, 1.2, 1.0)] {
        let got = file_rates(&DemandModel::new(n, alpha, r).unwrap());
        let want = common::zipf_rates(n, alpha, r);
        for (g, w) in got.iter().zip(&want) {
            assert!(rel(*g, *w) < 1e-12, "N={n} alpha={alpha}: {g} vs {w}");
        }
        assert!(rel(got.iter().sum(), r) < 1e-12);
    }
}

#[test]
fn frozen_zipf_endpoints() {
    let rates = file_rates(&DemandModel::new(10_000, 0.6, 10.0).unwrap());
    assert!(rel(rates[0], 0.1024840896025803065) < 1e-13);
    assert!(rel(rates[9_999], 0.00040799650938434332362) < 1e-12);
}

#[test]
fn two_file_lru_time() {
    let t = che::solve_t(CachePolicy::Lru, &[2.0, 1.0], 1.0).unwrap();
    assert!(rel(t, 0.4812118250596034475) < 1e-10, "{t}");
}

#[test]
fn characteristic_time_matches_bisection() {
    let rates = common::zipf_rates(3000, 0.7, 12.0);
    for policy in POLICIES {
        for size in [1.0, 30.0, 300.0, 1500.0, 2990.0] {
            let got = che::solve_t(policy, &rates, size).unwrap();
            let want = common::time_by_bisection(policy, &rates, size);
            assert!(rel(got, want) < 1e-9, "{policy:?} C={size}: {got} vs {want}");
            let h = che::hit_rate(policy, &rates, size).unwrap();
            let hw = common::hit_rate(policy, &rates, size);
            assert!(rel(h, hw) < 1e-8, "{policy:?} C={size}: {h} vs {hw}");
        }
    }
}

#[test]
fn frozen_first_provider_at_500() {
    let rates = file_rates(&DemandModel::new(10_000, 0.6, 10.0).unwrap());
    let t = che::solve_t(CachePolicy::Lru, &rates, 500.0).unwrap();
    assert!(rel(t, 54.842896513805889781) < 1e-10, "{t}");
    let h = che::hit_rate(CachePolicy::Lru, &rates, 500.0).unwrap();
    assert!(rel(h, 1.5144426036666099273) < 1e-10, "{h}");
}

#[test]
fn marginal_matches_central_difference() {
    let rates = common::zipf_rates(2000, 0.8, 15.0);
    for policy in POLICIES {
        for size in [50.0, 200.0, 800.0, 1600.0] {
            let step = 1e-4 * 2000.0;
            let fd = (common::hit_rate(policy, &rates, size + step) - common::hit_rate(policy, &rates, size - step))
                / (2.0 * step);
            let got = che::marginal_hit_rate(policy, &rates, size).unwrap();
            assert!(rel(got, fd) < 1e-5, "{policy:?} C={size}: {got} vs {fd}");
        }
    }
}

#[test]
fn best_response_matches_grid_scan() {
    let curve = HitCurve::from_demand(CachePolicy::Lru, &DemandModel::new(10_000, 0.6, 10.0).unwrap());
    let rates = curve.rates().to_vec();
    let n = curve.catalog_size();
    for price in [0.005, 1e-3, 2e-4, 5e-5] {
        let surplus = |c: f64| common::hit_rate(CachePolicy::Lru, &rates, c) - price * c;
        let (coarse, _) = grid_max(surplus, 0.0, n, 100);
        let lo = (coarse - n / 100.0).max(0.0);
        let hi = (coarse + n / 100.0).min(n);
        let (want, _) = golden_max(surplus, lo, hi, 60);
        let got = participant(&curve).demand_at_price(price);
        assert!((got - want).abs() <= 1e-6 * n, "price {price}: {got} vs {want}");
    }
    let r = participant(&curve).best_response(0.005);
    assert!((r.size - 2.3059797730950025).abs() < 1e-8, "{}", r.size);
    assert!(rel(r.time, 0.23073173632825408) < 1e-8);
}

#[test]
fn single_cache_split_matches_golden_section() {
    let s = Scenario::example_base();
    let a = HitCurve::from_demand(CachePolicy::Lru, &s.providers[0].demand);
    let b = HitCurve::from_demand(CachePolicy::Lru, &s.providers[1].demand);
    let capacity = 5000.0;
    let total = |x: f64| {
        common::hit_rate(CachePolicy::Lru, a.rates(), x) + common::hit_rate(CachePolicy::Lru, b.rates(), capacity - x)
    };
    let (x, best) = golden_max(total, 0.0, capacity, 90);
    let alloc = solve_single_cache(&SingleCacheProblem {
        capacity,
        participants: vec![participant(&a), participant(&b)],
    });
    assert!((alloc.slices[0] - x).abs() < 1e-3, "{} vs {x}", alloc.slices[0]);
    assert!((alloc.slices[0] - 2581.137928816583).abs() < 1e-6);
    assert!((alloc.slices[1] - 2418.862071183417).abs() < 1e-6);
    assert!(rel(alloc.objective, best) < 1e-10);
    assert!(rel(alloc.objective, 11.696964652564684) < 1e-10);
    assert!(rel(alloc.price, 1.0904257786e-3) < 1e-8, "{}", alloc.price);
}

#[test]
fn routing_objective_at_1900_is_frozen() {
    let p = Problem::hit_rate(Scenario::example_base().with_capacity(1, 1900.0)).unwrap();
    let sol = evaluate_routing(&p, &RoutingConfig::new(vec![0, 1])).unwrap();
    assert!(rel(sol.per_cp_hit_rate[1], 6.598236332301843 ) < 1e-10);
    assert!(rel(sol.objective, 8.112678935968454) < 1e-10);
}

#[test]
fn latency_matches_per_file_expectation() {
    let mut s = Scenario::example_base();
    s.delays = Some(DelayProfile {
        hit: Matrix::from_rows(vec![vec![1.0, 2.0, 0.0], vec![0.0, 1.5, 0.5]]),
        miss: Matrix::from_rows(vec![vec![10.0, 8.0, 0.0], vec![0.0, 9.0, 12.0]]),
    });
    let p = Problem::latency(s.clone()).unwrap();
    for (k, m, size, frac) in [(0, 0, 500.0, 1.0), (0, 1, 700.0, 0.4), (1, 2, 300.0, 0.25), (1, 1, 0.0, 1.0)] {
        let d = s.delays.as_ref().unwrap();
        let rates = s.providers[k].demand.file_rates();
        let mut routing = vec![0.0; 3];
        routing[m] = 1.0;
        let mut sizes = vec![0.0; 3];
        // The fraction thins every file's stream by the same factor.
        let thinned: Vec<f64> = rates.iter().map(|r| r * frac).collect();
        sizes[m] = size;
        let want = common::latency_per_file(
            CachePolicy::Lru,
            &thinned,
            &sizes,
            &routing,
            d.hit.row(k),
            d.miss.row(k),
        );
        let got = mean_latency_km(&p, k, m, size, frac).unwrap();
        assert!(rel(got, want) < 1e-9, "k={k} m={m}: {got} vs {want}");
    }
}
