//! Characteristic-time (Che) approximation for partitioned cache slices.
//!
//! A slice of size `C` serving files with Poisson rates `λ_i` is summarised
//! by a single characteristic time `T`, the root of `Σ_i o(λ_i, T) = C`,
//! where the per-file hit probability is
//!
//! * LRU: `o(λ, T) = 1 - exp(-λT)`
//! * FIFO and RANDOM: `o(λ, T) = 1 - 1/(1 + λT)`
//!
//! and the slice hit rate is `h(C) = Σ_i λ_i o(λ_i, T(C))`. `h` is increasing
//! and concave in `C`, and because `λ` and `T` only appear as a product,
//! thinning a stream by a factor `p` leaves every hit probability unchanged
//! (`h` scales by `p`).
//!
//! Other policies that admit a characteristic-time model plug in by adding a
//! [`CachePolicy`] variant and its hit-probability form to
//! [`HitCurve::point`] and [`hit_prob`].
//!
//! `T = +∞` (slice at least as large as the set of requested files) is
//! represented by `f64::INFINITY`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::model::DemandModel;
use crate::numeric::{find_root, RootTol};
use crate::{Error, Result};

/// Absolute tolerance on the capacity equation, relative to the catalog
/// size. Solved values satisfy `|Σ o(λ_i, T) - C| <= SIZE_TOL * N`, which is
/// tighter than the documented contract of `1e-10 * N`.
const SIZE_TOL: f64 = 1e-12;

const MEMO_LIMIT: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum CachePolicy {
    #[default]
    #[serde(rename = "LRU", alias = "lru")]
    Lru,
    #[serde(rename = "FIFO", alias = "fifo")]
    Fifo,
    #[serde(rename = "RANDOM", alias = "random")]
    Random,
}

impl CachePolicy {
    pub const ALL: [CachePolicy; 3] = [CachePolicy::Lru, CachePolicy::Fifo, CachePolicy::Random];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CachePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CachePolicy::Lru => "LRU",
            CachePolicy::Fifo => "FIFO",
            CachePolicy::Random => "RANDOM",
        })
    }
}

impl FromStr for CachePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LRU" => Ok(CachePolicy::Lru),
            "FIFO" => Ok(CachePolicy::Fifo),
            "RANDOM" | "RAND" => Ok(CachePolicy::Random),
            other => Err(Error::InvalidArgument(format!("unknown cache policy `{other}`"))),
        }
    }
}

/// Probability that a request for a file of rate `rate` hits a slice whose
/// characteristic time is `time`.
pub fn hit_prob(policy: CachePolicy, rate: f64, time: f64) -> Result<f64> {
    if !(rate >= 0.0) || !(time >= 0.0) || rate.is_infinite() {
        return Err(Error::InvalidArgument(format!(
            "hit_prob needs rate >= 0 and time >= 0, got rate={rate}, time={time}"
        )));
    }
    if rate == 0.0 || time == 0.0 {
        return Ok(0.0);
    }
    if time.is_infinite() {
        return Ok(1.0);
    }
    Ok(prob(policy, rate * time))
}

#[inline]
fn prob(policy: CachePolicy, x: f64) -> f64 {
    match policy {
        CachePolicy::Lru => -(-x).exp_m1(),
        CachePolicy::Fifo | CachePolicy::Random => x / (1.0 + x),
    }
}

/// Characteristic time of a slice of `size` files.
pub fn solve_t(policy: CachePolicy, rates: &[f64], size: f64) -> Result<f64> {
    HitCurve::new(policy, rates.to_vec())?.time_for_size(size)
}

/// Hit rate of a slice of `size` files.
pub fn hit_rate(policy: CachePolicy, rates: &[f64], size: f64) -> Result<f64> {
    HitCurve::new(policy, rates.to_vec())?.hit_rate(size)
}

/// `dh/dC` of a slice of `size` files, for `0 < size < N`.
pub fn marginal_hit_rate(policy: CachePolicy, rates: &[f64], size: f64) -> Result<f64> {
    HitCurve::new(policy, rates.to_vec())?.marginal_hit_rate(size)
}

/// Hit rate when only a fraction `fraction` of the stream reaches the slice.
pub fn scaled_hit_rate(policy: CachePolicy, rates: &[f64], size: f64, fraction: f64) -> Result<f64> {
    HitCurve::new(policy, rates.to_vec())?.scaled_hit_rate(size, fraction)
}

/// State of a slice at a given characteristic time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub time: f64,
    /// Expected number of cached files, `Σ o(λ_i, T)`.
    pub size: f64,
    pub hit_rate: f64,
    /// `dh/dC` at this point.
    pub marginal: f64,
}

/// Hit-rate curve `C -> h(C)` of one request stream under one policy.
///
/// Evaluations of `T(C)` are memoized per curve, so repeated sweeps over the
/// same sizes do not re-solve the capacity equation. The memo is guarded by
/// a mutex; results do not depend on which thread filled it.
pub struct HitCurve {
    policy: CachePolicy,
    rates: Vec<f64>,
    total: f64,
    positive: usize,
    min_rate: f64,
    max_rate: f64,
    empty_marginal: f64,
    full_marginal: f64,
    memo: Mutex<HashMap<u64, f64>>,
}

impl HitCurve {
    pub fn new(policy: CachePolicy, rates: Vec<f64>) -> Result<Self> {
        if let Some(bad) = rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "request rates must be finite and >= 0, found {bad}"
            )));
        }
        let positive = rates.iter().filter(|&&r| r > 0.0).count();
        let min_rate = rates
            .iter()
            .copied()
            .filter(|&r| r > 0.0)
            .fold(f64::INFINITY, f64::min);
        let max_rate = rates.iter().copied().fold(0.0, f64::max);
        let total: f64 = rates.iter().rev().sum();
        let empty_marginal = if total == 0.0 {
            0.0
        } else {
            rates.iter().rev().map(|r| r * r).sum::<f64>() / total
        };
        let full_marginal = match policy {
            _ if positive == 0 => 0.0,
            CachePolicy::Lru => min_rate,
            CachePolicy::Fifo | CachePolicy::Random => {
                let inv: f64 = rates.iter().rev().filter(|&&r| r > 0.0).map(|r| 1.0 / r).sum();
                positive as f64 / inv
            }
        };
        Ok(Self {
            policy,
            rates,
            total,
            positive,
            min_rate,
            max_rate,
            empty_marginal,
            full_marginal,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn from_demand(policy: CachePolicy, demand: &DemandModel) -> Self {
        Self::new(policy, demand.file_rates()).expect("Zipf rates are finite and positive")
    }

    pub fn policy(&self) -> CachePolicy {
        self.policy
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Catalog size `N`.
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn catalog_size(&self) -> f64 {
        self.rates.len() as f64
    }

    pub fn total_rate(&self) -> f64 {
        self.total
    }

    pub fn max_rate(&self) -> f64 {
        self.max_rate
    }

    /// Smallest positive rate.
    pub fn min_rate(&self) -> f64 {
        self.min_rate
    }

    /// Slice size beyond which every requested file is cached.
    fn saturation_size(&self) -> f64 {
        self.positive as f64
    }

    /// Expected occupancy `Σ o(λ_i, T)`.
    pub fn size_at(&self, time: f64) -> f64 {
        if time <= 0.0 {
            return 0.0;
        }
        if time.is_infinite() {
            return self.saturation_size();
        }
        let policy = self.policy;
        self.rates
            .iter()
            .rev()
            .map(|&r| if r > 0.0 { prob(policy, r * time) } else { 0.0 })
            .sum()
    }

    /// Occupancy, hit rate and `dh/dC` at characteristic time `time`.
    pub fn point(&self, time: f64) -> CurvePoint {
        if time <= 0.0 {
            return CurvePoint {
                time: 0.0,
                size: 0.0,
                hit_rate: 0.0,
                marginal: self.marginal_at_empty(),
            };
        }
        if time.is_infinite() {
            return CurvePoint {
                time,
                size: self.saturation_size(),
                hit_rate: self.total,
                marginal: self.marginal_at_full(),
            };
        }
        let (mut size, mut hit, mut d_size, mut d_hit) = (0.0, 0.0, 0.0, 0.0);
        match self.policy {
            CachePolicy::Lru => {
                // Derivative terms are scaled by exp(min_rate * T) so the
                // ratio survives when every exp(-λT) underflows.
                let lift = (self.min_rate * time).exp();
                for &r in self.rates.iter().rev() {
                    if r <= 0.0 {
                        continue;
                    }
                    let x = r * time;
                    let e = (-x).exp();
                    let o = if x < 0.5 { -(-x).exp_m1() } else { 1.0 - e };
                    size += o;
                    hit += r * o;
                    let scaled = if e > 1e-300 && lift.is_finite() {
                        e * lift
                    } else {
                        (-(r - self.min_rate) * time).exp()
                    };
                    d_size += r * scaled;
                    d_hit += r * r * scaled;
                }
            }
            CachePolicy::Fifo | CachePolicy::Random => {
                // dC/dT = Σ λ/(1+λT)^2; beyond T = 1 both sums are scaled by T^2.
                let scale_up = time > 1.0;
                for &r in self.rates.iter().rev() {
                    if r <= 0.0 {
                        continue;
                    }
                    let x = r * time;
                    let o = x / (1.0 + x);
                    size += o;
                    hit += r * o;
                    if scale_up {
                        d_size += o * o / r;
                        d_hit += o * o;
                    } else {
                        let s = 1.0 / (1.0 + x);
                        d_size += r * s * s;
                        d_hit += r * r * s * s;
                    }
                }
            }
        }
        CurvePoint {
            time,
            size,
            hit_rate: hit,
            marginal: d_hit / d_size,
        }
    }

    /// One-sided limit of `dh/dC` as `C -> 0+`: `Σλ²/Σλ` for all three
    /// policies.
    pub fn marginal_at_empty(&self) -> f64 {
        self.empty_marginal
    }

    /// One-sided limit of `dh/dC` as the slice approaches the number of
    /// requested files: the smallest rate for LRU, the harmonic mean rate for
    /// FIFO/RANDOM.
    pub fn marginal_at_full(&self) -> f64 {
        self.full_marginal
    }

    fn check_size(&self, size: f64) -> Result<()> {
        if !(size >= 0.0) || size > self.catalog_size() {
            return Err(Error::InvalidArgument(format!(
                "slice size {size} outside [0, {}]",
                self.len()
            )));
        }
        Ok(())
    }

    /// Characteristic time `T(C)`: bracketed root of `Σ o(λ_i, T) = C`.
    /// Returns 0 for an empty slice and `+∞` once every requested file fits.
    pub fn time_for_size(&self, size: f64) -> Result<f64> {
        self.check_size(size)?;
        if size == 0.0 {
            return Ok(0.0);
        }
        if size >= self.saturation_size() {
            return Ok(f64::INFINITY);
        }
        let key = size.to_bits();
        if let Some(&t) = self.memo.lock().expect("memo poisoned").get(&key) {
            return Ok(t);
        }
        let t = self.solve_time(size);
        let mut memo = self.memo.lock().expect("memo poisoned");
        if memo.len() >= MEMO_LIMIT {
            memo.clear();
        }
        memo.insert(key, t);
        Ok(t)
    }

    fn solve_time(&self, size: f64) -> f64 {
        // o(λ, T) <= λT for every policy, so C/Σλ undershoots the root.
        let t_lo = size / self.total;
        let f_lo = self.size_at(t_lo) - size;
        let mut t_hi = 1.0 / self.min_rate;
        let mut f_hi = self.size_at(t_hi) - size;
        while f_hi < 0.0 {
            t_hi *= 2.0;
            f_hi = self.size_at(t_hi) - size;
            if t_hi > 1e300 {
                return f64::INFINITY;
            }
        }
        if t_hi <= t_lo {
            return t_hi;
        }
        let tol = RootTol {
            ftol: SIZE_TOL * self.catalog_size(),
            xtol: 1e-15,
            max_iter: 300,
        };
        let u = find_root(
            |u| self.size_at(u.exp()) - size,
            t_lo.ln(),
            t_hi.ln(),
            f_lo,
            f_hi,
            tol,
        );
        u.exp()
    }

    /// `h(C) = Σ λ_i o(λ_i, T(C))`.
    pub fn hit_rate(&self, size: f64) -> Result<f64> {
        let t = self.time_for_size(size)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        if t.is_infinite() {
            return Ok(self.total);
        }
        let policy = self.policy;
        Ok(self
            .rates
            .iter()
            .rev()
            .map(|&r| r * prob(policy, r * t))
            .sum())
    }

    /// Analytic `dh/dC = (dh/dT)/(dC/dT)` for `0 < size < N`.
    pub fn marginal_hit_rate(&self, size: f64) -> Result<f64> {
        self.check_size(size)?;
        if size <= 0.0 || size >= self.catalog_size() {
            return Err(Error::InvalidArgument(format!(
                "marginal hit rate is defined on the open interval (0, {}), got {size}",
                self.len()
            )));
        }
        if size >= self.saturation_size() {
            return Ok(0.0);
        }
        Ok(self.point(self.time_for_size(size)?).marginal)
    }

    /// `p · h(C)`; exactly zero when `p = 0`, whatever the slice size.
    pub fn scaled_hit_rate(&self, size: f64, fraction: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(format!(
                "routing fraction {fraction} outside [0, 1]"
            )));
        }
        if fraction == 0.0 {
            return Ok(0.0);
        }
        Ok(fraction * self.hit_rate(size)?)
    }
}

impl Clone for HitCurve {
    fn clone(&self) -> Self {
        Self {
            policy: self.policy,
            rates: self.rates.clone(),
            total: self.total,
            positive: self.positive,
            min_rate: self.min_rate,
            max_rate: self.max_rate,
            empty_marginal: self.empty_marginal,
            full_marginal: self.full_marginal,
            memo: Mutex::new(HashMap::new()),
        }
    }
}

impl fmt::Debug for HitCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HitCurve")
            .field("policy", &self.policy)
            .field("files", &self.rates.len())
            .field("total_rate", &self.total)
            .field("max_rate", &self.max_rate)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zipf(n: usize, alpha: f64, rate: f64) -> Vec<f64> {
        DemandModel::new(n, alpha, rate).unwrap().file_rates()
    }

    #[test]
    fn hit_prob_direct_values() {
        let lru = hit_prob(CachePolicy::Lru, 1.0, 1.0).unwrap();
        assert!((lru - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((lru - 0.632121).abs() < 1e-6);
        assert_eq!(hit_prob(CachePolicy::Fifo, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(hit_prob(CachePolicy::Random, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(
            hit_prob(CachePolicy::Lru, 0.4, 2.5).unwrap(),
            hit_prob(CachePolicy::Lru, 1.0, 1.0).unwrap()
        );
    }

    #[test]
    fn hit_prob_edges() {
        assert_eq!(hit_prob(CachePolicy::Lru, 3.0, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(hit_prob(CachePolicy::Fifo, 3.0, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(hit_prob(CachePolicy::Lru, 0.0, f64::INFINITY).unwrap(), 0.0);
        assert_eq!(hit_prob(CachePolicy::Lru, 2.0, 0.0).unwrap(), 0.0);
        assert!(hit_prob(CachePolicy::Lru, -1.0, 1.0).is_err());
        assert!(hit_prob(CachePolicy::Fifo, 1.0, -1.0).is_err());
    }

    #[test]
    fn uniform_rates_closed_form() {
        let rates = vec![0.5; 400];
        for c in [10.0, 100.0, 250.0, 399.0] {
            let t = solve_t(CachePolicy::Lru, &rates, c).unwrap();
            let expected = -(1.0 - c / 400.0).ln() / 0.5;
            assert!((t - expected).abs() < 1e-9 * expected, "C={c}");
            for policy in CachePolicy::ALL {
                let h = hit_rate(policy, &rates, c).unwrap();
                assert!((h - 200.0 * c / 400.0).abs() < 1e-9);
                let m = marginal_hit_rate(policy, &rates, c).unwrap();
                assert!((m - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundaries() {
        let rates = zipf(100, 0.8, 3.0);
        for policy in CachePolicy::ALL {
            assert_eq!(solve_t(policy, &rates, 0.0).unwrap(), 0.0);
            assert_eq!(solve_t(policy, &rates, 100.0).unwrap(), f64::INFINITY);
            assert_eq!(hit_rate(policy, &rates, 0.0).unwrap(), 0.0);
            assert!((hit_rate(policy, &rates, 100.0).unwrap() - 3.0).abs() < 1e-12);
            assert!(solve_t(policy, &rates, 100.5).is_err());
            assert!(solve_t(policy, &rates, -1.0).is_err());
            assert!(marginal_hit_rate(policy, &rates, 0.0).is_err());
            assert!(marginal_hit_rate(policy, &rates, 100.0).is_err());
        }
    }

    #[test]
    fn marginal_limits_at_empty_slice() {
        let rates = zipf(500, 0.7, 4.0);
        let sq: f64 = rates.iter().map(|r| r * r).sum();
        for policy in CachePolicy::ALL {
            let curve = HitCurve::new(policy, rates.clone()).unwrap();
            assert!((curve.marginal_at_empty() - sq / 4.0).abs() < 1e-12);
            let near = curve.marginal_hit_rate(1e-6).unwrap();
            assert!((near - curve.marginal_at_empty()).abs() < 1e-5 * near);
        }
    }

    #[test]
    fn scaled_hit_rate_is_linear_in_fraction() {
        let rates = zipf(1000, 0.6, 10.0);
        let full = hit_rate(CachePolicy::Lru, &rates, 120.0).unwrap();
        assert_eq!(scaled_hit_rate(CachePolicy::Lru, &rates, 120.0, 1.0).unwrap(), full);
        assert_eq!(scaled_hit_rate(CachePolicy::Lru, &rates, 120.0, 0.5).unwrap(), 0.5 * full);
        assert_eq!(scaled_hit_rate(CachePolicy::Lru, &rates, 999.0, 0.0).unwrap(), 0.0);
        assert!(scaled_hit_rate(CachePolicy::Lru, &rates, 1.0, 1.5).is_err());
    }

    #[test]
    fn zero_rate_files_saturate_early() {
        let rates = vec![2.0, 1.0, 0.0, 0.0];
        let curve = HitCurve::new(CachePolicy::Lru, rates).unwrap();
        assert_eq!(curve.time_for_size(2.0).unwrap(), f64::INFINITY);
        assert_eq!(curve.hit_rate(3.0).unwrap(), 3.0);
        assert!(curve.time_for_size(1.0).unwrap().is_finite());
    }

    #[test]
    fn memo_returns_identical_values() {
        let curve = HitCurve::new(CachePolicy::Fifo, zipf(2000, 0.8, 15.0)).unwrap();
        let a = curve.time_for_size(321.5).unwrap();
        let b = curve.time_for_size(321.5).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a.to_bits(), curve.clone().time_for_size(321.5).unwrap().to_bits());
    }
}
