//! Parameter paths and sweeps over scenarios.
//!
//! A path names one numeric scenario field:
//!
//! ```text
//! caches[m].capacity
//! providers[k].aggregate_rate | zipf_alpha | catalog_size | weight | utility.beta
//! bandwidth[k][m]
//! delays.hit[k][m] | delays.miss[k][m]
//! ```
//!
//! A sweep is `path=start:stop:step` (inclusive) or `path=v1,v2,...`.

use std::str::FromStr;

use crate::par::Execution;
use crate::{Error, Result, Scenario, UtilitySpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub path: String,
    pub values: Vec<f64>,
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidArgument(format!("not a number: {s:?}")))
}

/// Inclusive arithmetic range; values are `start + i·step` so long ranges do
/// not accumulate drift.
pub fn range_values(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::InvalidArgument(format!(
            "bad range {start}:{stop}:{step} (need start <= stop and step > 0)"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (path, values) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected path=values, got {s:?}")))?;
        let values = if values.contains(':') {
            let parts: Vec<&str> = values.split(':').collect();
            let [start, stop, step] = parts[..] else {
                return Err(Error::InvalidArgument(format!("expected start:stop:step, got {values:?}")));
            };
            range_values(parse_number(start)?, parse_number(stop)?, parse_number(step)?)?
        } else {
            values.split(',').map(parse_number).collect::<Result<_>>()?
        };
        if values.is_empty() {
            return Err(Error::InvalidArgument("sweep has no values".into()));
        }
        Ok(Self {
            path: path.trim().to_string(),
            values,
        })
    }
}

/// `path=value` assignment as used by `--set`.
pub fn parse_assignment(s: &str) -> Result<(String, f64)> {
    let (path, value) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("expected path=value, got {s:?}")))?;
    Ok((path.trim().to_string(), parse_number(value)?))
}

/// Splits `name[i][j]` into `("name", [i, j])`.
fn indexed(segment: &str) -> Result<(&str, Vec<usize>)> {
    let name_end = segment.find('[').unwrap_or(segment.len());
    let mut rest = &segment[name_end..];
    let mut idx = Vec::new();
    while let Some(inner) = rest.strip_prefix('[') {
        let close = inner
            .find(']')
            .ok_or_else(|| Error::UnknownParameter(segment.to_string()))?;
        idx.push(
            inner[..close]
                .parse()
                .map_err(|_| Error::UnknownParameter(segment.to_string()))?,
        );
        rest = &inner[close + 1..];
    }
    if !rest.is_empty() {
        return Err(Error::UnknownParameter(segment.to_string()));
    }
    Ok((&segment[..name_end], idx))
}

fn slot<'a, T>(items: &'a mut [T], i: usize, path: &str) -> Result<&'a mut T> {
    items
        .get_mut(i)
        .ok_or_else(|| Error::UnknownParameter(format!("{path}: index {i} out of range")))
}

fn integer(value: f64, path: &str) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 {
        Ok(value as usize)
    } else {
        Err(Error::InvalidArgument(format!("{path} needs a nonnegative integer, got {value}")))
    }
}

/// Writes `value` at `path`. The scenario is not revalidated.
pub fn set_param(scenario: &mut Scenario, path: &str, value: f64) -> Result<()> {
    let unknown = || Error::UnknownParameter(path.to_string());
    let segments: Vec<&str> = path.split('.').collect();
    let (head, idx) = indexed(segments[0])?;
    let tail = &segments[1..];
    match (head, idx.as_slice(), tail) {
        ("caches", [m], ["capacity"]) => slot(&mut scenario.caches, *m, path)?.capacity = value,
        ("providers", [k], [field]) => {
            let p = slot(&mut scenario.providers, *k, path)?;
            match *field {
                "aggregate_rate" => p.demand.aggregate_rate = value,
                "zipf_alpha" => p.demand.zipf_alpha = value,
                "catalog_size" => p.demand.catalog_size = integer(value, path)?,
                "weight" => p.weight = value,
                _ => return Err(unknown()),
            }
        }
        ("providers", [k], ["utility", "beta"]) => {
            let p = slot(&mut scenario.providers, *k, path)?;
            p.utility = UtilitySpec::BetaFair { beta: value };
        }
        ("bandwidth", [k, m], []) => {
            let v = scenario.bandwidth.as_mut().ok_or(Error::MissingBandwidth)?;
            if *k >= v.rows() || *m >= v.cols() {
                return Err(unknown());
            }
            v[(*k, *m)] = value;
        }
        ("delays", [], [which]) => {
            let (name, idx) = indexed(which)?;
            let d = scenario.delays.as_mut().ok_or(Error::MissingDelays)?;
            let target = match name {
                "hit" => &mut d.hit,
                "miss" => &mut d.miss,
                _ => return Err(unknown()),
            };
            let [k, m] = idx[..] else { return Err(unknown()) };
            if k >= target.rows() || m >= target.cols() {
                return Err(unknown());
            }
            target[(k, m)] = value;
        }
        _ => return Err(unknown()),
    }
    Ok(())
}

/// Copy of `base` with `path` set to `value`, validated.
pub fn with_param(base: &Scenario, path: &str, value: f64) -> Result<Scenario> {
    let mut s = base.clone();
    set_param(&mut s, path, value)?;
    s.ensure_valid()?;
    Ok(s)
}

#[derive(Debug, Clone)]
pub struct SweepPoint<T> {
    pub index: usize,
    pub value: f64,
    pub output: T,
}

/// Evaluates `f` at every sweep value. Output order follows the sweep.
pub fn run_sweep<T, F>(base: &Scenario, spec: &SweepSpec, exec: Execution, f: F) -> Result<Vec<SweepPoint<T>>>
where
    T: Send,
    F: Fn(Scenario) -> Result<T> + Sync + Send,
{
    // Resolve the path once up front so typos fail before any work.
    with_param(base, &spec.path, spec.values[0])?;
    let indexed: Vec<(usize, f64)> = spec.values.iter().copied().enumerate().collect();
    exec.map(&indexed, |&(index, value)| {
        let output = f(with_param(base, &spec.path, value)?)?;
        Ok(SweepPoint { index, value, output })
    })
    .into_iter()
    .collect()
}
