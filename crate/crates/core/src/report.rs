//! Tidy CSV tables for solutions, sweeps, traces and validation runs.
//!
//! | table | columns |
//! |---|---|
//! | solution | `cp, cache, partition, routing, hit_rate[, latency]` |
//! | utility | `<x>, utility_joint, utility_static` |
//! | routing | `<x>, cp, cache, p` |
//! | partition | `<x>, cp, cache, size` |
//! | hit_rates | `<x>, cp, hit_rate` |
//! | trace | `round, price_<m>..., demand_<k>_<m>..., hit_rate_<k>...` |
//! | prices | `round, cache, price` |
//! | validation | `policy, N, alpha, R, slice, horizon, seed, empirical_rate, model_rate, rel_err, half_width` |
//!
//! `<x>` is the swept parameter's label. Numbers use Rust's shortest
//! round-trip formatting, so rewriting a table is byte-identical.

use std::path::Path;

use crate::decentral::Trace;
use crate::latency::mean_latency_km;
use crate::sim::ValidationRow;
use crate::{ObjectiveKind, Problem, Result, Solution};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_to<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Writes `<dir>/<name>.csv`.
    pub fn write_in(&self, dir: &Path) -> Result<std::path::PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        self.write_to(std::fs::File::create(&path)?)?;
        Ok(path)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// One row per connected (provider, cache) pair.
pub fn solution_table(problem: &Problem, solution: &Solution) -> Result<Table> {
    let latency = problem.kind() == ObjectiveKind::Latency;
    let mut header = vec!["cp", "cache", "partition", "routing", "hit_rate"];
    if latency {
        header.push("latency");
    }
    let mut table = Table::new("solution", &header);
    let s = problem.scenario();
    for k in 0..s.num_providers() {
        for m in s.connected_caches(k) {
            let size = solution.partition[(k, m)];
            let p = solution.routing[(k, m)];
            let curve = problem.curve(k, m);
            let h = curve.scaled_hit_rate(size.clamp(0.0, curve.catalog_size()), p)?;
            let mut row = vec![k.to_string(), m.to_string(), num(size), num(p), num(h)];
            if latency {
                row.push(if p > 0.0 {
                    num(mean_latency_km(problem, k, m, size, p)?)
                } else {
                    String::new()
                });
            }
            table.push(row);
        }
    }
    Ok(table)
}

/// One swept point: the parameter value, the joint solution and optionally
/// the equal-split baseline.
#[derive(Debug, Clone, Copy)]
pub struct SweepRecord<'a> {
    pub value: f64,
    pub joint: &'a Solution,
    pub baseline: Option<&'a Solution>,
}

/// Utility, routing, partition and per-provider hit-rate tables.
pub fn sweep_tables(x_label: &str, records: &[SweepRecord<'_>]) -> Vec<Table> {
    let mut utility = Table::new("utility", &[x_label, "utility_joint", "utility_static"]);
    let mut routing = Table::new("routing", &[x_label, "cp", "cache", "p"]);
    let mut partition = Table::new("partition", &[x_label, "cp", "cache", "size"]);
    let mut hits = Table::new("hit_rates", &[x_label, "cp", "hit_rate"]);
    for r in records {
        let x = num(r.value);
        utility.push(vec![
            x.clone(),
            num(r.joint.objective),
            r.baseline.map(|b| num(b.objective)).unwrap_or_default(),
        ]);
        let sol = r.joint;
        for k in 0..sol.routing.rows() {
            for m in 0..sol.routing.cols() {
                routing.push(vec![x.clone(), k.to_string(), m.to_string(), num(sol.routing[(k, m)])]);
                partition.push(vec![x.clone(), k.to_string(), m.to_string(), num(sol.partition[(k, m)])]);
            }
            hits.push(vec![x.clone(), k.to_string(), num(sol.per_cp_hit_rate[k])]);
        }
    }
    vec![utility, routing, partition, hits]
}

/// Wide per-round trace.
pub fn trace_table(trace: &Trace) -> Table {
    let Some(first) = trace.rows.first() else {
        return Table::new("trace", &["round"]);
    };
    let (kc, mc) = (first.demands.rows(), first.demands.cols());
    let mut header = vec!["round".to_string()];
    header.extend((0..mc).map(|m| format!("price_{m}")));
    for k in 0..kc {
        header.extend((0..mc).map(|m| format!("demand_{k}_{m}")));
    }
    header.extend((0..kc).map(|k| format!("hit_rate_{k}")));
    let mut table = Table {
        name: "trace".into(),
        header,
        rows: Vec::with_capacity(trace.rows.len()),
    };
    for row in &trace.rows {
        let mut cells = vec![row.round.to_string()];
        cells.extend(row.prices.iter().map(|&p| num(p)));
        for k in 0..kc {
            cells.extend(row.demands.row(k).iter().map(|&d| num(d)));
        }
        cells.extend(row.hit_rates.iter().map(|&h| num(h)));
        table.push(cells);
    }
    table
}

/// Long-form prices per round.
pub fn price_table(trace: &Trace) -> Table {
    let mut table = Table::new("prices", &["round", "cache", "price"]);
    for row in &trace.rows {
        for (m, &p) in row.prices.iter().enumerate() {
            table.push(vec![row.round.to_string(), m.to_string(), num(p)]);
        }
    }
    table
}

pub fn validation_table(rows: &[ValidationRow]) -> Table {
    let mut table = Table::new(
        "validation",
        &[
            "policy",
            "N",
            "alpha",
            "R",
            "slice",
            "horizon",
            "seed",
            "empirical_rate",
            "model_rate",
            "rel_err",
            "half_width",
        ],
    );
    for r in rows {
        table.push(vec![
            r.policy.to_string(),
            r.catalog_size.to_string(),
            num(r.alpha),
            num(r.rate),
            r.slice.to_string(),
            r.horizon.to_string(),
            r.seed.to_string(),
            num(r.empirical_rate),
            num(r.model_rate),
            num(r.rel_err),
            num(r.half_width),
        ]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::{evaluate_routing, RoutingConfig};
    use crate::Scenario;

    #[test]
    fn solution_table_lists_connected_pairs() {
        let problem = Problem::hit_rate(Scenario::example_base()).unwrap();
        let sol = evaluate_routing(&problem, &RoutingConfig::new(vec![0, 2])).unwrap();
        let t = solution_table(&problem, &sol).unwrap();
        assert_eq!(t.rows.len(), 4);
        let csv = t.to_csv_string().unwrap();
        assert!(csv.starts_with("cp,cache,partition,routing,hit_rate\n0,0,500,1,"));
    }

    #[test]
    fn sweep_tables_use_the_label() {
        let problem = Problem::hit_rate(Scenario::example_base()).unwrap();
        let sol = evaluate_routing(&problem, &RoutingConfig::new(vec![0, 1])).unwrap();
        let tables = sweep_tables("C2", &[SweepRecord { value: 1200.0, joint: &sol, baseline: None }]);
        assert_eq!(tables[0].header, vec!["C2", "utility_joint", "utility_static"]);
        assert_eq!(tables[1].rows.len(), 6);
        assert_eq!(tables[0].rows[0][2], "");
    }
}
