use std::path::{Path, PathBuf};

use cachepart::alloc::{
    enumerate_optimal_with, solve_acs, static_routing_baseline_with, AcsOptions, EnumerationOptions, RoutingConfig,
};
use cachepart::bandwidth::{solve_bandwidth_problem, BandwidthOptions};
use cachepart::che::CachePolicy;
use cachepart::decentral::{run_parallel_exploration, run_routing, DecentralOptions, DecentralOutcome, StepSchedule};
use cachepart::family::{compare_joint_static, FamilySpec};
use cachepart::par::Execution;
use cachepart::report::{self, SweepRecord, Table};
use cachepart::sim::{run_validation, simulate_solution, validation_grid};
use cachepart::sweep::{parse_assignment, run_sweep, set_param, SweepSpec};
use cachepart::{DemandModel, Problem, Scenario, Solution};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::run::{write_run, Artifacts};
use crate::{DecentralArgs, Failure, Mode, PointArgs, SimulateArgs, SolveArgs, Solver, SolverArgs, SweepArgs, ValidateArgs};

pub struct Context {
    pub out: PathBuf,
    pub exec: Execution,
}

type Outcome = Result<(), Failure>;

fn num(x: f64) -> String {
    format!("{x}")
}

fn load_scenario(path: &Path, sets: &[String]) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read scenario {}: {e}", path.display())))?;
    let mut scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("malformed scenario {}: {e}", path.display())))?;
    for assignment in sets {
        let (param, value) = parse_assignment(assignment)?;
        set_param(&mut scenario, &param, value)?;
    }
    scenario.ensure_valid()?;
    Ok(scenario)
}

fn problem_for(mode: Mode, scenario: Scenario) -> cachepart::Result<Problem> {
    match mode {
        Mode::Hit => Problem::hit_rate(scenario),
        Mode::Bandwidth => Problem::hit_rate(scenario)?.with_bandwidth_limits(),
        Mode::Latency => Problem::latency(scenario),
    }
}

/// Joint solution and equal-split baseline.
fn solve_pair(problem: &Problem, mode: Mode, solver: &SolverArgs, exec: Execution) -> cachepart::Result<(Solution, Solution)> {
    let baseline = static_routing_baseline_with(problem, exec)?;
    let joint = match (solver.solver, mode) {
        (Solver::Acs, _) => solve_acs(problem, &baseline, AcsOptions { exec, ..AcsOptions::default() })?.solution,
        (Solver::Enumerate, Mode::Bandwidth) => {
            solve_bandwidth_problem(problem, BandwidthOptions { cap: solver.cap, exec })?
        }
        (Solver::Enumerate, _) => enumerate_optimal_with(problem, EnumerationOptions { cap: solver.cap, exec })?,
    };
    Ok((joint, baseline))
}

fn renamed(mut table: Table, name: &str) -> Table {
    table.name = name.to_string();
    table
}

fn labels_table(x_label: Option<&str>, points: &[(f64, &Solution, &Solution)]) -> Table {
    let mut header = vec!["cp", "label", "baseline_label"];
    if let Some(x) = x_label {
        header.insert(0, x);
    }
    let mut table = Table::new("labels", &header);
    for (x, joint, baseline) in points {
        for k in 0..joint.routing_label.len() {
            let mut row = vec![k.to_string(), joint.routing_label[k].clone(), baseline.routing_label[k].clone()];
            if x_label.is_some() {
                row.insert(0, num(*x));
            }
            table.push(row);
        }
    }
    table
}

fn finish<O: Serialize>(ctx: &Context, command: &str, options: &O, artifacts: Artifacts) -> Outcome {
    let dir = write_run(&ctx.out, command, options, &artifacts, ctx.exec.is_parallel())?;
    println!("{}", dir.display());
    Ok(())
}

fn single_point(problem: &Problem, mode: Mode, solver: &SolverArgs, exec: Execution) -> Result<Artifacts, Failure> {
    let (joint, baseline) = solve_pair(problem, mode, solver, exec)?;
    let tables = vec![
        report::solution_table(problem, &joint)?,
        renamed(report::solution_table(problem, &baseline)?, "baseline"),
        labels_table(None, &[(0.0, &joint, &baseline)]),
    ];
    eprintln!(
        "objective {} (equal split {}), routing {:?}",
        joint.objective, baseline.objective, joint.routing_label
    );
    let summary = json!({
        "objective": joint.objective,
        "baseline_objective": baseline.objective,
        "per_cp_hit_rate": joint.per_cp_hit_rate,
        "per_cp_latency": joint.per_cp_latency,
        "routing_label": joint.routing_label,
    });
    Ok(Artifacts::new(tables, summary))
}

fn sweep_artifacts(
    base: &Scenario,
    spec_text: &str,
    label: Option<&str>,
    mode: Mode,
    solver: &SolverArgs,
    exec: Execution,
) -> Result<Artifacts, Failure> {
    let spec: SweepSpec = spec_text.parse()?;
    let label = label.unwrap_or(&spec.path).to_string();
    let points = run_sweep(base, &spec, exec, |s| solve_pair(&problem_for(mode, s)?, mode, solver, Execution::Sequential))?;
    let records: Vec<SweepRecord<'_>> = points
        .iter()
        .map(|p| SweepRecord {
            value: p.value,
            joint: &p.output.0,
            baseline: Some(&p.output.1),
        })
        .collect();
    let mut tables = report::sweep_tables(&label, &records);
    let triples: Vec<(f64, &Solution, &Solution)> = points.iter().map(|p| (p.value, &p.output.0, &p.output.1)).collect();
    tables.push(labels_table(Some(&label), &triples));
    if mode == Mode::Latency {
        let mut lat = Table::new("latencies", &[&label, "cp", "latency"]);
        for p in &points {
            for (k, t) in p.output.0.per_cp_latency.iter().flatten().enumerate() {
                lat.push(vec![num(p.value), k.to_string(), num(*t)]);
            }
        }
        tables.push(lat);
    }
    eprintln!("{} sweep points over {}", points.len(), spec.path);
    let summary = json!({
        "path": spec.path,
        "points": points.len(),
        "objective": points.iter().map(|p| p.output.0.objective).collect::<Vec<_>>(),
    });
    Ok(Artifacts::new(tables, summary))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilySet {
    families: Vec<FamilySpec>,
}

fn family_artifacts(text: &str, solver: &SolverArgs, exec: Execution) -> Result<Artifacts, Failure> {
    let set: FamilySet = serde_json::from_str(text).map_err(|e| Failure::invalid(format!("malformed family file: {e}")))?;
    let cap = if solver.solver == Solver::Acs { 0 } else { solver.cap };
    let mut instances = Table::new(
        "family_instances",
        &["caches", "providers", "instance", "static", "joint", "improvement", "exact"],
    );
    let mut table = Table::new(
        "families",
        &["caches", "providers", "instances", "static_mean", "joint_mean", "improvement", "mean_instance_improvement"],
    );
    let mut summary = Vec::new();
    for family in &set.families {
        let (mut stat, mut joint, mut rel) = (0.0, 0.0, 0.0);
        for (i, scenario) in family.scenarios()?.into_iter().enumerate() {
            let cmp = compare_joint_static(&Problem::hit_rate(scenario)?, cap, exec)?;
            stat += cmp.baseline.objective;
            joint += cmp.joint.objective;
            rel += cmp.improvement();
            instances.push(vec![
                family.caches.to_string(),
                family.providers.to_string(),
                i.to_string(),
                num(cmp.baseline.objective),
                num(cmp.joint.objective),
                num(cmp.improvement()),
                cmp.exact.to_string(),
            ]);
        }
        let n = family.instances as f64;
        let improvement = joint / stat - 1.0;
        eprintln!(
            "{} caches / {} CPs: static {:.2}, joint {:.2}, improvement {:.1}%",
            family.caches,
            family.providers,
            stat / n,
            joint / n,
            100.0 * improvement
        );
        table.push(vec![
            family.caches.to_string(),
            family.providers.to_string(),
            family.instances.to_string(),
            num(stat / n),
            num(joint / n),
            num(improvement),
            num(rel / n),
        ]);
        summary.push(json!({"caches": family.caches, "providers": family.providers, "improvement": improvement}));
    }
    Ok(Artifacts::new(vec![table, instances], json!({ "families": summary })))
}

pub fn solve(ctx: &Context, args: &SolveArgs) -> Outcome {
    if let Some(path) = &args.family {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::invalid(format!("cannot read family file {}: {e}", path.display())))?;
        let artifacts = family_artifacts(&text, &args.solver, ctx.exec)?.with_input("family.json", text);
        return finish(ctx, "solve", args, artifacts);
    }
    let path = args.scenario.as_ref().expect("clap requires --scenario without --family");
    let scenario = load_scenario(path, &args.set)?;
    let text = scenario.to_json()?;
    let artifacts = match &args.sweep {
        Some(spec) => sweep_artifacts(&scenario, spec, args.label.as_deref(), Mode::Hit, &args.solver, ctx.exec)?,
        None => single_point(&Problem::hit_rate(scenario)?, Mode::Hit, &args.solver, ctx.exec)?,
    };
    finish(ctx, "solve", args, artifacts.with_input("scenario.json", text))
}

pub fn point(ctx: &Context, command: &str, mode: Mode, args: &PointArgs) -> Outcome {
    let scenario = load_scenario(&args.scenario.scenario, &args.scenario.set)?;
    let text = scenario.to_json()?;
    let artifacts = match &args.sweep {
        Some(spec) => sweep_artifacts(&scenario, spec, args.label.as_deref(), mode, &args.solver, ctx.exec)?,
        None => single_point(&problem_for(mode, scenario)?, mode, &args.solver, ctx.exec)?,
    };
    finish(ctx, command, args, artifacts.with_input("scenario.json", text))
}

pub fn sweep(ctx: &Context, args: &SweepArgs) -> Outcome {
    let scenario = load_scenario(&args.scenario.scenario, &args.scenario.set)?;
    let text = scenario.to_json()?;
    let artifacts = sweep_artifacts(&scenario, &args.sweep, args.label.as_deref(), args.mode, &args.solver, ctx.exec)?;
    finish(ctx, "sweep", args, artifacts.with_input("scenario.json", text))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| Failure::invalid(format!("bad {what}: {s:?}"))))
        .collect()
}

fn run_tables(index: usize, outcome: &DecentralOutcome) -> [Table; 2] {
    [
        renamed(report::trace_table(&outcome.trace), &format!("trace_{index}")),
        renamed(report::price_table(&outcome.trace), &format!("prices_{index}")),
    ]
}

pub fn decentralized(ctx: &Context, args: &DecentralArgs) -> Outcome {
    let scenario = load_scenario(&args.scenario.scenario, &args.scenario.set)?;
    let text = scenario.to_json()?;
    let problem = Problem::hit_rate(scenario)?;
    let schedule: StepSchedule = args.schedule.parse()?;
    let initial_prices = args.initial_prices.as_deref().map(|p| parse_list::<f64>(p, "price")).transpose()?;
    if !(args.gamma > 0.0) || args.window == 0 || args.trace_stride == 0 {
        return Err(Failure::invalid("gamma, window and trace stride must be positive"));
    }
    let opts = DecentralOptions {
        gamma: args.gamma,
        schedule,
        max_rounds: args.max_rounds,
        stop_tol: args.stop_tol,
        window: args.window,
        initial_prices,
        trace_stride: args.trace_stride,
        exec: ctx.exec,
    };
    let (runs, best) = match &args.routing {
        Some(r) => {
            let routing = RoutingConfig::new(parse_list(r, "routing")?);
            let outcome = run_routing(&problem, &routing, &opts)?;
            (vec![(routing, outcome)], 0)
        }
        None => {
            let ex = run_parallel_exploration(&problem, &opts)?;
            let best = ex.best;
            (ex.runs.into_iter().map(|r| (r.routing, r.outcome)).collect(), best)
        }
    };
    let mut exploration = Table::new(
        "exploration",
        &["run", "routing", "converged", "rounds", "final_drift", "objective", "feasibility_warning", "selected"],
    );
    let mut tables = Vec::new();
    for (i, (routing, outcome)) in runs.iter().enumerate() {
        let t = &outcome.trace;
        if !t.converged {
            log::warn!("routing {:?} did not converge in {} rounds (drift {:e})", routing.assignment, t.rounds, t.final_drift);
        }
        eprintln!(
            "routing {:?}: {} after {} rounds, objective {}",
            routing.assignment,
            if t.converged { "converged" } else { "not converged" },
            t.rounds,
            outcome.solution.objective
        );
        exploration.push(vec![
            i.to_string(),
            routing.labels().join(";"),
            t.converged.to_string(),
            t.rounds.to_string(),
            num(t.final_drift),
            num(outcome.solution.objective),
            t.feasibility_warning.to_string(),
            (i == best).to_string(),
        ]);
        tables.extend(run_tables(i, outcome));
    }
    let (routing, winner) = &runs[best];
    tables.insert(0, exploration);
    tables.push(report::solution_table(&problem, &winner.solution)?);
    let summary = json!({
        "winner": routing.assignment,
        "objective": winner.solution.objective,
        "prices": winner.prices,
        "all_converged": runs.iter().all(|(_, o)| o.trace.converged),
    });
    finish(ctx, "decentralized", args, Artifacts::new(tables, summary).with_input("scenario.json", text))
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Outcome {
    let scenario = load_scenario(&args.scenario.scenario, &args.scenario.set)?;
    let text = scenario.to_json()?;
    let mode = if args.latency { Mode::Latency } else { Mode::Hit };
    let problem = problem_for(mode, scenario)?;
    let (joint, baseline) = solve_pair(&problem, mode, &args.solver, ctx.exec)?;
    let solution = if args.baseline { baseline } else { joint };
    let sim = simulate_solution(&problem, &solution, args.horizon, args.seed, ctx.exec)?;
    let mut header = vec!["cp", "model_hit_rate", "sim_hit_rate", "rel_err"];
    if args.latency {
        header.extend(["model_latency", "sim_latency"]);
    }
    let mut per_cp = Table::new("simulation", &header);
    for k in 0..problem.num_providers() {
        let (model, empirical) = (solution.per_cp_hit_rate[k], sim.per_cp_hit_rate[k]);
        let mut row = vec![k.to_string(), num(model), num(empirical), num((empirical - model).abs() / model.max(1e-300))];
        if let (Some(m), Some(s)) = (&solution.per_cp_latency, &sim.per_cp_latency) {
            row.extend([num(m[k]), num(s[k])]);
        }
        per_cp.push(row);
    }
    let mut slices = Table::new("slices", &["cp", "cache", "slice", "fraction", "arrival_share", "hit_rate"]);
    for s in &sim.slices {
        slices.push(vec![
            s.provider.to_string(),
            s.cache.to_string(),
            s.slice.to_string(),
            num(s.fraction),
            num(s.arrival_share),
            num(s.hit_rate),
        ]);
    }
    eprintln!("model objective {}, simulated objective {}", solution.objective, sim.objective);
    let summary = json!({
        "model_objective": solution.objective,
        "sim_objective": sim.objective,
        "per_cp_hit_rate": sim.per_cp_hit_rate,
    });
    let mut artifacts = Artifacts::new(vec![report::solution_table(&problem, &solution)?, per_cp, slices], summary);
    artifacts.seed = Some(args.seed);
    finish(ctx, "simulate", args, artifacts.with_input("scenario.json", text))
}

pub fn validate(ctx: &Context, args: &ValidateArgs) -> Outcome {
    let policies: Vec<CachePolicy> = args.policy.iter().map(|p| p.parse()).collect::<Result<_, _>>()?;
    let mut demands = Vec::new();
    for &n in &args.n {
        for &alpha in &args.alpha {
            for &rate in &args.rate {
                demands.push(DemandModel::new(n, alpha, rate)?);
            }
        }
    }
    let cells = validation_grid(&policies, &demands, &args.slices, args.horizon, args.seed);
    let rows = run_validation(&cells, ctx.exec)?;
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    for r in &rows {
        eprintln!(
            "{} N={} alpha={} R={} slice={}: sim {:.5} model {:.5} rel err {:.4}",
            r.policy, r.catalog_size, r.alpha, r.rate, r.slice, r.empirical_rate, r.model_rate, r.rel_err
        );
    }
    let mut artifacts = Artifacts::new(vec![report::validation_table(&rows)], json!({ "cells": rows.len(), "max_rel_err": worst }));
    artifacts.seed = Some(args.seed);
    finish(ctx, "validate", args, artifacts)?;
    match args.max_rel_err {
        Some(limit) if worst > limit => Err(Failure {
            code: 1,
            message: format!("largest relative error {worst:.4} exceeds {limit}"),
        }),
        _ => Ok(()),
    }
}
