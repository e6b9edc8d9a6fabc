use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn cachepart(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cachepart"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs a command that must succeed and returns its run directory.
fn run_ok(out: &Path, args: &[&str]) -> PathBuf {
    let o = cachepart(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    PathBuf::from(String::from_utf8(o.stdout).unwrap().trim())
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

#[test]
fn solve_writes_a_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fixture("example_base.json");
    let dir = run_ok(tmp.path(), &["solve", "--scenario", base.to_str().unwrap()]);
    assert!(dir.starts_with(tmp.path()));
    let m = manifest(&dir);
    assert_eq!(m["command"], "solve");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(dir.file_name().unwrap().to_str().unwrap().ends_with(&m["config_hash"].as_str().unwrap()[..12]));
    assert_eq!(m["summary"]["routing_label"], serde_json::json!(["cache 0", "cache 1"]));
    let solution = read(&dir, "solution.csv");
    assert!(solution.starts_with("cp,cache,partition,routing,hit_rate\n"));
    assert!(read(&dir, "baseline.csv").contains("0.5"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fixture("example_base.json");
    let args = ["solve", "--scenario", base.to_str().unwrap(), "--set", "caches[1].capacity=1900", "--sweep", "caches[0].capacity=400,500"];
    let a = run_ok(tmp.path(), &args);
    let b = run_ok(tmp.path(), &args);
    assert_ne!(a, b);
    // Replaying from the stored scenario needs no --set.
    let stored = a.join("scenario.json");
    let c = run_ok(tmp.path(), &["solve", "--scenario", stored.to_str().unwrap(), "--sweep", "caches[0].capacity=400,500"]);
    assert_eq!(manifest(&a)["config_hash"], manifest(&c)["config_hash"]);
    for file in ["utility.csv", "routing.csv", "partition.csv", "hit_rates.csv", "labels.csv", "scenario.json"] {
        assert_eq!(read(&a, file), read(&b, file), "{file}");
        assert_eq!(read(&a, file), read(&c, file), "{file}");
    }
}

#[test]
fn set_overrides_the_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fixture("example_base.json");
    let dir = run_ok(tmp.path(), &["solve", "--scenario", base.to_str().unwrap(), "--set", "caches[1].capacity=1900"]);
    let objective = manifest(&dir)["summary"]["objective"].as_f64().unwrap();
    assert!((objective - 8.112678935968454).abs() < 1e-9, "{objective}");
}

#[test]
fn sequential_and_parallel_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fixture("example_base.json");
    let args = ["sweep", "--scenario", base.to_str().unwrap(), "--sweep", "caches[1].capacity=300:900:300", "--label", "C2"];
    let par = run_ok(tmp.path(), &args);
    let mut seq_args = vec!["--sequential"];
    seq_args.extend(args);
    let seq = run_ok(tmp.path(), &seq_args);
    assert_eq!(manifest(&seq)["execution"], "sequential");
    for file in ["utility.csv", "routing.csv", "partition.csv", "hit_rates.csv"] {
        assert_eq!(read(&par, file), read(&seq, file), "{file}");
    }
    let utility = read(&par, "utility.csv");
    assert!(utility.starts_with("C2,utility_joint,utility_static\n300,"));
    assert_eq!(utility.lines().count(), 4);
}

#[test]
fn invalid_input_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fixture("example_base.json");
    let base = base.to_str().unwrap();
    let o = cachepart(tmp.path(), &["solve", "--scenario", base, "--set", "caches[0].capacity=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid_capacity"));
    let o = cachepart(tmp.path(), &["solve", "--scenario", base, "--set", "caches[7].capacity=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cachepart(tmp.path(), &["bandwidth", "--scenario", base]);
    assert_eq!(o.status.code(), Some(2));
    let broken = tmp.path().join("broken.json");
    std::fs::write(&broken, "{\"caches\": [").unwrap();
    let o = cachepart(tmp.path(), &["solve", "--scenario", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = cachepart(tmp.path(), &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    // Nothing was written for the failed runs.
    let runs = std::fs::read_dir(tmp.path()).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).count();
    assert_eq!(runs, 0);
}

#[test]
fn enumeration_cap_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fixture("example_base.json");
    let o = cachepart(tmp.path(), &["solve", "--scenario", base.to_str().unwrap(), "--cap", "3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--solver acs"));
    let dir = run_ok(tmp.path(), &["solve", "--scenario", base.to_str().unwrap(), "--cap", "3", "--solver", "acs"]);
    assert!(manifest(&dir)["summary"]["objective"].as_f64().unwrap() > 5.7);
}

#[test]
fn bandwidth_and_latency_variants() {
    let tmp = tempfile::tempdir().unwrap();
    let bw = fixture("example_bandwidth.json");
    let dir = run_ok(tmp.path(), &["bandwidth", "--scenario", bw.to_str().unwrap(), "--set", "caches[1].capacity=300"]);
    assert!(read(&dir, "labels.csv").contains("I={0},s=1,r=0.4000"));
    let lat = fixture("example_latency.json");
    let dir = run_ok(tmp.path(), &["latency", "--scenario", lat.to_str().unwrap()]);
    assert!(read(&dir, "solution.csv").starts_with("cp,cache,partition,routing,hit_rate,latency\n"));
    assert!(manifest(&dir)["summary"]["objective"].as_f64().unwrap() < 0.0);
}

#[test]
fn decentralized_writes_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let dec = fixture("example_decentralized.json");
    let dir = run_ok(
        tmp.path(),
        &["decentralized", "--scenario", dec.to_str().unwrap(), "--routing", "0,2", "--max-rounds", "400", "--trace-stride", "50"],
    );
    let exploration = read(&dir, "exploration.csv");
    assert!(exploration.contains("0,cache 0;cache 2,true,191,"), "{exploration}");
    let prices = read(&dir, "prices_0.csv");
    assert!(prices.starts_with("round,cache,price\n"));
    assert!(read(&dir, "trace_0.csv").starts_with("round,price_0,price_1,price_2,demand_0_0"));
    let o = cachepart(tmp.path(), &["decentralized", "--scenario", dec.to_str().unwrap(), "--schedule", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_and_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fixture("example_base.json");
    let dir = run_ok(tmp.path(), &["simulate", "--scenario", base.to_str().unwrap(), "--horizon", "200000", "--seed", "5"]);
    assert_eq!(manifest(&dir)["seed"], 5);
    let sim = read(&dir, "simulation.csv");
    assert!(sim.starts_with("cp,model_hit_rate,sim_hit_rate,rel_err\n"));
    for line in sim.lines().skip(1) {
        let rel: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(rel < 0.05, "{line}");
    }
    let dir = run_ok(
        tmp.path(),
        &["validate", "--policy", "LRU,RANDOM", "--alpha", "0.8", "--n", "2000", "--rate", "15", "--slices", "100,500", "--horizon", "200000"],
    );
    let table = read(&dir, "validation.csv");
    assert!(table.starts_with("policy,N,alpha,R,slice,horizon,seed,empirical_rate,model_rate,rel_err,half_width\n"));
    assert_eq!(table.lines().count(), 5);
    let o = cachepart(tmp.path(), &["validate", "--policy", "CLOCK"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn family_file_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let family = tmp.path().join("family.json");
    std::fs::write(&family, r#"{"families": [{"caches": 3, "providers": 4, "instances": 2, "seed": 1}]}"#).unwrap();
    let dir = run_ok(tmp.path(), &["solve", "--family", family.to_str().unwrap()]);
    let table = read(&dir, "families.csv");
    assert!(table.starts_with("caches,providers,instances,static_mean,joint_mean,improvement,mean_instance_improvement\n3,4,2,"));
    assert_eq!(read(&dir, "family_instances.csv").lines().count(), 3);
}
