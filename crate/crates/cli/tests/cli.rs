use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cospectra"))
        .current_dir(dir)
        .args(args)
        .args(["--config", cfg.to_str().unwrap()])
        .output()
        .unwrap()
}

fn stderr_payload(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("error payload on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn two_three_demo_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["two-three", "--seed", "1", "--out", "out"], "[two-three]\ninstances = 2\n");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/two_three.json")).unwrap()).unwrap();
    assert_eq!(report["all_pass"], Value::Bool(true));
    assert!(dir.path().join("out/relation_0000.txt").exists());
    let manifest = fs::read_to_string(dir.path().join("out/manifest.txt")).unwrap();
    assert!(manifest.contains("two_three.json"));
    assert!(manifest.contains("runtime_ms"));
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["walk", "--seed", "1"], "[graph]\nfamily = free(2)\nbogus = 3\n");
    assert_eq!(o.status.code(), Some(2));
    let p = stderr_payload(&o);
    assert_eq!(p["error"], "config");
    assert_eq!(p["line"], 3);
}

#[test]
fn missing_parameter_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["percolate", "--seed", "1"], "[graph]\nfamily = free(2)\nradius = 3\n");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stochastic_command_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["percolate"], "[graph]\nfamily = free(2)\nradius = 3\n[percolation]\np = 0.5\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_payload(&o)["message"].as_str().unwrap().contains("seed"));
}

#[test]
fn vertex_cap_exits_with_resource_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["gen-graph", "--out", "out"],
        "[graph]\nfamily = free(2)\nradius = 40\n",
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_payload(&o)["error"], "resource-limit");
    assert!(dir.path().join("out/error.json").exists());
}

#[test]
fn non_convergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["cospectral"],
        "[graph]\nfamily = free(2)\nsubgroup = cyclic(a)\nradius = 6\n[cospectral]\ntarget = subgroup\npower = true\npower_iters = 2\n",
    );
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["scan-exponents", "--seed", "1", "--out", "out", "--dry-run"],
        "[graph]\nfamily = regular-tree(3)\n",
    );
    assert_eq!(o.status.code(), Some(0));
    let plan: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(plan["dry_run"], Value::Bool(true));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn saved_config_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[graph]\nfamily = free-abelian(2)\nradius = 6\n[percolation]\np = 0.4\n";
    let o = run(dir.path(), &["percolate", "--seed", "5", "--out", "first"], text);
    assert_eq!(o.status.code(), Some(0));
    let saved = fs::read_to_string(dir.path().join("first/config.txt")).unwrap();
    assert!(saved.contains("seed = 5"));

    // the saved config carries the seed and subcommand on its own
    let replay = saved.replace("out = first", "out = second");
    let o = run(dir.path(), &["percolate"], &replay);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["edges.csv", "histogram.csv", "percolate.json"] {
        assert_eq!(
            fs::read(dir.path().join("first").join(name)).unwrap(),
            fs::read(dir.path().join("second").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn subcommand_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["walk"], "[run]\nsubcommand = percolate\n");
    assert_eq!(o.status.code(), Some(2));
}
