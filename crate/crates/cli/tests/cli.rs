use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn elagp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elagp")).args(args).output().expect("running elagp")
}

fn ok(args: &[&str]) {
    let out = elagp(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(2).map(str::to_string).collect()
}

#[test]
fn design_export_and_benchmark_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("design.csv");
    let bbob = dir.path().join("bbob.csv");
    ok(&["doe-export", "--dim", "3", "--design-seed", "4", "--out", p(&design)]);
    assert_eq!(data_lines(&design).len(), 450);
    ok(&["bbob-eval", "--dim", "3", "--fid", "8", "--iid", "2", "--points", p(&design), "--out", p(&bbob)]);
    let rows = data_lines(&bbob);
    assert_eq!(rows.len(), 450);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn features_of_expressions() {
    let dir = tempfile::tempdir().unwrap();
    let exprs = dir.path().join("exprs.txt");
    fs::write(&exprs, "add(square(x), x)\nsum(sin(x))\n").unwrap();
    let out = dir.path().join("ela.csv");
    ok(&["ela", "--expr", p(&exprs), "--out", p(&out)]);
    assert_eq!(data_lines(&out).len(), 10);
}

#[test]
fn constant_expression_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let exprs = dir.path().join("exprs.txt");
    fs::write(&exprs, "mul(3.0, 2.0)\n").unwrap();
    let out = elagp(&["ela", "--expr", p(&exprs), "--out", p(&dir.path().join("ela.csv"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("constant"));
}

#[test]
fn config_file_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "seed = 3\ndim = 2\n\n[gp]\npopulation_size = 8\nmax_generations = 2\n").unwrap();
    let out = dir.path().join("run");
    ok(&["gp-run", "--config", p(&config), "--seed", "11", "--fid", "4", "--out", p(&out)]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 11);
    assert_eq!(m["gp"]["population_size"], 8);
    assert_eq!(m["gp"]["max_generations"], 2);
    let generations = data_lines(&out.join("generations.csv"));
    assert_eq!(generations.len(), 3);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "seeds = 3\n").unwrap();
    let out = elagp(&["doe-export", "--config", p(&config), "--out", p(&dir.path().join("d.csv"))]);
    assert!(!out.status.success());
}

#[test]
fn grid_export_needs_two_dimensions_and_replay_matches() {
    let dir = tempfile::tempdir().unwrap();
    let run3 = dir.path().join("run3");
    ok(&["gp-run", "--dim", "3", "--fid", "1", "--population", "6", "--generations", "1", "--out", p(&run3)]);
    let out = elagp(&["export-grid", "--dim", "3", "--run", p(&run3), "--out", p(&dir.path().join("grid3"))]);
    assert!(!out.status.success());
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("need d = 2, got 3"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let run2 = dir.path().join("run2");
    let grid = dir.path().join("grid");
    ok(&["gp-run", "--fid", "1", "--population", "6", "--generations", "1", "--out", p(&run2)]);
    ok(&["export-grid", "--run", p(&run2), "--resolution", "11", "--picks", "3", "--out", p(&grid)]);
    let replayed = dir.path().join("grid-again");
    ok(&["replay", p(&grid.join("manifest.json")), "--threads", "2", "--out", p(&replayed)]);
    assert_eq!(fs::read(grid.join("grid.csv")).unwrap(), fs::read(replayed.join("grid.csv")).unwrap());
}

#[test]
fn random_function_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rfg");
    ok(&["rfg-sample", "--count", "25", "--seed", "2", "--out", p(&out)]);
    let lines = fs::read_to_string(out.join("functions.txt")).unwrap();
    assert_eq!(lines.lines().count(), 25);
    assert!(out.join("functions.json").exists());
}
