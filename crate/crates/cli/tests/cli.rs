use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rsc_saga_cli::{run_experiment, ExperimentConfig, RunOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rsc-saga"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).current_dir(dir).env("RSC_SAGA_CACHE", dir.join("cache")).output().unwrap()
}

const TINY: &str = r#"
name = "tiny"
algorithms = ["saga"]
passes = 5
seeds = [7]
step_grid = [0.001]
reference_budget = 2000
output_dir = "out"

[problem.synthetic]
family = "lasso"
n = 40
p = 20
support = 3

[penalty]
kind = "l1"
lambda = 0.1
"#;

#[test]
fn list_presets_prints_desk_and_full_scale() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["lasso-fig1a", "lasso-fig1a-desk", "scad-fig4a-desk", "ijcnn1-scad", "rcv1", "boston-group-lasso"] {
        assert!(text.lines().any(|l| l == name), "missing {name}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run_in(d, &["run", "--preset", "nope"]).status.code(), Some(1));
    assert_eq!(run_in(d, &["run", "--config", "missing.toml"]).status.code(), Some(3));
    fs::write(d.join("bad.toml"), TINY.replace("passes = 5", "passes = 0")).unwrap();
    let out = run_in(d, &["run", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("passes"));

    fs::write(d.join("diverge.toml"), TINY.replace("[0.001]", "[1000.0]")).unwrap();
    assert_eq!(run_in(d, &["run", "--config", "diverge.toml"]).status.code(), Some(2));

    fs::write(d.join("ro"), "").unwrap();
    fs::write(d.join("unwritable.toml"), TINY.replace("\"out\"", "\"ro/sub\"")).unwrap();
    assert_eq!(run_in(d, &["run", "--config", "unwritable.toml"]).status.code(), Some(3));
}

#[test]
fn one_algorithm_one_seed_one_step_writes_two_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("tiny.toml"), TINY).unwrap();
    let out = run_in(d, &["run", "--config", "tiny.toml", "--no-timing"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut files: Vec<String> =
        fs::read_dir(d.join("out")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(files, vec!["saga-seed7.csv", "summary.csv"]);

    let trace = fs::read_to_string(d.join("out/saga-seed7.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("pass,seconds,objective,gap"));
    let passes: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(passes, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert!(trace.lines().skip(1).all(|l| l.split(',').nth(1) == Some("0.0000000000000000e0")));

    let summary = fs::read_to_string(d.join("out/summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..4], &["saga", "step", "1.0000000000000000e-3", "7"]);
}

#[test]
fn gen_data_formats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("spec.toml"), "family = \"scad\"\nn = 6\np = 4\nsupport = 2\nseed = 3\n").unwrap();
    let out = run_in(d, &["gen-data", "--spec", "spec.toml", "--out", "data.csv", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(d.join("data.csv")).unwrap();
    assert!(csv.starts_with("row,col,value\n"));
    assert_eq!(csv.lines().filter(|l| l.contains(",y,")).count(), 6);

    let out = run_in(d, &["gen-data", "--spec", "spec.toml", "--out", "data.svm"]);
    assert!(out.status.success());
    let ds = rsc_saga::datagen::load_libsvm(&d.join("data.svm"), Some(4), rsc_saga::datagen::LabelMode::Real).unwrap();
    let spec = rsc_saga::datagen::SyntheticSpec {
        seed: 3,
        ..rsc_saga::datagen::SyntheticSpec::new(rsc_saga::datagen::Family::ScadRegression, 6, 4, 2)
    };
    let direct = rsc_saga::datagen::generate(&spec).unwrap().dataset;
    assert_eq!(ds.features(), direct.features());
    assert_eq!(ds.responses(), direct.responses());

    let out = run_in(d, &["gen-data", "--preset", "rcv1", "--out", "x.svm"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reference_subcommand_uses_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("tiny.toml"), TINY).unwrap();
    let first = run_in(d, &["reference", "--config", "tiny.toml"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let entries = fs::read_dir(d.join("cache")).unwrap().count();
    assert_eq!(entries, 1);
    let second = run_in(d, &["reference", "--config", "tiny.toml"]);
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("status converged"), "{text}");
}

#[test]
fn file_backed_problem_with_groups() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = rsc_saga::datagen::SyntheticSpec::new(rsc_saga::datagen::Family::Lasso, 30, 4, 2);
    let ds = rsc_saga::datagen::generate(&spec).unwrap().dataset;
    rsc_saga::datagen::write_libsvm(&ds, &d.join("small.svm")).unwrap();
    let text = format!(
        r#"
name = "poly"
algorithms = ["saga", "prox-gd", "prox-svrg", "prox-sag", "prox-sgd", "rda"]
passes = 3
seeds = [1, 2]
step_grid = [0.01, 0.001]
decay_grid = [0.1, 1.0]
reference_budget = 5000
output_dir = "{}"

[problem.libsvm]
path = "{}"
labels = "real"
normalize = true
poly_degree = 2

[penalty]
kind = "group-l2"
lambda = 0.1
"#,
        d.join("out").display(),
        d.join("small.svm").display()
    );
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let opts = RunOptions { no_timing: true, cache_dir: d.join("cache"), output_dir: None };
    let summary = run_experiment(&cfg, &opts).unwrap();
    assert_eq!(summary.rows.len(), 12);
    assert_eq!(summary.files.len(), 13);
    for row in &summary.rows {
        let grid = if row.algorithm.uses_constant_step() { &cfg.step_grid } else { &cfg.decay_grid };
        assert!(grid.contains(&row.value));
    }
}
