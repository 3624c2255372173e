use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adaptive-newton"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn rows(csv: &str, scheme: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .filter(|c| c[0] == scheme)
        .collect()
}

#[test]
fn experiment1_run_writes_default_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--experiment", "1", "--mesh-n", "8"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("experiment 1: mesh_n=8"));
    assert!(stdout.contains("adaptive: terminated=converged"));

    let csv = fs::read_to_string(dir.path().join("experiment1_adaptive.csv")).unwrap();
    assert!(csv.starts_with("scheme,iteration,delta_used,trials,"));
    let adaptive = rows(&csv, "adaptive");
    assert!(adaptive.len() >= 2);
    assert_eq!(adaptive[0][1], "0");
    assert!(adaptive[0][2].is_empty() && adaptive[0][3].is_empty());
    for r in &adaptive[1..] {
        assert_eq!(r[2].parse::<f64>().unwrap(), 1.0);
        assert_eq!(r[3], "1");
        assert_eq!(r[8], "converged");
    }
}

#[test]
fn compare_writes_all_schemes_to_one_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["--experiment", "1", "--mesh-n", "6", "--scheme", "adaptive", "--scheme", "kacanov", "--output", "cmp.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    assert!(!rows(&csv, "adaptive").is_empty());
    assert!(!rows(&csv, "kacanov").is_empty());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--experiment", "2", "--mesh-n", "8", "--scheme", "adaptive", "--scheme", "classical"];
    let mut files = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let mut full = args.to_vec();
        full.extend(["--output", name]);
        assert!(run(&full, dir.path()).status.success());
        files.push(fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--fixed-delta", "0.5"],
        vec!["--mesh-n", "1"],
        vec!["--scheme", "adaptive", "--scheme", "adaptive"],
        vec!["--sigma", "1.5"],
    ] {
        let out = run(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}
