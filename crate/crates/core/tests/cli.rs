use std::path::Path;
use std::process::{Command, Output};

use robustq::bench::output::{read_rows, SweepRow, TraceRow};
use robustq::bench::build_mixing_mdp;
use robustq::io::save_model;

fn robustq(args: &[&str], workers: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_robustq"));
    cmd.args(args);
    if let Some(w) = workers {
        cmd.env("ROBUSTQ_WORKERS", w.to_string());
    }
    cmd.output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    robustq(args, None).status.code().unwrap()
}

fn csv_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    read_rows(std::fs::File::open(path).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&[]), 0);
    assert_eq!(code(&["frobnicate"]), 64);
    assert_eq!(code(&["run", "sarsa"]), 64);
    assert_eq!(code(&["solve", "--gamma", "abc"]), 64);
    assert_eq!(code(&["solve", "--builtin", "mixing", "--gamma", "1.5"]), 2);
    assert_eq!(code(&["run", "drql", "--builtin", "hard"]), 2);
    assert_eq!(code(&["solve", "--model", "/nonexistent/model.json"]), 1);
    assert_eq!(
        code(&["solve", "--builtin", "mixing", "--gamma", "0.999999", "--delta", "0", "--tol", "1e-12"]),
        3
    );
}

#[test]
fn solve_prints_fixed_point() {
    let out = robustq(&["solve", "--builtin", "mixing", "--gamma", "0.6", "--t", "2", "--delta", "0.1"], None);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("1.42030805982"), "{text}");
    assert!(text.contains("residual"));
}

#[test]
fn run_writes_checkpoint_rows() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "run", "drql", "--builtin", "hard", "--gamma", "0.6", "--delta", "0.1", "--k0", "1000",
        "--n0", "50", "--seed", "7",
    ];
    let every = dir.path().join("every.csv");
    let mut args = base.to_vec();
    args.extend(["--stride", "1", "--out", every.to_str().unwrap()]);
    assert!(robustq(&args, None).status.success());
    let rows: Vec<TraceRow> = csv_rows(&every);
    assert_eq!(rows.len(), 1000);
    assert_eq!(rows.last().unwrap().samples, 8 * 50 * 1000);
    assert!(rows.iter().all(|r| r.error.is_some()));

    let auto = dir.path().join("auto.csv");
    let mut args = base.to_vec();
    args.extend(["--out", auto.to_str().unwrap()]);
    assert!(robustq(&args, None).status.success());
    let sparse: Vec<TraceRow> = csv_rows(&auto);
    assert_eq!(sparse.len(), 200);
    assert_eq!(sparse.last(), rows.last());
}

#[test]
fn sweep_reports_one_row_per_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = robustq(
        &[
            "bench", "mixing", "--gammas", "0.5,0.6,0.7", "--eps", "0.02", "--algo", "nrvrql",
            "--trajectories", "20", "--out", path.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<SweepRow> = csv_rows(&path);
    assert_eq!(rows.iter().map(|r| r.gamma).collect::<Vec<_>>(), vec![0.5, 0.6, 0.7]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("slope"));
}

#[test]
fn model_files_with_radius_override() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("mixing.json");
    save_model(&build_mixing_mdp(0.6, 2.0, 0.3).unwrap(), &model).unwrap();
    let m = model.to_str().unwrap();
    let a = robustq(&["solve", "--model", m, "--delta", "0.1"], None);
    let b = robustq(&["solve", "--builtin", "mixing", "--delta", "0.1"], None);
    let c = robustq(&["solve", "--model", m], None);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(code(&["solve", "--model", m, "--builtin", "hard"]), 64);
}

#[test]
fn csv_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &["bench", "hard", "--trajectories", "6", "--budgets", "800,8000,80000", "--seed", "2"],
        &["diagnose", "contraction", "--trials", "300", "--seed", "2"],
        &["diagnose", "recentered", "--n", "64", "--trials", "300", "--seed", "2"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for workers in [1, 2, 4, 1] {
            let path = dir.path().join(format!("{i}-{workers}.csv"));
            let mut full = args.to_vec();
            full.extend(["--out", path.to_str().unwrap()]);
            assert!(robustq(&full, Some(workers)).status.success(), "{args:?}");
            outputs.push(std::fs::read(&path).unwrap());
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{args:?}");
        assert!(!outputs[0].is_empty());
    }
}
