use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn telegraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_telegraph"))
        .args(args)
        .env_remove("TELEGRAPH_SEED")
        .output()
        .expect("run telegraph")
}

fn ok(args: &[&str]) -> String {
    let out = telegraph(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// `(estimate, valid)` of `method` from estimate CSV output.
fn estimate_of(csv: &str, method: &str) -> (f64, bool) {
    let line = csv
        .lines()
        .find(|l| l.starts_with(&format!("{method},")))
        .unwrap_or_else(|| panic!("no {method} row in\n{csv}"));
    let cols: Vec<&str> = line.split(',').collect();
    (cols[1].parse().unwrap(), cols[2] == "true")
}

#[test]
fn simulate_writes_a_grid_inside_the_cone() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("path.csv");
    let stdout = ok(&[
        "simulate",
        "--lambda",
        "0.5",
        "--n",
        "500",
        "--seed",
        "3",
        "-o",
        p(&out),
    ]);
    assert!(stdout.contains("N(T) = "));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, x) = l.split_once(',').unwrap();
            (t.parse().unwrap(), x.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 501);
    assert_eq!(rows[0], (0.0, 0.0));
    assert_eq!(rows[500].0, 500.0);
    for w in rows.windows(2) {
        assert!((w[1].1 - w[0].1).abs() <= 1.0 + 1e-9);
    }
}

#[test]
fn simulate_geometric_prices_are_positive() {
    let text = ok(&[
        "simulate", "--lambda", "1", "--n", "100", "--T", "50", "--mu", "0.1", "--sigma", "0.4",
        "--s0", "2",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,s"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[2].parse::<f64>().unwrap(), 2.0);
    for l in lines {
        let s: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(s > 0.0);
    }
}

#[test]
fn same_seed_same_file() {
    let a = ok(&["simulate", "--lambda", "2", "--n", "300", "--seed", "99"]);
    let b = ok(&["simulate", "--lambda", "2", "--n", "300", "--seed", "99"]);
    let c = ok(&["simulate", "--lambda", "2", "--n", "300", "--seed", "100"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn seed_from_environment() {
    let run = |env: &str| {
        Command::new(env!("CARGO_BIN_EXE_telegraph"))
            .args(["simulate", "--lambda", "1", "--n", "20", "--T", "10"])
            .env("TELEGRAPH_SEED", env)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(
        run("5"),
        ok(&["simulate", "--lambda", "1", "--n", "20", "--T", "10", "--seed", "5"]).into_bytes()
    );
    assert_ne!(run("5"), run("6"));
}

#[test]
fn estimate_recovers_the_rate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    ok(&[
        "simulate",
        "--lambda",
        "0.5",
        "--n",
        "1000",
        "--seed",
        "1",
        "-o",
        p(&path),
    ]);
    let csv = ok(&["estimate", "-i", p(&path), "--v", "1", "--format", "csv"]);
    for method in ["score_root", "argmax", "least_squares"] {
        let (est, valid) = estimate_of(&csv, method);
        assert!(valid);
        assert!((0.37..=0.63).contains(&est), "{method}: {est}");
    }
    let (root, _) = estimate_of(&csv, "score_root");
    let (arg, _) = estimate_of(&csv, "argmax");
    assert!((root - arg).abs() < 1e-6);
}

#[test]
fn estimate_on_a_straight_line_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("line.csv");
    let body: String = (0..=10).map(|i| format!("{i},{i}\n")).collect();
    fs::write(&path, format!("t,x\n{body}")).unwrap();
    let csv = ok(&["estimate", "-i", p(&path), "--v", "1", "--format", "csv"]);
    assert_eq!(estimate_of(&csv, "score_root"), (0.0, false));
    assert_eq!(estimate_of(&csv, "argmax"), (0.0, false));
}

#[test]
fn estimate_reports_cone_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "t,x\n0,0\n1,0.5\n2,2\n").unwrap();
    let out = telegraph(&["estimate", "-i", p(&path), "--v", "1"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2"), "{err}");
}

#[test]
fn sigma_hat_invalid_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("geo.csv");
    ok(&[
        "simulate",
        "--lambda",
        "1",
        "--n",
        "200",
        "--mu",
        "0.2",
        "--sigma",
        "0.5",
        "--seed",
        "4",
        "-o",
        p(&path),
    ]);
    // a drift far below the observed mean return makes σ̂ undefined
    let csv = ok(&[
        "estimate",
        "-i",
        p(&path),
        "--v",
        "1",
        "--mu",
        "-5",
        "--sigma",
        "0.5",
        "--format",
        "csv",
    ]);
    assert_eq!(estimate_of(&csv, "sigma_hat"), (0.0, false));
    assert!(!estimate_of(&csv, "lambda_dot").1);

    let csv = ok(&[
        "estimate",
        "-i",
        p(&path),
        "--v",
        "1",
        "--mu",
        "0.2",
        "--sigma",
        "0.5",
        "--format",
        "csv",
    ]);
    let (sigma, valid) = estimate_of(&csv, "sigma_hat");
    assert!(valid && sigma > 0.0);
}

#[test]
fn json_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("p.csv");
    let json_path = dir.path().join("p.json");
    ok(&[
        "simulate",
        "--lambda",
        "1.5",
        "--n",
        "400",
        "--seed",
        "8",
        "-o",
        p(&csv_path),
    ]);
    ok(&[
        "simulate",
        "--lambda",
        "1.5",
        "--n",
        "400",
        "--seed",
        "8",
        "--format",
        "json",
        "-o",
        p(&json_path),
    ]);
    let a = ok(&[
        "estimate",
        "-i",
        p(&csv_path),
        "--v",
        "1",
        "--format",
        "csv",
    ]);
    let b = ok(&[
        "estimate",
        "-i",
        p(&json_path),
        "--v",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(a, b);
}

#[test]
fn mc_single_cell() {
    let csv = ok(&[
        "mc",
        "--lambda-grid",
        "0.1",
        "--n-grid",
        "50",
        "--N",
        "100",
        "--seed",
        "7",
        "--methods",
        "score_root",
    ]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "method,lambda,n,bias,rmse,min,max,pct_valid,N,mc_se"
    );
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("score_root,0.1,50,"));
}

#[test]
fn mc_merges_sigma_rows_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("reps.csv");
    let csv = ok(&[
        "mc",
        "--lambda-grid",
        "1",
        "--n-grid",
        "50,100",
        "--N",
        "40",
        "--seed",
        "2",
        "--methods",
        "sigma_hat,lambda_dot",
        "--mu",
        "0.2",
        "--sigma",
        "0.5",
        "--s0",
        "1",
        "--dump",
        p(&dump),
    ]);
    let sigma_rows: Vec<&str> = csv
        .lines()
        .filter(|l| l.starts_with("sigma_hat,"))
        .collect();
    assert_eq!(sigma_rows.len(), 1);
    assert!(sigma_rows[0].starts_with("sigma_hat,1,50;100,"));
    assert_eq!(
        csv.lines().filter(|l| l.starts_with("lambda_dot,")).count(),
        2
    );
    let reps = fs::read_to_string(&dump).unwrap();
    assert_eq!(
        reps.lines().next(),
        Some("rep,lambda,n,method,estimate,valid,converged")
    );
    assert_eq!(reps.lines().count(), 1 + 40 * 2 * 2);
}

#[test]
fn mc_table_format() {
    let text = ok(&[
        "mc",
        "--lambda-grid",
        "0.5",
        "--n-grid",
        "50,500",
        "--N",
        "50",
        "--table",
    ]);
    assert!(text.contains("score root"));
    assert!(text.contains("least squares"));
}

#[test]
fn bad_arguments_fail() {
    for args in [
        vec!["simulate", "--lambda", "-1", "--n", "10"],
        vec!["simulate", "--lambda", "1", "--n", "0"],
        vec!["mc", "--lambda-grid", "0.5", "--N", "0"],
        vec!["mc", "--lambda-grid", "0.5", "--methods", "nope"],
        vec!["mc", "--lambda-grid", "0.5", "--methods", "sigma_hat"],
        vec!["estimate", "-i", "/nonexistent/file.csv", "--v", "1"],
        vec!["frobnicate"],
    ] {
        let out = telegraph(&args);
        assert!(!out.status.success(), "{args:?} should fail");
    }
}
