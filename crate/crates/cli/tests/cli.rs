use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaosbound")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let w = |name: &str, body: &str| std::fs::write(dir.path().join(name), body).unwrap();
    w("eye2.json", r#"{"rows": [[1, 0], [0, 1]]}"#);
    w("swap.json", r#"{"rows": [[0, 1], [1, 0]], "symmetric": true, "zero_diag": true}"#);
    w("gen.json", r#"{"family": "rank1", "n": 3, "seed": 7}"#);
    w("squaretail.json", r#"{"kind": "SquareTail"}"#);
    w("rademacher.json", r#"{"kind": "Rademacher"}"#);
    dir
}

#[test]
fn bound_square_tail_identity() {
    let d = fixtures();
    let o = run(
        d.path(),
        &[
            "bound",
            "--matrix",
            "eye2.json",
            "--model-x",
            "squaretail.json",
            "--model-y",
            "squaretail.json",
            "--p",
            "4",
            "--form",
            "decoupled",
        ],
    );
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "p,bilinear,bilinear_upper,row,col,total,total_upper,methods");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let total: f64 = row[5].parse().unwrap();
    assert!((total - 9.65685424949).abs() < 1e-9);
}

#[test]
fn missing_matrix_names_the_path() {
    let d = fixtures();
    let o = run(d.path(), &["bound", "--matrix", "absent.json", "--model-x", "squaretail.json", "--p", "1"]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("absent.json"));
}

#[test]
fn invalid_p_is_rejected() {
    let d = fixtures();
    let o = run(d.path(), &["bound", "--matrix", "eye2.json", "--model-x", "squaretail.json", "--p", "0.5"]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
}

#[test]
fn norm_emits_json() {
    let d = fixtures();
    let o = run(
        d.path(),
        &["norm", "--matrix", "eye2.json", "--model-x", "rademacher.json", "--p", "2", "--mode", "bilinear"],
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let value = v["value"].as_f64().unwrap();
    assert!((value - 2.0).abs() < 1e-6);
    assert!(v["lower"].as_f64().unwrap() <= v["upper"].as_f64().unwrap());
    assert!(v["certificate"]["y"].is_array());
}

#[test]
fn simulate_two_point_is_exact() {
    let d = fixtures();
    let o = run(
        d.path(),
        &[
            "simulate",
            "--matrix",
            "swap.json",
            "--model-x",
            "rademacher.json",
            "--undecoupled",
            "--samples",
            "5000",
            "--p",
            "1,2",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("family,instance_seed,p,bound_total,mc_value,mc_ci_low,mc_ci_high,ratio"));
    for l in &lines[1..] {
        assert_eq!(l.split(',').nth(4).unwrap(), "2");
    }
}

#[test]
fn outputs_are_byte_identical() {
    let d = fixtures();
    let args =
        ["simulate", "--matrix", "gen.json", "--model-x", "rademacher.json", "--samples", "20000", "--seed", "3"];
    let a = run(d.path(), &args);
    let b = run(d.path(), &[&args[..], &["--threads", "1"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).lines().nth(1).unwrap().starts_with("rank1,7,"));
}

#[test]
fn sweep_writes_rows_and_summary() {
    let d = fixtures();
    let o = run(
        d.path(),
        &[
            "sweep",
            "--models",
            "rademacher.json",
            "--families",
            "diagonal,sparse",
            "--sizes",
            "3",
            "--instances",
            "1",
            "--p",
            "1,2",
            "--samples",
            "2000",
            "--summary",
            "summary.csv",
            "--output",
            "rows.csv",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(d.path().join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 2);
    let summary = std::fs::read_to_string(d.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), "model,family,min,max,spread,all_finite_positive");
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn verify_small_passes() {
    let d = fixtures();
    let o = run(d.path(), &["verify", "--suite", "small"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn unknown_suite_fails() {
    let d = fixtures();
    let o = run(d.path(), &["verify", "--suite", "huge"]);
    assert!(!o.status.success());
}
