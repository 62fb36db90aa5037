use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entropic-doubling"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn verify_suite_reports_no_violations() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &["verify", "--n", "4", "--trials", "1000", "--seed", "7"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&out);
    assert_eq!(report["violations"], 0);
    assert_eq!(report["seed"], 7);
    assert!(report["prng"].as_str().unwrap().contains("ChaCha8"));
}

#[test]
fn analyze_subspace_file() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("v.json"),
        r#"{"n": 4, "elements": ["0", "1", "2", "3", "8", "9", "a", "b"]}"#,
    )
    .unwrap();
    let out = run(&["analyze", "v.json"], dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["eta"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["H[U_A]"].as_f64().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn find_subspace_certificate_reverifies() {
    let dir = TempDir::new().unwrap();
    let gen = run(
        &[
            "gen",
            "--family",
            "hamming-ball",
            "--n",
            "4",
            "--radius",
            "1",
            "--out",
            "ball.json",
        ],
        dir.path(),
    );
    assert!(gen.status.success());
    let find = run(
        &[
            "find-subspace",
            "ball.json",
            "--epsilon",
            "0.1",
            "--out",
            "cert.json",
        ],
        dir.path(),
    );
    assert!(
        find.status.success(),
        "{}",
        String::from_utf8_lossy(&find.stderr)
    );
    let check = run(&["verify", "--certificate", "cert.json"], dir.path());
    assert!(check.status.success());
    assert_eq!(json(&check)["ok"], true);

    // a tampered certificate fails with exit 1
    let path = dir.path().join("cert.json");
    let mut bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    bundle["certificate"]["subspace"]["basis"] = serde_json::json!([]);
    std::fs::write(&path, bundle.to_string()).unwrap();
    let check = run(&["verify", "--certificate", "cert.json"], dir.path());
    assert_eq!(check.status.code(), Some(1));
}

#[test]
fn csv_columns_are_fixed() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &[
            "find-subspace",
            "--family",
            "hamming-ball",
            "--n",
            "4",
            "--radius",
            "1",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "family,n,params,|A|,|A+A|,η,dimV,achieved-ε,seed"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..5], &["hamming-ball", "4", "r=1", "5", "11"]);
    assert!((row[5].parse::<f64>().unwrap() - 0.5101).abs() < 1e-4);
}

#[test]
fn gen_is_deterministic_and_records_seed() {
    let dir = TempDir::new().unwrap();
    let args = [
        "gen",
        "--family",
        "union-of-cosets",
        "--n",
        "8",
        "--dim-v",
        "3",
        "--count",
        "4",
        "--seed",
        "11",
    ];
    let a = run(&args, dir.path());
    let b = run(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 11);
    assert_eq!(v["elements"].as_array().unwrap().len(), 32);
    // the output is itself a valid set file
    std::fs::write(dir.path().join("a.json"), &a.stdout).unwrap();
    assert!(run(&["analyze", "a.json"], dir.path()).status.success());
}

#[test]
fn distribution_commands() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("d.json"),
        r#"{"n": 2, "mass": [0.5, 0.25, 0.25, 0.0]}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("u.json"),
        r#"{"n": 2, "support": {"0": 0.25, "1": 0.25, "2": 0.25, "3": 0.25}}"#,
    )
    .unwrap();
    let a = run(&["analyze", "d.json"], dir.path());
    assert!((json(&a)["H[X]"].as_f64().unwrap() - 1.5).abs() < 1e-12);

    let f = run(
        &[
            "find-subspace",
            "d.json",
            "u.json",
            "--eta",
            "0.3",
            "--out",
            "c.json",
        ],
        dir.path(),
    );
    assert!(f.status.success(), "{}", String::from_utf8_lossy(&f.stderr));
    assert!(run(&["verify", "--certificate", "c.json"], dir.path())
        .status
        .success());

    let e = run(&["endgame", "u.json"], dir.path());
    assert!(e.status.success());
    assert_eq!(json(&e)["eta"], 0.5);
}

#[test]
fn errors_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"n": 2, "mass": [0.5, 0.25, 0.0, 0.0]}"#,
    )
    .unwrap();
    assert_eq!(
        run(&["analyze", "bad.json"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["analyze", "missing.json"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(run(&["analyze"], dir.path()).status.code(), Some(2));
    assert_eq!(
        run(
            &[
                "gen",
                "--family",
                "hamming-ball",
                "--n",
                "4",
                "--radius",
                "5"
            ],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
    assert_ne!(run(&["frobnicate"], dir.path()).status.code(), Some(0));
}

#[test]
fn capacity_env_var_is_honoured() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .args(["verify", "--n", "5", "--trials", "5"])
        .env("ENTROPIC_DOUBLING_MAX_N", "4")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
