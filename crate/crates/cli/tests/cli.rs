use std::path::Path;
use std::process::{Command, Output};

fn maxlat(args: &[&str], dir: &Path, threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxlat"))
        .args(args)
        .current_dir(dir)
        .env("MAXLAT_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn run(args: &[&str]) -> (i32, String) {
    let dir = tempfile::tempdir().unwrap();
    let out = maxlat(args, dir.path(), "2");
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn first_f64(stdout: &str) -> f64 {
    stdout.lines().next().unwrap().trim().parse().unwrap()
}

#[test]
fn count_examples() {
    assert_eq!(run(&["count", "--d", "2", "--N", "2"]), (0, "13\n".into()));
    assert_eq!(run(&["count", "--d", "1", "--N", "7"]), (0, "15\n".into()));
    let (code, csv) = run(&["count", "--d", "3", "--N", "2", "--profile", "in{-1,1}"]);
    assert_eq!(code, 0);
    let total: u64 = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 33);
    let (code, json) = run(&["count", "--d", "2", "--N", "2", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["payload"]["report"]["count"], "13");
}

#[test]
fn count_errors() {
    assert_eq!(run(&["count", "--d", "2", "--N", "x"]).0, 2);
    assert_eq!(run(&["count", "--d", "2", "--N", "2", "--profile", "bogus"]).0, 2);
    assert_eq!(run(&["count", "--d", "3000", "--N", "3000"]).0, 3);
}

#[test]
fn multiplier_examples() {
    let (code, out) = run(&["multiplier", "--d", "1", "--N", "1", "--xi", "1/3"]);
    assert_eq!(code, 0);
    assert!(first_f64(&out).abs() < 1e-15);
    let (_, out) = run(&["multiplier", "--d", "4", "--N", "3", "--xi", "0"]);
    assert_eq!(first_f64(&out), 1.0);
    let (_, out) = run(&["multiplier", "--d", "2", "--N", "1", "--xi", "1/2,1/2"]);
    assert!((first_f64(&out) + 0.6).abs() < 1e-15);
    assert_eq!(run(&["multiplier", "--d", "2", "--N", "1", "--xi", "0.1,0.2,0.3"]).0, 2);
}

#[test]
fn multiplier_reads_frequency_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("xi.txt"), "0.5\n0.5\n").unwrap();
    let out = maxlat(
        &["multiplier", "--d", "2", "--N", "1", "--xi", "xi.txt"],
        dir.path(),
        "1",
    );
    assert!((first_f64(&String::from_utf8(out.stdout).unwrap()) + 0.6).abs() < 1e-15);
}

#[test]
fn verify_writes_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxlat(
        &["verify", "--suite", "kraw", "--grid", "n_max=30", "--out", "r"],
        dir.path(),
        "2",
    );
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r/kraw.json")).unwrap()).unwrap();
    assert_eq!(json["payload"]["manifest"]["subcommand"], "verify");
    assert!(json["payload_sha256"].as_str().unwrap().len() == 64);
    assert!(std::fs::read_to_string(dir.path().join("r/kraw.csv"))
        .unwrap()
        .starts_with("d,N,"));

    std::fs::write(dir.path().join("bad.toml"), "dims = [").unwrap();
    let out = maxlat(&["verify", "--suite", "kraw", "--grid", "bad.toml"], dir.path(), "1");
    assert_eq!(out.status.code(), Some(4));
    let out = maxlat(
        &["verify", "--suite", "kraw", "--grid", "missing.toml"],
        dir.path(),
        "1",
    );
    assert_eq!(out.status.code(), Some(4));
    let out = maxlat(&["verify", "--suite", "prop9"], dir.path(), "1");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_payload_independent_of_threads() {
    let hash = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = maxlat(&["verify", "--suite", "lemma9", "--out", "r"], dir.path(), threads);
        assert_eq!(out.status.code(), Some(0));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("r/lemma9.json")).unwrap()).unwrap();
        json["payload_sha256"].as_str().unwrap().to_string()
    };
    assert_eq!(hash("1"), hash("4"));
}

#[test]
fn maxop_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxlat(
        &[
            "maxop", "--probe", "norm", "--d", "1", "--set", "1", "--trials", "0", "--out", "n.json",
        ],
        dir.path(),
        "2",
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let delta: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("delta ratio "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((delta - 3f64.powf(-0.5)).abs() < 1e-12);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("n.json")).unwrap()).unwrap();
    assert!(report["payload"]["report"]["best_ratio"].as_f64().unwrap() >= delta);

    let (code, out) = run(&["maxop", "--probe", "square", "--d", "1", "--trials", "4"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("best ratio"));
    assert_eq!(run(&["maxop", "--probe", "ellipsoid", "--d", "5"]).0, 2);
    assert_eq!(
        run(&[
            "maxop",
            "--probe",
            "ellipsoid",
            "--d",
            "2",
            "--set",
            "1,2.5",
            "--trials",
            "2"
        ])
        .0,
        0
    );
    assert_eq!(run(&["maxop", "--probe", "norm", "--d", "6"]).0, 2);
}

#[test]
fn bad_thread_count_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxlat(&["count", "--d", "2", "--N", "2"], dir.path(), "zero");
    assert_eq!(out.status.code(), Some(4));
}
