use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anisostable"))
}

fn example(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../ex")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("anisostable-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn density_check_normalizes() {
    let out = scratch("density");
    let o = run(&["density", "--model", &example("iso_cauchy.json"), "--check", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let total = json(&out.join("density.json"))["total"].as_f64().unwrap();
    assert!((total - 1.0).abs() < 1e-2, "{total}");
    assert!(out.join("density.csv").exists());
}

#[test]
fn density_check_failure_exits_3() {
    let out = scratch("density-small");
    let o = run(&[
        "density",
        "--model",
        &example("iso_cauchy.json"),
        "--check",
        "--extent",
        "1",
        "--tol",
        "1e-4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);
}

#[test]
fn potential_of_cauchy_is_flat() {
    let out = scratch("potential");
    let o = run(&["potential", "--model", &example("iso_cauchy.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("potential.csv")).unwrap();
    let target = 1.0 / (2.0 * std::f64::consts::PI);
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((v - target).abs() < 1e-7 * target, "{v}");
        rows += 1;
    }
    assert_eq!(rows, 32);
    assert_eq!(json(&out.join("potential.json"))["continuity"]["verdict"], "continuous");
}

#[test]
fn classify_nu3_reports_failure_witnesses() {
    let out = scratch("classify");
    let o = run(&["classify", "--model", &example("nu3.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("classify.json"));
    assert_eq!(r["rk"]["verdict"], "fails");
    assert!(!r["rk"]["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn manifest_replay_reproduces_checksums() {
    let first = scratch("replay-a");
    let second = scratch("replay-b");
    let o = run(&[
        "simulate",
        "--model",
        &example("atomic_a10.json"),
        "--x",
        "0.2,-0.1",
        "--paths",
        "2000",
        "--seed",
        "7",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m1 = json(&first.join("manifest.json"));
    let mut argv: Vec<String> = m1["argv"].as_array().unwrap().iter().map(|a| a.as_str().unwrap().to_string()).collect();
    let at = argv.iter().position(|a| a == "--out").unwrap();
    argv[at + 1] = second.to_string_lossy().into_owned();
    let o = bin().args(&argv[1..]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let m2 = json(&second.join("manifest.json"));
    assert_eq!(m1["outputs"], m2["outputs"]);
    assert_eq!(m1["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(m1["model_checksum"], m2["model_checksum"]);
}

#[test]
fn usage_errors_exit_2() {
    let out = scratch("usage");
    let o = run(&["potential", "--model", &example("nu1.json"), "--bogus"]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::create_dir_all(&out).unwrap();
    let bad = out.join("bad.json");
    std::fs::write(&bad, r#"{"d": 2}"#).unwrap();
    let o = run(&["classify", "--model", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("malformed model JSON"), "{err}");

    let recurrent = out.join("recurrent.json");
    std::fs::write(&recurrent, r#"{"d": 1, "alpha": 1.5, "spectral": {"uniform_mass": 1.0}}"#).unwrap();
    let o = run(&["potential", "--model", recurrent.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("d = 1 <= alpha = 1.5"), "{err}");
    assert_eq!(err.lines().count(), 1);

    let o = run(&["simulate", "--model", &example("nu1.json"), "--x", "a,b", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
