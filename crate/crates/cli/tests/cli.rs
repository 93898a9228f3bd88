use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn srf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srf"))
        .args(args)
        .arg("--quiet")
        .current_dir(dir)
        .env_remove("SRF_OUT_DIR")
        .env("SRF_THREADS", "1")
        .output()
        .expect("spawn srf")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn z_of(sidecar: &Value, i: usize) -> (usize, usize, Vec<f64>) {
    let z = &sidecar["embeddings"][i]["z"];
    let data = z["data"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    (z["rows"].as_u64().unwrap() as usize, z["cols"].as_u64().unwrap() as usize, data)
}

#[test]
fn gen_writes_loadable_datasets() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&srf(dir.path(), &["gen", "csl", "--out", "csl.json"])), 0);
    let csl = srf_core::graph::dataset_from_json(&std::fs::read_to_string(dir.path().join("csl.json")).unwrap()).unwrap();
    assert_eq!(csl.graphs.len(), 150);
    assert!(csl.graphs.iter().all(|g| g.node_count() == 41));

    assert_eq!(code(&srf(dir.path(), &["gen", "tree-nm", "--r", "2", "--set", "train=40", "--set", "test=10"])), 0);
    let trees = json(&dir.path().join("tree-nm.json"));
    let graphs = trees["graphs"].as_array().unwrap();
    assert_eq!(graphs.len(), 50);
    assert!(graphs.iter().all(|g| g["n"] == 7));
}

#[test]
fn gen_is_deterministic_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    for (out, seed) in [("a.json", "1"), ("b.json", "1"), ("c.json", "2")] {
        assert_eq!(code(&srf(dir.path(), &["gen", "gnp", "--n", "25", "--out", out, "--seed", seed])), 0);
    }
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_ne!(read("a.json"), read("c.json"));
}

#[test]
fn srf_sidecar_width_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&srf(dir.path(), &["gen", "gnp", "--n", "20", "--out", "g.json"])), 0);
    let args = ["srf", "--data", "g.json", "--kernel", "rbf", "--dim", "8", "--order", "2", "--out"];
    assert_eq!(code(&srf(dir.path(), &[&args[..], &["s1.json"]].concat())), 0);
    assert_eq!(code(&srf(dir.path(), &[&args[..], &["s2.json"]].concat())), 0);
    let (rows, cols, _) = z_of(&json(&dir.path().join("s1.json")), 0);
    assert_eq!((rows, cols), (20, 16));
    assert_eq!(std::fs::read(dir.path().join("s1.json")).unwrap(), std::fs::read(dir.path().join("s2.json")).unwrap());
}

#[test]
fn identity_projection_returns_features() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&srf(dir.path(), &["gen", "gnp", "--n", "12", "--features", "5", "--out", "g.json"])), 0);
    let out = srf(
        dir.path(),
        &["srf", "--data", "g.json", "--out", "s.json", "--dim", "5", "--order", "1", "--sketch", "identity", "--set", "identity_projection=true"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let ds = srf_core::graph::dataset_from_json(&std::fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    let (rows, cols, z) = z_of(&json(&dir.path().join("s.json")), 0);
    assert_eq!((rows, cols), (12, 5));
    assert_eq!(z.as_slice(), ds.graphs[0].features().as_slice());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&srf(dir.path(), &["srf", "--data", "missing.json", "--out", "x.json"])), 2);
    assert_eq!(code(&srf(dir.path(), &["check", "p4", "--set", "no_such_key=1"])), 2);
    assert_eq!(code(&srf(dir.path(), &["check", "p4", "--set", "novalue"])), 2);
    assert_eq!(code(&srf(dir.path(), &["gen", "csl", "--n", "10"])), 2);
    assert_eq!(code(&srf(dir.path(), &["bench", "oversmooth", "--epochs", "3"])), 2);
    assert_eq!(code(&srf(dir.path(), &["frobnicate"])), 2);
    std::fs::write(dir.path().join("bad.json"), "{").unwrap();
    assert_eq!(code(&srf(dir.path(), &["check", "p4", "--config", "bad.json"])), 2);
}

#[test]
fn check_writes_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = srf(dir.path(), &["check", "p4", "--trials", "100", "--out-dir", "run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    let manifest = json(&run.join("manifest.json"));
    assert_eq!(manifest["version"], srf_core::VERSION);
    assert_eq!(manifest["passed"], true);
    assert_eq!(json(&run.join("config.json"))["uniqueness"]["trials"], 100);
    assert!(run.join("reports.json").exists());
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = srf(dir.path(), &["check", "p2", "--n", "50,100,200", "--set", "distortion.pairs=20", "--out-dir", "run"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = json(&dir.path().join("run/manifest.json"));
    assert_eq!(manifest["passed"], false);
    assert!(dir.path().join("run/distortion.csv").exists());
}

#[test]
fn out_dir_env_sets_default_run_location() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_srf"))
        .args(["check", "p4", "--trials", "50", "--quiet"])
        .current_dir(dir.path())
        .env("SRF_OUT_DIR", dir.path().join("env"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let runs: Vec<_> = std::fs::read_dir(dir.path().join("env")).unwrap().collect();
    assert_eq!(runs.len(), 1);
    let name = runs[0].as_ref().unwrap().file_name().into_string().unwrap();
    assert!(name.starts_with("check-"), "{name}");
}

#[test]
fn small_bench_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = srf(
        dir.path(),
        &["bench", "oversquash", "--seeds", "0", "--epochs", "1", "--depths", "2", "--set", "bench.train=60", "--set", "bench.test=20", "--out-dir", "run"],
    );
    // One epoch cannot fit the task, so the assessment fails while still producing outputs.
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("run/oversquash.csv")).unwrap();
    assert!(csv.starts_with("variant,r,seed,"));
    assert_eq!(csv.lines().count(), 1 + 5);
    assert_eq!(json(&dir.path().join("run/manifest.json"))["seeds"], serde_json::json!([0]));
}

#[test]
fn train_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&srf(dir.path(), &["gen", "csl", "--out", "csl.json"])), 0);
    assert_eq!(code(&srf(dir.path(), &["srf", "--data", "csl.json", "--out", "s.json", "--dim", "8", "--order", "2"])), 0);
    let out = srf(dir.path(), &["train", "--data", "csl.json", "--srf", "s.json", "--epochs", "2", "--out-dir", "run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let history = std::fs::read_to_string(dir.path().join("run/history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
    for f in ["config.json", "report.json", "checkpoint.json", "manifest.json"] {
        assert!(dir.path().join("run").join(f).exists(), "{f}");
    }

    let bad = srf(dir.path(), &["train", "--data", "csl.json", "--srf", "s.json", "--set", "gnn.srf_width=4", "--out-dir", "bad"]);
    assert_eq!(code(&bad), 2);

    assert_eq!(code(&srf(dir.path(), &["gen", "gnp", "--out", "g.json"])), 0);
    let other = srf(dir.path(), &["train", "--data", "g.json", "--srf", "s.json", "--out-dir", "bad2"]);
    assert_eq!(code(&other), 2);
}
