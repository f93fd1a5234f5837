use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_relu-overlap");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("RELU_OVERLAP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().expect("exit code")
}

fn same_bytes(a: PathBuf, b: PathBuf) {
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(x == y, "{} and {} differ", a.display(), b.display());
}

/// A small curve dataset and a briefly trained network for it.
fn fixture(dir: &Path) {
    ok(dir, &["gen-data", "--generator", "curve", "--n", "40", "--a", "0.3", "--b", "0.2", "--out", "data.csv"]);
    ok(
        dir,
        &["train", "--dataset", "data.csv", "--preset", "curves", "--hidden", "6,6", "--epochs", "20", "--out", "net.json"],
    );
}

#[test]
fn every_command_replays_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    ok(dir, &["decompose", "--weights", "net.json", "--dataset", "data.csv", "--out", "regions.json"]);
    ok(dir, &["overlap", "--weights", "net.json", "--dataset", "data.csv", "--delta", "0.5", "--out", "part.json"]);
    ok(
        dir,
        &["homology", "--dataset", "data.csv", "--partition-file", "part.json", "--max-scale", "2", "--out", "bars.csv"],
    );
    for (file, again) in [
        ("data.csv", "data2.csv"),
        ("net.json", "net2.json"),
        ("regions.json", "regions2.json"),
        ("part.json", "part2.json"),
        ("bars.csv", "bars2.csv"),
    ] {
        ok(dir, &["replay", file, "--out", again]);
        same_bytes(dir.join(file), dir.join(again));
    }
}

#[test]
fn experiment_replays_into_a_new_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("sweep.json"),
        r#"{"widths": [4], "depths": [1, 2], "n_per_sphere": 20}"#,
    )
    .unwrap();
    ok(dir, &["experiment", "expressivity-sweep", "--config", "sweep.json", "--seeds", "0,1", "--out", "a"]);
    ok(dir, &["replay", "a/results.json", "--out", "b"]);
    for f in ["results.json", "sweep.csv", "sweep_grid.csv"] {
        same_bytes(dir.join("a").join(f), dir.join("b").join(f));
    }
    assert!(dir.join("a/timings.json").exists());
    let grid = std::fs::read_to_string(dir.join("a/sweep.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 2 * 2);
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("gen.json"), r#"{"generator": "spheres", "n": 7}"#).unwrap();
    let rows = |f: &str| {
        std::fs::read_to_string(dir.join(f))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count()
            - 1
    };
    ok(dir, &["gen-data", "--config", "gen.json", "--out", "a.csv"]);
    assert_eq!(rows("a.csv"), 4 * 7);
    ok(dir, &["gen-data", "--config", "gen.json", "--n", "5", "--out", "b.csv"]);
    assert_eq!(rows("b.csv"), 4 * 5);
    ok(dir, &["gen-data", "--generator", "spheres", "--out", "c.csv"]);
    assert_eq!(rows("c.csv"), 4 * 500);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("sweep.json"), r#"{"widths": [3], "depths": [1], "seeds": [0], "n_per_sphere": 10}"#).unwrap();
    let out = Command::new(BIN)
        .args(["experiment", "expressivity-sweep", "--config", "sweep.json"])
        .current_dir(dir)
        .env("RELU_OVERLAP_OUT_DIR", dir.join("from_env"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("from_env/expressivity-sweep/results.json").exists());
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(dir, &["no-such-command"]), 1);
    assert_eq!(code(dir, &["gen-data", "--generator", "curve", "--n", "many"]), 1);
    assert_eq!(code(dir, &["decompose", "--weights", "missing.json", "--dataset", "missing.csv"]), 1);
    std::fs::write(dir.join("bad.json"), r#"{"generator": "curve", "colour": 1}"#).unwrap();
    assert_eq!(code(dir, &["gen-data", "--config", "bad.json"]), 1);
    fixture(dir);
    // diverging training
    assert_eq!(
        code(
            dir,
            &["train", "--dataset", "data.csv", "--preset", "curves", "--hidden", "4", "--epochs", "3", "--learning-rate", "1e200", "--out", "x.json"]
        ),
        2
    );
    ok(dir, &["gen-data", "--generator", "topology", "--kind", "circle", "--n", "150", "--out", "circle.csv"]);
    // simplex cap
    assert_eq!(
        code(dir, &["homology", "--dataset", "circle.csv", "--max-dim", "3", "--max-scale", "100", "--out", "h.csv"]),
        3
    );
    assert_eq!(code(dir, &["--help"]), 0);
}

#[test]
fn decompose_reports_every_point_once() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    ok(dir, &["decompose", "--weights", "net.json", "--dataset", "data.csv", "--layer", "1", "--out", "r.json"]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("r.json")).unwrap()).unwrap();
    let text = v.to_string();
    let regions = find(&v, "regions").and_then(|r| r.as_array().cloned()).expect(&text);
    let total: u64 = regions.iter().map(|r| r["points"].as_u64().unwrap()).sum();
    assert_eq!(total, 40);
}

fn find<'a>(v: &'a serde_json::Value, key: &str) -> Option<&'a serde_json::Value> {
    match v {
        serde_json::Value::Object(m) => m.get(key).or_else(|| m.values().find_map(|x| find(x, key))),
        _ => None,
    }
}
