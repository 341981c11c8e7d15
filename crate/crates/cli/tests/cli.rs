use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn workcell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_workcell"))
        .args(args)
        .current_dir(repo())
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_logs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = workcell(&["simulate", "scenarios/intrusion.json", "--duration", "400", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("cycles completed 2, pass rate"), "{out}");
    for f in ["events.csv", "decisions.csv", "cycles.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert!(!dir.path().join("scans.jsonl").exists());
    let decisions = fs::read_to_string(dir.path().join("decisions.csv")).unwrap();
    assert_eq!(decisions.lines().count(), 4001);
}

#[test]
fn bad_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert_eq!(code(&workcell(&["simulate", "scenarios/intrusion.json", "--duration", "0", "--out", out])), 2);
    assert_eq!(code(&workcell(&["simulate", "no/such.json", "--out", out])), 2);
    assert_eq!(code(&workcell(&["replay", "--scans", "missing.jsonl", "--motion", "missing.jsonl"])), 2);

    let broken = dir.path().join("broken.json");
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(repo().join("scenarios/intrusion.json")).unwrap()).unwrap();
    v["dt_s"] = serde_json::json!(0.05);
    fs::write(&broken, serde_json::to_string(&v).unwrap()).unwrap();
    let o = workcell(&["validate", path(&broken)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dt_s"));

    let arms = dir.path().join("arms.json");
    fs::write(&arms, r#"{"Right arm": -0.1}"#).unwrap();
    assert_eq!(code(&workcell(&["energy", path(&arms)])), 2);
}

#[test]
fn replay_rejects_misaligned_logs() {
    let dir = tempfile::tempdir().unwrap();
    let src = repo().join("data/replay_demo/motion.jsonl");
    let motion: Vec<String> = fs::read_to_string(src).unwrap().lines().skip(1).map(String::from).collect();
    let shifted = dir.path().join("motion.jsonl");
    fs::write(&shifted, motion.join("\n") + "\n").unwrap();
    let o = workcell(&["replay", "--scans", "data/replay_demo/scans.jsonl", "--motion", path(&shifted)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("record 0"));
}

#[test]
fn replay_none_is_a_single_zero_row() {
    let o = workcell(&[
        "replay",
        "--scans",
        "data/replay_demo/scans.jsonl",
        "--motion",
        "data/replay_demo/motion.jsonl",
        "--strategies",
        "none",
    ]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("none,200,0,0,20"), "{}", rows[1]);
    assert!(rows[1].ends_with(",0.0"));
}

#[test]
fn project_emits_series() {
    let o = workcell(&["project", "--model", "human", "--horizon", "8h"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().count(), 28_802);
    assert_eq!(csv.lines().last().unwrap(), "28800,170");
    assert_eq!(code(&workcell(&["project", "--model", "robot", "--horizon", "soon"])), 2);
}

#[test]
fn validate_accepts_bundled_scenarios() {
    for name in ["factory", "intrusion", "replay_demo"] {
        let o = workcell(&["validate", &format!("scenarios/{name}.json")]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn energy_limits_are_strict() {
    let dir = tempfile::tempdir().unwrap();
    let arms = dir.path().join("arms.json");
    fs::write(&arms, r#"{"at limit": 0.11, "idle": 0.0}"#).unwrap();
    let o = workcell(&["energy", path(&arms)]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    let head = table.lines().find(|l| l.starts_with("Head")).unwrap();
    assert!(head.contains("1.00     Safe"), "{head}");
    assert!(!table.contains("Unsafe"));
}
