//! The binary end to end: run, replay, and error reporting.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_asip-lab");

fn asip(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SIGMA2: &str = r#"{"kind":"sigma2","map":{"id":"doubling"},"observable":{"id":"identity"},"sizes":[4096],"lags":20,"seed":3}"#;

#[test]
fn run_writes_csv_and_manifest_then_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIGMA2);
    let out = asip(&["--out-dir", "out", "run", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS") || stdout.contains("FAIL"));

    let csv = fs::read_to_string(dir.path().join("out/sigma2.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "# kind: sigma2"));
    assert!(csv.lines().any(|l| l.starts_with("# verdict: ")));
    assert!(!csv.contains("elapsed"));

    let manifest = dir.path().join("out/sigma2.manifest.json");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["config"]["seed"], 3);

    let replay = asip(&["replay", manifest.to_str().unwrap()], dir.path());
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stdout));
    assert!(String::from_utf8_lossy(&replay.stdout).starts_with("replay: match"));
}

#[test]
fn replay_detects_an_edited_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIGMA2);
    assert!(asip(&["--out-dir", "out", "run", &cfg], dir.path()).status.success());
    let manifest = dir.path().join("out/sigma2.manifest.json");
    let mut m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    m["config"]["seed"] = 4.into();
    fs::write(&manifest, serde_json::to_string_pretty(&m).unwrap()).unwrap();

    let replay = asip(&["replay", manifest.to_str().unwrap()], dir.path());
    assert_eq!(replay.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&replay.stdout).contains("mismatch"));
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIGMA2);
    assert!(asip(&["--out-dir", "a", "run", &cfg], dir.path()).status.success());
    assert!(asip(&["--out-dir", "b", "--seed", "9", "run", &cfg], dir.path()).status.success());
    let a = fs::read(dir.path().join("a/sigma2.csv")).unwrap();
    let b = fs::read(dir.path().join("b/sigma2.csv")).unwrap();
    assert_ne!(a, b);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b/sigma2.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["seed"], 9);
}

#[test]
fn bad_configs_exit_with_a_json_error() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        r#"{"kind":"sigma2","map":{"id":"tent"},"seed":1}"#,
        r#"{"kind":"sigma2","map":{"id":"doubling"},"seed":1,"colour":"red"}"#,
        r#"{"kind":"sigma2","map":{"id":"doubling"}}"#,
        "not json",
    ] {
        let cfg = write_config(dir.path(), text);
        let out = asip(&["run", &cfg], dir.path());
        assert_eq!(out.status.code(), Some(2), "{text}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        let line = stderr.lines().find_map(|l| l.strip_prefix("error: ")).expect("error line");
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["kind"].is_string() && v["message"].is_string(), "{line}");
    }
    let missing = asip(&["run", "no-such-file.json"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn catalogs_list_their_entries() {
    let dir = tempfile::tempdir().unwrap();
    let maps = String::from_utf8(asip(&["list-maps"], dir.path()).stdout).unwrap();
    for name in ["doubling", "beta", "gauss", "piecewise_linear"] {
        assert!(maps.lines().any(|l| l.starts_with(name)), "{maps}");
    }
    let obs = String::from_utf8(asip(&["list-observables"], dir.path()).stdout).unwrap();
    assert!(obs.lines().any(|l| l.starts_with("identity")));
}
