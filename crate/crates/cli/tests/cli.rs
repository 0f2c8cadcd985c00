use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vibrograph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vibrograph")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = vibrograph(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generated_scenario_validates_runs_and_self_diffs_to_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("wind.toml");
    ok(&["generate", "wind", "--seed", "3", "--duration", "5", "--out", s(&scenario)]);
    assert!(ok(&["validate", "--scenario", s(&scenario)]).starts_with("ok:"));

    let out = tmp.path().join("run");
    ok(&["run", "--scenario", s(&scenario), "--modality", "md", "--out", s(&out)]);
    for file in ["stats.json", "record.json"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
    let wavs = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "wav")).count();
    assert_eq!(wavs, 10);

    let json = ok(&["diff", s(&out), s(&out), "--json"]);
    let report: serde_json::Value = serde_json::from_str(&json).unwrap();
    for l in report["listeners"].as_array().unwrap() {
        assert_eq!(l["rms_delta"].as_f64(), Some(0.0));
        assert_eq!(l["peak_delta"].as_f64(), Some(0.0));
    }
    assert!(report["active_listener_delta"].as_array().unwrap().iter().all(|d| d == 0));
}

#[test]
fn record_hash_tracks_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("carts.toml");
    ok(&["generate", "carts", "--duration", "5", "--out", s(&scenario)]);
    let hash = |modality: &str, dir: &str| {
        let out = tmp.path().join(dir);
        ok(&["run", "--scenario", s(&scenario), "--modality", modality, "--format", "csv", "--out", s(&out)]);
        let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("record.json")).unwrap()).unwrap();
        record["config_sha256"].as_str().unwrap().to_string()
    };
    let a = hash("ht", "a");
    assert_eq!(a, hash("ht", "b"));
    assert_ne!(a, hash("mn", "c"));
}

#[test]
fn bad_inputs_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = vibrograph(&["validate", "--scenario", s(&tmp.path().join("nope.toml"))]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let broken = tmp.path().join("broken.toml");
    fs::write(&broken, "[engine]\ntick_rate = -5\n").unwrap();
    assert!(!vibrograph(&["validate", "--scenario", s(&broken)]).status.success());
    assert!(!vibrograph(&["run", "--scenario", s(&broken), "--out", s(&tmp.path().join("x"))]).status.success());
}
