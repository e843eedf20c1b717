use std::fs;
use std::path::Path;
use std::process::Command;

use cyclelab::commands::read_fields_jsonl;
use cyclelab::field::regime_norm;

fn cyclelab(args: &[&str], out: &Path) -> String {
    let output = Command::new(env!("CARGO_BIN_EXE_cyclelab"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

#[test]
fn sample_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cyclelab(&["sample", "--samples", "1", "--seed", "5"], &a);
    cyclelab(&["sample", "--samples", "1", "--seed", "5"], &b);
    let fa = fs::read(a.join("fields.jsonl")).unwrap();
    assert!(!fa.is_empty());
    assert_eq!(fa, fs::read(b.join("fields.jsonl")).unwrap());
    assert!(a.join("manifest.json").exists());
}

#[test]
fn sampled_fields_lie_in_ball_and_norm_check_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = cyclelab(
        &[
            "sample",
            "--samples",
            "1000",
            "--degree",
            "2",
            "--seed",
            "9",
            "--norm-check",
        ],
        dir.path(),
    );
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let fields = read_fields_jsonl(&dir.path().join("fields.jsonl")).unwrap();
    assert_eq!(fields.len(), 1000);
    let n = regime_norm(2);
    let max = fields.iter().map(|f| f.coeff_norm()).fold(0.0, f64::max);
    assert!(max <= n);
    assert_eq!(summary["max_norm"].as_f64().unwrap(), max);
    assert_eq!(summary["recheck_max_norm"].as_f64().unwrap(), max);
}

#[test]
fn tails_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["tails", "--samples", "100", "--degree", "2", "--seed", "3"];
    cyclelab(&args, &a);
    cyclelab(&[&args[..], &["--workers", "3"]].concat(), &b);
    let ja = fs::read(a.join("samples.jsonl")).unwrap();
    assert_eq!(ja, fs::read(b.join("samples.jsonl")).unwrap());
    assert_eq!(ja.iter().filter(|&&c| c == b'\n').count(), 100);
    let csv = fs::read_to_string(a.join("tail.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("T,fraction,ci_lo,ci_hi"));
    assert!(lines.next().unwrap().starts_with("0,1,"));
    for file in ["report.json", "manifest.json"] {
        assert!(a.join(file).exists());
    }
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "degree = 3\nsamples = 4\nseed = 11\n").unwrap();
    let out = dir.path().join("out");
    cyclelab(
        &["tails", "--config", cfg.to_str().unwrap(), "--samples", "2"],
        &out,
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["degree"], 3);
    assert_eq!(manifest["config"]["samples"], 2);
    assert_eq!(manifest["config"]["seed"], 11);
}

#[test]
fn out_of_regime_norm_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_cyclelab"))
        .args(["sample", "--norm", "0.5", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("exceeds"));
}

#[test]
fn constants_and_single_field_commands() {
    let dir = tempfile::tempdir().unwrap();
    let k: serde_json::Value =
        serde_json::from_str(&cyclelab(&["constants", "--d-hat", "1"], dir.path())).unwrap();
    assert_eq!(k["c2"].as_f64().unwrap(), 2.5);
    let p: serde_json::Value = serde_json::from_str(&cyclelab(&["poincare"], dir.path())).unwrap();
    assert_eq!(p["status"], "Completed");
    assert!(dir.path().join("trajectory.csv").exists());
    let c: serde_json::Value = serde_json::from_str(&cyclelab(&["count"], dir.path())).unwrap();
    assert_eq!(c["c"], 0);
    let v = cyclelab(
        &["verify-bounds", "--samples", "5", "--degree", "3"],
        dir.path(),
    );
    assert!(v.contains("25/25") && v.contains("100/100"));
    let r: serde_json::Value = serde_json::from_str(&cyclelab(
        &["remez", "--samples", "20", "--chebyshev", "2"],
        dir.path(),
    ))
    .unwrap();
    assert!(r["d_hat"].as_f64().unwrap() <= 2.0);
}
