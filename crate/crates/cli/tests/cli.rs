//! Integration tests that drive the actual binary.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frugal-snn"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("frugal_snn_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_sorted_artifacts(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
        .filter(|n| n != "manifest.json")
        .collect();
    names.sort();
    names
}

#[test]
fn synth_writes_raster_truth_and_manifest() {
    let dir = tmp("synth");
    let status = bin()
        .args([
            "synth",
            "--generator",
            "disjoint",
            "--seed",
            "3",
            "--repeats",
            "1",
            "--out",
        ])
        .arg(dir.join("a"))
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["raster.csv", "truth.csv", "manifest.json"] {
        assert!(dir.join("a").join(f).exists(), "missing {f}");
    }
    // same seed twice -> identical files
    let status = bin()
        .args(["synth", "--generator", "disjoint", "--seed", "3", "--repeats", "1", "--out"])
        .arg(dir.join("b"))
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["raster.csv", "truth.csv"] {
        let a = std::fs::read(dir.join("a").join(f)).unwrap();
        let b = std::fs::read(dir.join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs across identical seeds");
    }
}

#[test]
fn unknown_generator_fails_with_config_exit_code() {
    let dir = tmp("synth_bad");
    let status = bin()
        .args(["synth", "--generator", "perlin", "--out"])
        .arg(dir.join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn invalid_preset_is_a_usage_error() {
    let dir = tmp("badpreset");
    let out = bin()
        .args(["run", "--preset", "marsupial", "--out"])
        .arg(dir.join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("marsupial"), "stderr: {stderr}");
}

#[test]
fn run_then_rerun_from_manifest_reproduces_artifacts() {
    let dir = tmp("rerun");
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        r#"
preset = "artificial"
seed = 5
epochs = 2
neurons = 6

[input]
kind = "synth"
generator = "disjoint"
repeats = 1
"#,
    )
    .unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--out"])
        .arg(dir.join("first"))
        .status()
        .unwrap();
    assert!(status.success());

    let status = bin()
        .args(["run", "--manifest"])
        .arg(dir.join("first").join("manifest.json"))
        .args(["--out"])
        .arg(dir.join("second"))
        .status()
        .unwrap();
    assert!(status.success());

    let first = read_sorted_artifacts(&dir.join("first"));
    let second = read_sorted_artifacts(&dir.join("second"));
    assert_eq!(first, second);
    assert!(first.contains(&"metrics.txt".to_string()));
    for name in &first {
        let a = std::fs::read(dir.join("first").join(name)).unwrap();
        let b = std::fs::read(dir.join("second").join(name)).unwrap();
        assert_eq!(a, b, "{name} not reproduced byte-for-byte");
    }
}

#[test]
fn full_signal_pipeline_via_subcommands() {
    let dir = tmp("stages");
    // generate the envelope signal
    let status = bin()
        .args(["synth", "--generator", "propagating", "--seed", "1", "--out"])
        .arg(dir.join("synth"))
        .status()
        .unwrap();
    assert!(status.success());
    // encode it
    let status = bin()
        .args(["encode", "--input"])
        .arg(dir.join("synth").join("signal.csv"))
        .args(["--normalize", "per_channel", "--out"])
        .arg(dir.join("enc"))
        .status()
        .unwrap();
    assert!(status.success());
    // STP filter
    let status = bin()
        .args(["stp", "--input"])
        .arg(dir.join("enc").join("encoded.csv"))
        .args(["--preset", "neural", "--out"])
        .arg(dir.join("stp"))
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("stp").join("stp_mask.csv").exists());
    // train on the masked raster
    let status = bin()
        .args(["train", "--input"])
        .arg(dir.join("stp").join("masked.csv"))
        .args(["--truth"])
        .arg(dir.join("synth").join("truth.csv"))
        .args(["--preset", "neural", "--neurons", "5", "--epochs", "2", "--seed", "7", "--out"])
        .arg(dir.join("train"))
        .status()
        .unwrap();
    assert!(status.success());
    let metrics = std::fs::read_to_string(dir.join("train").join("metrics.txt")).unwrap();
    assert!(metrics.contains("f_global="));
}
