//! The shipped config files, the `gfem` binary and its outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gfem::cli::{execute, load_config, preset, render_outputs, PRESET_NAMES};

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn gfem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gfem"))
}

#[test]
fn shipped_configs_equal_presets() {
    for name in PRESET_NAMES {
        let path = workspace_root().join("configs").join(format!("{name}.cfg"));
        let loaded = load_config(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(loaded, preset(name).unwrap(), "{name}");
    }
}

#[test]
fn presets_subcommand_lists_every_preset() {
    let out = gfem().arg("presets").output().unwrap();
    assert!(out.status.success());
    let listed: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect();
    assert_eq!(listed, PRESET_NAMES);
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_write_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let status = gfem()
            .args(["run", "--preset", "ad2d_square", "--emit-tau", "--out"])
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    let names: Vec<&str> = fa.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["field.vtk", "profile.csv", "solution.csv", "tau.csv"]);
    assert_eq!(fa, fb);
}

#[test]
fn config_run_matches_preset_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = workspace_root().join("configs/ad1d.cfg");
    let from_cfg = tmp.path().join("cfg");
    let from_preset = tmp.path().join("preset");
    for (dir, args) in [(&from_cfg, ["--config", cfg.to_str().unwrap()]), (&from_preset, ["--preset", "ad1d"])] {
        let status = gfem().arg("run").args(args).arg("--out").arg(dir).status().unwrap();
        assert!(status.success());
    }
    assert_eq!(read_dir_sorted(&from_cfg), read_dir_sorted(&from_preset));
    let names: Vec<String> = read_dir_sorted(&from_cfg).into_iter().map(|f| f.0).collect();
    assert_eq!(names, ["error.csv", "profile.csv", "solution.csv"]);
}

#[test]
fn continuation_run_writes_history() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gfem()
        .args(["run", "--preset", "ad1d_gl", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let history = fs::read_to_string(tmp.path().join("history.csv")).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "step,peclet,kappa,l2_rel");
    assert_eq!(lines.len(), 1 + 9);
}

#[test]
fn unwritable_output_fails_without_files() {
    let tmp = tempfile::tempdir().unwrap();
    // a regular file where the output directory should go
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let out = gfem()
        .args(["run", "--preset", "ad1d", "--out"])
        .arg(blocker.join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
    assert_eq!(fs::read(&blocker).unwrap(), b"x");
}

#[test]
fn strong_ha_is_rejected_before_solving() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gfem()
        .args(["run", "--preset", "ad1d", "--enrichment", "ha", "--bc", "strong", "--out"])
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mode conflict"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn malformed_config_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.cfg");
    fs::write(&path, "name = \"x\"\nproblem.kappa = = 1\n").unwrap();
    let out = gfem().args(["run", "--config"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn overrides_change_the_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gfem()
        .args(["run", "--preset", "ad1d", "--kappa", "0.05", "--lambda", "1e8", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("kappa = 5e-2"), "{stdout}");
}

#[test]
fn every_preset_renders() {
    for name in PRESET_NAMES {
        let outcome = execute(&preset(name).unwrap()).unwrap();
        let files = render_outputs(&outcome).unwrap();
        assert!(files.iter().any(|f| f.0 == "solution.csv"), "{name}");
        for (file, text) in &files {
            let bad = text
                .split(|c: char| c == ',' || c.is_whitespace())
                .find(|t| matches!(t.trim_start_matches('-'), "NaN" | "inf"));
            assert!(bad.is_none(), "{name}/{file}");
        }
    }
}
