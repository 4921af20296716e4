#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn praise() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_praise"));
    cmd.env_remove("PRAISE_API_KEY").env_remove("RUST_LOG");
    cmd
}

/// Runs the binary and returns (exit code, stdout, stderr).
pub fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("spawn praise");
    (
        status.code().expect("exited normally"),
        String::from_utf8_lossy(&stdout).into_owned(),
        String::from_utf8_lossy(&stderr).into_owned(),
    )
}

pub fn replay_run(out: &Path, mode: &str) -> Command {
    replay_run_from(&fixtures().join("replay"), out, mode)
}

pub fn replay_run_from(fixture_dir: &Path, out: &Path, mode: &str) -> Command {
    let mut cmd = praise();
    cmd.arg("run")
        .arg("--dataset")
        .arg(fixtures().join("dataset.json"))
        .args(["--backend", "replay", "--mode", mode])
        .arg("--fixtures")
        .arg(fixture_dir)
        .arg("--out")
        .arg(out);
    cmd
}

pub fn scripted(subcommand: &str, script: &Path) -> Command {
    let mut cmd = praise();
    cmd.arg(subcommand)
        .arg("--dataset")
        .arg(fixtures().join("dataset.json"))
        .args(["--backend", "scripted"])
        .arg("--script")
        .arg(script);
    cmd
}

/// Relative path -> bytes for every file under `dir`.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

pub fn count_files(dir: &Path) -> usize {
    std::fs::read_dir(dir).map(|d| d.count()).unwrap_or(0)
}
