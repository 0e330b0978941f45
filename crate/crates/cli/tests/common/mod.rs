#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const STAGES: &[&str] = &[
    "ingest",
    "annotate",
    "topics-train",
    "drugs-cluster",
    "diseases-train",
    "kg-export",
    "kg-build",
];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn d4c(artifacts: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_d4c"))
        .arg("--config")
        .arg(fixtures().join("d4c.toml"))
        .arg("--artifacts")
        .arg(artifacts)
        .args(args)
        .output()
        .expect("d4c runs")
}

/// Runs every stage on the fixture corpus, panicking on the first failure.
pub fn build_all(artifacts: &Path) {
    for stage in STAGES {
        let out = d4c(artifacts, &[stage]);
        assert!(
            out.status.success(),
            "{stage} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
