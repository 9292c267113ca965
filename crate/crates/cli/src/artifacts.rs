//! Output directory: reports, dumps, CSV slices and the manifest.
//!
//! Reports hold only deterministic content. Wall-clock timings go to
//! `manifest.json` alone, so identical config and seed give byte-identical
//! dumps and reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gma_core::io::{write_csv_slice, write_scalar_field, SliceSpec};
use gma_core::ScalarField;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::exit::CliError;

pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
    timings: Vec<(String, f64)>,
    started: Instant,
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

#[derive(Serialize)]
struct Timing<'a> {
    stage: &'a str,
    seconds: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    cli_version: &'static str,
    core_version: &'static str,
    command: &'a str,
    exit_code: u8,
    seed: u64,
    config_sha256: String,
    files: Vec<FileEntry>,
    timings: Vec<Timing<'a>>,
    total_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), timings: Vec::new(), started: Instant::now() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push((stage.to_string(), t.elapsed().as_secs_f64()));
        out
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.path(name), text).map_err(|e| CliError::io(format!("cannot write {name}: {e}")))?;
        self.record(name);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Binary dump plus its JSON sidecar.
    pub fn write_field(&mut self, name: &str, field: &ScalarField, description: &str) -> Result<(), CliError> {
        let stem = name.trim_end_matches(".bin");
        write_scalar_field(&self.path(name), field, stem, description)?;
        self.record(name);
        self.record(&format!("{name}.json"));
        Ok(())
    }

    pub fn write_slice(&mut self, name: &str, field: &ScalarField, slice: &SliceSpec) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write_csv_slice(field, slice, &mut buf)?;
        fs::write(self.path(name), buf).map_err(|e| CliError::io(format!("cannot write {name}: {e}")))?;
        self.record(name);
        Ok(())
    }

    /// The `x₁y₁` and `x₁x₂` planes through the origin.
    pub fn write_standard_slices(&mut self, prefix: &str, field: &ScalarField) -> Result<(), CliError> {
        let grid = field.grid();
        let n = grid.n();
        let fixed = vec![0; grid.dims()];
        self.write_slice(&format!("{prefix}_x1_y1.csv"), field, &SliceSpec::new((0, n), fixed.clone()))?;
        self.write_slice(&format!("{prefix}_x1_x2.csv"), field, &SliceSpec::new((0, 1), fixed))
    }

    pub fn finish(self, command: &str, seed: u64, canonical_config: &str, exit: u8) -> Result<(), CliError> {
        let mut files = Vec::new();
        for name in &self.files {
            let bytes = fs::read(self.path(name)).map_err(|e| CliError::io(format!("cannot hash {name}: {e}")))?;
            files.push(FileEntry { name: name.clone(), sha256: sha256_hex(&bytes) });
        }
        let manifest = Manifest {
            tool: "gma",
            cli_version: env!("CARGO_PKG_VERSION"),
            core_version: gma_core::VERSION,
            command,
            exit_code: exit,
            seed,
            config_sha256: sha256_hex(canonical_config.as_bytes()),
            files,
            timings: self.timings.iter().map(|(s, t)| Timing { stage: s, seconds: *t }).collect(),
            total_seconds: self.started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::io(e.to_string()))?;
        fs::write(self.path("manifest.json"), text + "\n")
            .map_err(|e| CliError::io(format!("cannot write manifest: {e}")))?;
        fs::write(self.path("config.resolved.toml"), canonical_config)
            .map_err(|e| CliError::io(format!("cannot write resolved config: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
