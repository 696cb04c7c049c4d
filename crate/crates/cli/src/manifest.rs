//! Stage manifests: every pipeline stage records what it read, what it
//! wrote (as file name -> SHA-256), the resolved non-path configuration,
//! the seed, and its wall time, then writes `manifest-<stage>.json`
//! atomically as its final act. Two runs of a stage over identical inputs
//! produce identical manifests except for `wall_time_ms`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{names, Settings, FORMAT_VERSION};
use crate::err::{CliError, Result};
use crate::io;

#[derive(Debug, Serialize, Deserialize)]
pub struct StageManifest {
    pub format_version: u32,
    pub stage: String,
    pub tool_version: String,
    pub seed: u64,
    /// Resolved non-path settings the stage ran under.
    pub config: serde_json::Value,
    /// Input file name -> SHA-256 of its content.
    pub inputs: BTreeMap<String, String>,
    /// Output file name -> SHA-256 of its content.
    pub outputs: BTreeMap<String, String>,
    pub wall_time_ms: u64,
}

/// Tracks one stage execution; construct first, route every read and
/// write through it, call [`StageRun::finish`] last.
pub struct StageRun<'a> {
    stage: &'static str,
    settings: &'a Settings,
    started: Instant,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

impl<'a> StageRun<'a> {
    pub fn new(stage: &'static str, settings: &'a Settings) -> StageRun<'a> {
        StageRun {
            stage,
            settings,
            started: Instant::now(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Records an input file's hash. The caller parses the file separately;
    /// a missing file surfaces here as a usage error naming it.
    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes = io::read_input(path)?;
        self.inputs.insert(file_name(path), io::sha256_hex(&bytes));
        Ok(())
    }

    /// Writes an output artifact atomically and records its hash.
    pub fn write_output(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        io::atomic_write(path, bytes)?;
        self.outputs.insert(file_name(path), io::sha256_hex(bytes));
        Ok(())
    }

    /// Writes `manifest-<stage>.json` into the working directory.
    pub fn finish(self) -> Result<()> {
        let manifest = StageManifest {
            format_version: FORMAT_VERSION,
            stage: self.stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.settings.seed,
            config: serde_json::to_value(self.settings.echo())
                .map_err(|e| CliError::Internal(anyhow::anyhow!("echoing settings: {e}")))?,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_time_ms: self.started.elapsed().as_millis() as u64,
        };
        let path = self.settings.artifact(&names::stage_manifest(self.stage));
        io::atomic_write(&path, &io::to_json_pretty(&manifest)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FileConfig;

    #[test]
    fn manifest_records_hashes_and_config() {
        let dir = tempfile::tempdir().unwrap();
        let file = FileConfig::default();
        let settings = Settings::resolve(file, Some(9), Some(dir.path().to_path_buf())).unwrap();

        let input_path = dir.path().join("input.jsonl");
        std::fs::write(&input_path, b"{}\n").unwrap();

        let mut run = StageRun::new("demo", &settings);
        run.record_input(&input_path).unwrap();
        run.write_output(&dir.path().join("out.json"), b"[1,2]\n")
            .unwrap();
        run.finish().unwrap();

        let manifest_path = dir.path().join("manifest-demo.json");
        let text = std::fs::read_to_string(&manifest_path).unwrap();
        let m: StageManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(m.stage, "demo");
        assert_eq!(m.seed, 9);
        assert_eq!(m.inputs["input.jsonl"], io::sha256_hex(b"{}\n"));
        assert_eq!(m.outputs["out.json"], io::sha256_hex(b"[1,2]\n"));
        assert_eq!(m.config["seed"], 9);
        // Names only, never paths: keys must not contain separators.
        assert!(m.inputs.keys().all(|k| !k.contains('/')));
    }

    #[test]
    fn missing_input_fails_before_any_output() {
        let dir = tempfile::tempdir().unwrap();
        let settings =
            Settings::resolve(FileConfig::default(), None, Some(dir.path().to_path_buf())).unwrap();
        let mut run = StageRun::new("demo", &settings);
        let err = run
            .record_input(&dir.path().join("absent.jsonl"))
            .unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }
}
