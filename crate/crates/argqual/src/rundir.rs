//! Run directories: every subcommand leaves a config echo, input digests,
//! its outputs and a manifest tying them together.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::fsutil::{atomic_write, sha256_file, sha256_hex, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, FileDigest>,
    /// Output file names relative to the run directory.
    pub outputs: BTreeMap<String, String>,
    pub created_unix: u64,
}

#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    command: String,
    argv: Vec<String>,
    config_sha256: String,
    inputs: BTreeMap<String, FileDigest>,
    outputs: BTreeMap<String, String>,
}

impl RunDir {
    /// Creates `root` and echoes the resolved configuration into it.
    pub fn create(root: &Path, command: &str, argv: Vec<String>, config: &RunConfig) -> Result<Self> {
        let mut text = serde_json::to_string_pretty(config)?;
        text.push('\n');
        atomic_write(&root.join("config.json"), text.as_bytes())?;
        Ok(RunDir {
            root: root.to_path_buf(),
            command: command.into(),
            argv,
            config_sha256: sha256_hex(text.as_bytes()),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn add_input(&mut self, role: &str, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.inputs.insert(
            role.into(),
            FileDigest {
                path: path.to_path_buf(),
                sha256,
            },
        );
        Ok(())
    }

    /// Records an output already written under the run directory.
    pub fn add_output(&mut self, name: &str) -> Result<()> {
        let digest = sha256_file(&self.root.join(name))?;
        self.outputs.insert(name.into(), digest);
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        atomic_write(&self.root.join(name), bytes)?;
        self.outputs.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.root.join(name), value)?;
        self.add_output(name)
    }

    /// Writes `inputs.json` and `manifest.json`.
    pub fn finish(self) -> Result<Manifest> {
        write_json(&self.root.join("inputs.json"), &self.inputs)?;
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command,
            argv: self.argv,
            config_sha256: self.config_sha256,
            inputs: self.inputs,
            outputs: self.outputs,
            created_unix,
        };
        write_json(&self.root.join("manifest.json"), &manifest)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_everything() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        std::fs::write(&input, "abc").unwrap();
        let root = dir.path().join("run");
        let mut run = RunDir::create(&root, "test", vec!["argqual".into()], &RunConfig::default()).unwrap();
        run.add_input("data", &input).unwrap();
        run.write("out.txt", b"hello").unwrap();
        let m = run.finish().unwrap();
        assert_eq!(m.inputs["data"].sha256, sha256_hex(b"abc"));
        assert_eq!(m.outputs["out.txt"], sha256_hex(b"hello"));
        for f in ["config.json", "inputs.json", "manifest.json", "out.txt"] {
            assert!(root.join(f).exists(), "{f}");
        }
        let echoed: RunConfig = crate::fsutil::read_json(&root.join("config.json")).unwrap();
        assert_eq!(echoed, RunConfig::default());
    }
}
