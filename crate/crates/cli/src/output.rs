//! Output directory handling and run manifests. Every command writes its files
//! through [`Output`], which hashes each one so a replay can prove it
//! reproduced them byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;

/// The only environment variable the tool reads.
pub const OUT_ENV: &str = "CVARBOUND_OUT";
const DEFAULT_OUT: &str = "cvarbound-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    /// SHA-256 of the parsed command configuration as JSON.
    pub config_hash: String,
    pub seed: Option<u64>,
    /// File name to SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(command: &Command) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(command)?.as_bytes()))
}

pub fn resolve_out(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn manifest_name(command: &str) -> String {
    format!("{command}.manifest.json")
}

pub struct Output {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("--out: cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("--out: cannot write {}", path.display()))?;
        self.files
            .insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes `<command>.manifest.json` beside the outputs.
    pub fn finish(self, command: &Command, args: Vec<String>) -> Result<Manifest> {
        let manifest = Manifest {
            tool: env!("CARGO_BIN_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.name().to_string(),
            args,
            config_hash: config_hash(command)?,
            seed: command.seed(),
            outputs: self.files,
        };
        let path = self.dir.join(manifest_name(command.name()));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text)
            .with_context(|| format!("--out: cannot write {}", path.display()))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::{Command, MinLf};

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn config_hash_tracks_arguments() {
        let a = config_hash(&Command::MinLf(MinLf { p: 3, n: None })).unwrap();
        let b = config_hash(&Command::MinLf(MinLf { p: 3, n: None })).unwrap();
        let c = config_hash(&Command::MinLf(MinLf { p: 4, n: None })).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn manifest_lists_every_output() {
        let dir = std::env::temp_dir().join(format!("cvarbound-output-{}", std::process::id()));
        let mut out = Output::create(&dir).unwrap();
        out.write("a.txt", "x").unwrap();
        out.write_json("b.json", &[1, 2]).unwrap();
        let m = out
            .finish(
                &Command::MinLf(MinLf { p: 1, n: None }),
                vec!["min-lf".into()],
            )
            .unwrap();
        assert_eq!(m.outputs.len(), 2);
        assert_eq!(m.outputs["a.txt"], sha256_hex(b"x"));
        let stored: Manifest = serde_json::from_str(
            &std::fs::read_to_string(dir.join("min-lf.manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(stored, m);
        std::fs::remove_dir_all(dir).ok();
    }
}
