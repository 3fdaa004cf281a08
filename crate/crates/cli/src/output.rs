//! Artifact writers. Every JSON record carries the configuration hash and
//! the artifact version; CSV numbers use 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Formats `x` with 17 significant digits in scientific notation. The
/// output never depends on the locale.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// SHA-256 of the configuration bytes, hex encoded.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct Stamped<'a, R> {
    config_hash: &'a str,
    artifact_version: &'a str,
    #[serde(flatten)]
    record: R,
}

#[derive(Serialize)]
struct Document<'a, R> {
    command: &'a str,
    config_hash: &'a str,
    artifact_version: &'a str,
    seed: u64,
    records: Vec<Stamped<'a, R>>,
}

pub struct Emitter {
    dir: PathBuf,
    hash: String,
    seed: u64,
    written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, hash: String, seed: u64) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            hash,
            seed,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    pub fn json<R: Serialize>(&mut self, name: &str, command: &str, records: Vec<R>) -> Result<(), CliError> {
        let doc = Document {
            command,
            config_hash: &self.hash,
            artifact_version: twistube::VERSION,
            seed: self.seed,
            records: records
                .into_iter()
                .map(|record| Stamped {
                    config_hash: &self.hash,
                    artifact_version: twistube::VERSION,
                    record,
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn binary(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.write(name, bytes)
    }
}
