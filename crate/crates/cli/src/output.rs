//! Report files. Every run writes into a directory whose name is derived
//! from a hash of its configuration, so equal configurations land in the same
//! place and overwrite each other with identical bytes.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// First 12 hex digits of the SHA-256 of the JSON encoding of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configuration serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

pub struct RunDir {
    path: PathBuf,
    files: Vec<PathBuf>,
}

impl RunDir {
    pub fn create<T: Serialize>(out: &Path, command: &str, config: &T) -> CliResult<Self> {
        let path = out.join(format!("{command}-{}", config_hash(config)));
        std::fs::create_dir_all(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(Self {
            path,
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<PathBuf> {
        let file = self.path.join(name);
        std::fs::write(&file, text).map_err(|e| CliError::io(&file, e))?;
        self.files.push(file.clone());
        Ok(file)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Config(format!("cannot encode {name}: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let file = self.path.join(name);
        let io = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(err) => CliError::io(&file, err),
            other => CliError::Config(format!("{}: {other:?}", file.display())),
        };
        let mut w = csv::Writer::from_path(&file).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&file, e))?;
        self.files.push(file.clone());
        Ok(file)
    }

    pub fn into_files(self) -> (PathBuf, Vec<PathBuf>) {
        (self.path, self.files)
    }
}

/// Header `E,beta_0..beta_n,cells_0..cells_n,field,resolution,wall_ms`.
pub fn scan_header(n: usize) -> Vec<String> {
    let mut h = vec!["E".to_string()];
    h.extend((0..=n).map(|d| format!("beta_{d}")));
    h.extend((0..=n).map(|d| format!("cells_{d}")));
    h.extend(["field", "resolution", "wall_ms"].map(String::from));
    h
}

pub fn resolution_label(shape: &[usize]) -> String {
    shape.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("x")
}
