//! Staged output files: everything is written to temporary files in the
//! output directory and renamed into place only once the whole command has
//! succeeded.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

pub struct Outputs {
    dir: PathBuf,
    staged: Vec<(NamedTempFile, PathBuf)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io("write", &dir.to_path_buf(), e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
        })
    }

    fn stage_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let target = self.dir.join(name);
        let mut tmp = NamedTempFile::new_in(&self.dir).map_err(|e| CliError::io("write", &target, e))?;
        tmp.write_all(bytes)
            .and_then(|_| tmp.flush())
            .map_err(|e| CliError::io("write", &target, e))?;
        self.staged.push((tmp, target));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::new("write", e.to_string()))?;
        bytes.push(b'\n');
        self.stage_bytes(name, &bytes)
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::new("write", e.to_string());
        w.write_record(&table.header).map_err(err)?;
        for row in &table.rows {
            w.write_record(row).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::new("write", e.to_string()))?;
        self.stage_bytes(name, &bytes)
    }

    /// Renames every staged file into place. On failure the files already
    /// moved are removed again.
    pub fn commit(self) -> CliResult<Vec<PathBuf>> {
        let mut done: Vec<PathBuf> = Vec::new();
        for (tmp, target) in self.staged {
            if let Err(e) = tmp.persist(&target) {
                for p in &done {
                    let _ = std::fs::remove_file(p);
                }
                return Err(CliError::io("write", &target, e.error));
            }
            done.push(target);
        }
        Ok(done)
    }
}

/// A CSV under construction. Floats are written in their shortest
/// round-trip decimal form.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
