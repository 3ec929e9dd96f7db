//! Filesystem run store: `<root>/<run_id>/{manifest.json, records.jsonl,
//! summary.json}`. Finalized files are made read-only.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use genaiops_core::pipeline::{Run, RunManifest, RunRecord};
use serde::Serialize;

use crate::error::{GateError, Result};
use crate::files::{parse_jsonl, read_text};

pub const MANIFEST: &str = "manifest.json";
pub const RECORDS: &str = "records.jsonl";
pub const SUMMARY: &str = "summary.json";

#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

pub fn new_run_id() -> String {
    ulid::Ulid::new().to_string()
}

pub fn utc_now() -> String {
    humantime::format_rfc3339_millis(SystemTime::now()).to_string()
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> GateError + '_ {
    move |source| GateError::StoreWrite { path: path.into(), source }
}

/// Serializes records one JSON document per line.
pub fn records_jsonl(records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| GateError::Internal(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| GateError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::OpenOptions::new().write(true).create_new(true).open(path).map_err(write_err(path))?;
    f.write_all(contents.as_bytes()).and_then(|_| f.sync_all()).map_err(write_err(path))
}

fn make_read_only(path: &Path) -> Result<()> {
    let mut perms = fs::metadata(path).map_err(write_err(path))?.permissions();
    perms.set_readonly(true);
    fs::set_permissions(path, perms).map_err(write_err(path))
}

/// A run being written. The manifest is on disk before any record.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    manifest: RunManifest,
}

impl RunWriter {
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes the sorted records and summary, then freezes the run.
    pub fn finalize(self, records: Vec<RunRecord>) -> Result<Run> {
        let run = Run::new(self.manifest, records);
        let records_path = self.dir.join(RECORDS);
        write_file(&records_path, &records_jsonl(&run.records)?)?;
        let summary_path = self.dir.join(SUMMARY);
        write_file(&summary_path, &pretty(&run.summary())?)?;
        for p in [self.dir.join(MANIFEST), records_path, summary_path] {
            make_read_only(&p)?;
        }
        Ok(run)
    }
}

impl RunStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join(run_id)
    }

    /// Creates the run directory and writes the manifest.
    pub fn begin(&self, manifest: RunManifest) -> Result<RunWriter> {
        let dir = self.run_dir(&manifest.run_id);
        fs::create_dir_all(&self.root).map_err(write_err(&self.root))?;
        fs::create_dir(&dir).map_err(write_err(&dir))?;
        write_file(&dir.join(MANIFEST), &pretty(&manifest)?)?;
        Ok(RunWriter { dir, manifest })
    }

    /// Loads a run by id, or by directory path when `run` names an existing
    /// directory outside the store.
    pub fn load(&self, run: &str) -> Result<Run> {
        let in_store = self.run_dir(run);
        let dir = if in_store.is_dir() { in_store } else { PathBuf::from(run) };
        if !dir.join(MANIFEST).is_file() {
            return Err(GateError::config(format!("no run `{run}` in {}", self.root.display())));
        }
        load_run_dir(&dir)
    }
}

pub fn load_run_dir(dir: &Path) -> Result<Run> {
    let mpath = dir.join(MANIFEST);
    let manifest: RunManifest = serde_json::from_str(&read_text(&mpath)?).map_err(|e| GateError::parse(&mpath, e))?;
    let rpath = dir.join(RECORDS);
    if !rpath.is_file() {
        return Err(GateError::config(format!("run {} was never finalized", manifest.run_id)));
    }
    let records: Vec<RunRecord> = parse_jsonl(&rpath, &read_text(&rpath)?)?;
    Ok(Run::new(manifest, records))
}
