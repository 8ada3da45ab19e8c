//! Artifact writers. Everything here is formatted deterministically; wall
//! times go to their own file so the rest stays byte-reproducible.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qsci_core::sampler::TraceRecord;
use serde::Serialize;

use crate::checkpoint::Pt2Snapshot;
use crate::{io_error, HarnessError, Result};

pub const TRACE_FILE: &str = "trace.csv";
pub const RESULT_FILE: &str = "result.json";
pub const PT2_FILE: &str = "pt2.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const COMPACTNESS_FILE: &str = "compactness.csv";
pub const MEASUREMENTS_DIR: &str = "measurements";
pub const ERROR_FILE: &str = "error.json";
pub const MANIFEST_FILE: &str = "MANIFEST";

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from("row,outer,step,round,stage,dim,energy,delta\n");
    for (i, r) in trace.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{}",
            r.outer,
            r.step,
            r.round,
            r.stage.as_str(),
            r.dim,
            r.energy,
            r.delta
        )
        .unwrap();
    }
    out
}

pub fn pt2_csv(snapshots: &[Pt2Snapshot]) -> String {
    let mut out = String::from("outer,trace_row,dim,energy,pt2,energy_plus_pt2,n_external,intruders\n");
    for s in snapshots {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.outer,
            s.trace_row,
            s.dim,
            s.energy,
            s.correction,
            s.energy + s.correction,
            s.n_external,
            s.intruders
        )
        .unwrap();
    }
    out
}

/// Optional float as a CSV cell.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_error(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::Config(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

/// Files written into an output directory, for the MANIFEST.
#[derive(Debug)]
pub struct Manifest {
    dir: PathBuf,
    files: Vec<String>,
}

impl Manifest {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        write_text(&self.path(name), text)?;
        self.record(name);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.path(name), value)?;
        self.record(name);
        Ok(())
    }

    /// `complete` is false when a stage failed or the run was stopped early.
    pub fn finish(&self, status: &str) -> Result<()> {
        let mut text = format!("status: {status}\nfiles:\n");
        for f in &self.files {
            writeln!(text, "  {f}").unwrap();
        }
        write_text(&self.path(MANIFEST_FILE), &text)
    }

    /// Record `err` in error.json and mark the directory incomplete.
    pub fn fail(&mut self, err: &HarnessError) {
        let record = serde_json::json!({
            "kind": err.kind(),
            "message": err.to_string(),
            "exit_code": err.exit_code(),
        });
        // best effort: the original error is what gets reported
        if self.write_json(ERROR_FILE, &record).is_ok() {
            let _ = self.finish("incomplete");
        }
    }
}
