use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{PipelineError, RunState};
use crate::data::{read_dataset, write_dataset, Dataset};
use crate::fsutil;

const STATE_FILE: &str = "state.json";
const TIMING_FILE: &str = "timing.jsonl";

/// Layout of a run directory. Every file except `timing.jsonl` is written
/// atomically and is a pure function of the config and the inputs.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

#[derive(Serialize)]
struct TimingLine<'a> {
    stage: &'a str,
    millis: u128,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn iter_rel(n: u32, file: &str) -> String {
        format!("iter_{n}/{file}")
    }

    pub fn checkpoint_rel(n: u32) -> String {
        format!("checkpoints/iter_{n}")
    }

    pub fn has_state(&self) -> bool {
        self.path(STATE_FILE).is_file()
    }

    /// True when the directory is missing or has no entries.
    pub fn is_fresh(&self) -> std::io::Result<bool> {
        match std::fs::read_dir(&self.root) {
            Ok(mut entries) => Ok(entries.next().is_none()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(true),
            Err(e) => Err(e),
        }
    }

    pub fn load_state(&self) -> Result<RunState, PipelineError> {
        if !self.has_state() {
            return Err(PipelineError::NotARunDir(self.root.clone()));
        }
        Ok(fsutil::read_json(&self.path(STATE_FILE))?)
    }

    /// Commits a stage: the checkpoint lineage mirror first, then state.
    pub fn save_state(&self, state: &RunState) -> Result<(), PipelineError> {
        fsutil::write_json_atomic(&self.path("checkpoints.json"), &state.checkpoints)?;
        fsutil::write_json_atomic(&self.path(STATE_FILE), state)?;
        Ok(())
    }

    pub fn write_dataset(&self, rel: &str, dataset: &Dataset) -> Result<usize, PipelineError> {
        Ok(write_dataset(&self.path(rel), dataset)?)
    }

    pub fn read_dataset(&self, rel: &str, name: &str) -> Result<Dataset, PipelineError> {
        Ok(read_dataset(&self.path(rel), name)?)
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<(), PipelineError> {
        Ok(fsutil::write_json_atomic(&self.path(rel), value)?)
    }

    pub fn write_jsonl<T: Serialize>(&self, rel: &str, records: &[T]) -> Result<(), PipelineError> {
        crate::data::write_jsonl(&self.path(rel), records)?;
        Ok(())
    }

    /// Appends wall-clock telemetry. Not part of the reproducible output.
    pub fn record_timing(&self, stage: &str, millis: u128) {
        let line = serde_json::to_string(&TimingLine { stage, millis }).expect("timing line serializes");
        let result = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.path(TIMING_FILE))
            .and_then(|mut f| writeln!(f, "{line}"));
        if let Err(e) = result {
            tracing::warn!(error = %e, "could not record stage timing");
        }
    }

    /// Relative paths of every file in the run directory except telemetry,
    /// sorted. Used to compare two runs byte for byte.
    pub fn artifact_files(&self) -> std::io::Result<Vec<String>> {
        let mut out = Vec::new();
        let mut stack = vec![self.root.clone()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir)? {
                let path = entry?.path();
                if path.is_dir() {
                    stack.push(path);
                    continue;
                }
                let rel = path
                    .strip_prefix(&self.root)
                    .expect("walk stays under root")
                    .to_string_lossy()
                    .replace('\\', "/");
                if rel != TIMING_FILE {
                    out.push(rel);
                }
            }
        }
        out.sort();
        Ok(out)
    }
}
