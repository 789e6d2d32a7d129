//! Contract between the pipeline and a fine-tuning backend.
//!
//! The gateway exports an instruction-tuning file, hands it to a hook (an
//! external command, an HTTP job service, or the in-process mock), and reads
//! back the manifest the hook leaves in its output directory. Nothing else
//! about the trained model is visible to the pipeline.

mod command;
mod http;
mod manifest;
mod mock;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::{render_qa, DataError, Dataset, QaRecord};
use crate::inference::EndpointConfig;

pub use command::CommandHook;
pub use http::HttpHook;
pub use manifest::{read_manifest, write_manifest, Manifest, MANIFEST_FILE};
pub use mock::{CorrectnessRule, MockStudent, MockTrainer, MockTrainerCall};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("refusing to export an empty training set")]
    EmptyTrainingSet,
    #[error("training file {0} is missing or empty")]
    MissingTrainFile(PathBuf),
    #[error("trainer hook failed ({status}): {log_tail}")]
    HookFailed { status: String, log_tail: String },
    #[error("no manifest at {path} after {waited_ms} ms")]
    ManifestMissing { path: PathBuf, waited_ms: u64 },
    #[error("malformed manifest: {0}")]
    ManifestMalformed(String),
    #[error("invalid trainer config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the gateway reaches the trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HookSpec {
    /// Argv template with `{train_file}`, `{base}` and `{out_dir}` placeholders.
    Command { template: String },
    /// Job service accepting `POST {url}/jobs` and `GET {url}/jobs/{id}`.
    Http {
        url: String,
        #[serde(default = "default_poll_ms")]
        poll_interval_ms: u64,
        #[serde(default = "default_job_timeout_ms")]
        timeout_ms: u64,
    },
    /// In-process mock; only usable from code, not from a config file.
    Mock,
}

fn default_poll_ms() -> u64 {
    1_000
}

fn default_job_timeout_ms() -> u64 {
    24 * 3600 * 1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub hook: HookSpec,
    pub epochs: u32,
    /// Trainer-specific settings, forwarded untouched.
    pub passthrough: BTreeMap<String, String>,
    /// Parent directory for checkpoint output; defaults to the run directory.
    pub work_dir: Option<PathBuf>,
    /// How long to wait for the manifest after the hook returns.
    pub manifest_timeout_ms: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        let passthrough = [
            ("adapter_rank", "8"),
            ("adapter_alpha", "16"),
            ("learning_rate", "2e-4"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        TrainerConfig {
            hook: HookSpec::Mock,
            epochs: 3,
            passthrough,
            work_dir: None,
            manifest_timeout_ms: 30_000,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1".into()));
        }
        if let HookSpec::Command { template } = &self.hook {
            for p in ["{train_file}", "{base}", "{out_dir}"] {
                if !template.contains(p) {
                    return Err(TrainError::InvalidConfig(format!("command template lacks {p}")));
                }
            }
        }
        Ok(())
    }
}

/// Handle to a model produced (or used as a starting point) by training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRef {
    pub id: String,
    /// Path or URL the trainer can resolve as a base for further training.
    pub location: String,
    pub parent: Option<String>,
    pub serving: EndpointConfig,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

pub const BASE_CHECKPOINT_ID: &str = "base";

impl CheckpointRef {
    /// The untrained student, root of every lineage.
    pub fn base(serving: &EndpointConfig) -> Self {
        CheckpointRef {
            id: BASE_CHECKPOINT_ID.into(),
            location: serving.model_id.clone(),
            parent: None,
            serving: serving.clone(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn is_base(&self) -> bool {
        self.parent.is_none()
    }
}

/// Everything a hook is told about one training job.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainJob {
    pub base: CheckpointRef,
    pub train_file: PathBuf,
    pub out_dir: PathBuf,
    pub iteration: u32,
    pub epochs: u32,
    pub passthrough: BTreeMap<String, String>,
}

pub trait TrainerHook: Send + Sync {
    /// Starts the job and returns once the hook reports completion.
    fn invoke(&self, job: &TrainJob) -> Result<(), TrainError>;

    fn describe(&self) -> String;
}

/// Builds the hook a config file describes. The mock hook needs a schedule
/// and can only be constructed in code.
pub fn hook_from_spec(spec: &HookSpec) -> Result<Arc<dyn TrainerHook>, TrainError> {
    match spec {
        HookSpec::Command { template } => Ok(Arc::new(CommandHook::new(template.clone()))),
        HookSpec::Http {
            url,
            poll_interval_ms,
            timeout_ms,
        } => Ok(Arc::new(HttpHook::new(
            url.clone(),
            Duration::from_millis(*poll_interval_ms),
            Duration::from_millis(*timeout_ms),
        ))),
        HookSpec::Mock => Err(TrainError::InvalidConfig(
            "the mock trainer hook cannot be selected from a config file; use kind = \"command\" or \"http\"".into(),
        )),
    }
}

/// Writes one QA record per instance, in dataset order.
pub fn export_training_file(dataset: &Dataset, path: &Path) -> Result<usize, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let records: Vec<QaRecord> = dataset.iter().map(render_qa).collect();
    Ok(crate::data::write_jsonl(path, &records)?)
}

/// Runs one training job through `hook` and returns the resulting checkpoint,
/// whose parent is `base`.
pub fn train(
    hook: &dyn TrainerHook,
    config: &TrainerConfig,
    base: &CheckpointRef,
    train_file: &Path,
    out_dir: &Path,
    iteration: u32,
) -> Result<CheckpointRef, TrainError> {
    config.validate()?;
    let non_empty = std::fs::metadata(train_file).map(|m| m.len() > 0).unwrap_or(false);
    if !non_empty {
        return Err(TrainError::MissingTrainFile(train_file.to_path_buf()));
    }
    std::fs::create_dir_all(out_dir)?;
    let job = TrainJob {
        base: base.clone(),
        train_file: train_file.to_path_buf(),
        out_dir: out_dir.to_path_buf(),
        iteration,
        epochs: config.epochs,
        passthrough: config.passthrough.clone(),
    };
    tracing::info!(hook = %hook.describe(), iteration, base = %base.id, "starting training job");
    hook.invoke(&job)?;
    let manifest = wait_for_manifest(out_dir, Duration::from_millis(config.manifest_timeout_ms))?;
    let mut serving = base.serving.clone();
    serving.base_url = manifest.base_url.clone();
    serving.model_id = manifest.model_id.clone();
    if manifest.api_key_env.is_some() {
        serving.api_key_env = manifest.api_key_env.clone();
    }
    Ok(CheckpointRef {
        id: manifest.checkpoint_id,
        location: out_dir.display().to_string(),
        parent: Some(base.id.clone()),
        serving,
        metadata: manifest.extra,
    })
}

fn wait_for_manifest(out_dir: &Path, timeout: Duration) -> Result<Manifest, TrainError> {
    let path = out_dir.join(MANIFEST_FILE);
    let start = Instant::now();
    loop {
        if path.is_file() {
            return read_manifest(&path);
        }
        if start.elapsed() >= timeout {
            return Err(TrainError::ManifestMissing {
                path,
                waited_ms: start.elapsed().as_millis() as u64,
            });
        }
        std::thread::sleep(Duration::from_millis(50).min(timeout));
    }
}
