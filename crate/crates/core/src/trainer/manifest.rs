use std::collections::BTreeMap;
use std::path::Path;

use super::TrainError;
use crate::fsutil;

/// File a hook writes into its output directory when training is done.
pub const MANIFEST_FILE: &str = "manifest.txt";

/// `key=value` lines. `checkpoint_id`, `base_url` and `model_id` are required;
/// `api_key_env` is optional; any other key is kept as metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub checkpoint_id: String,
    pub base_url: String,
    pub model_id: String,
    pub api_key_env: Option<String>,
    pub extra: BTreeMap<String, String>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, TrainError> {
        let mut fields = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| TrainError::ManifestMalformed(format!("line {}: expected key=value", n + 1)))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |key: &str| {
            fields
                .remove(key)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| TrainError::ManifestMalformed(format!("missing {key}")))
        };
        let checkpoint_id = take("checkpoint_id")?;
        let base_url = take("base_url")?;
        let model_id = take("model_id")?;
        let api_key_env = fields.remove("api_key_env").filter(|v| !v.is_empty());
        Ok(Manifest {
            checkpoint_id,
            base_url,
            model_id,
            api_key_env,
            extra: fields,
        })
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "checkpoint_id={}\nbase_url={}\nmodel_id={}\n",
            self.checkpoint_id, self.base_url, self.model_id
        );
        if let Some(env) = &self.api_key_env {
            out.push_str(&format!("api_key_env={env}\n"));
        }
        for (k, v) in &self.extra {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest, TrainError> {
    Manifest::parse(&std::fs::read_to_string(path)?)
}

pub fn write_manifest(out_dir: &Path, manifest: &Manifest) -> Result<(), TrainError> {
    fsutil::write_atomic(&out_dir.join(MANIFEST_FILE), manifest.render().as_bytes())?;
    Ok(())
}
