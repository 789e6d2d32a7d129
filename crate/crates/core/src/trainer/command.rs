use std::process::Command;

use super::{TrainError, TrainJob, TrainerHook};

const LOG_TAIL: usize = 2_000;

/// Runs an external command per training job.
///
/// The template is split shell-style, then `{train_file}`, `{base}`,
/// `{base_id}`, `{out_dir}`, `{epochs}` and `{iteration}` are substituted in
/// each argument. `TRAINER_EPOCHS` and `TRAINER_OPT_<KEY>` carry the epoch
/// count and passthrough map. Exit status 0 means success.
#[derive(Debug, Clone)]
pub struct CommandHook {
    template: String,
}

impl CommandHook {
    pub fn new(template: impl Into<String>) -> Self {
        CommandHook {
            template: template.into(),
        }
    }

    pub fn argv(&self, job: &TrainJob) -> Result<Vec<String>, TrainError> {
        let parts = shlex::split(&self.template)
            .filter(|p| !p.is_empty())
            .ok_or_else(|| TrainError::InvalidConfig(format!("cannot parse command template {:?}", self.template)))?;
        let train_file = job.train_file.display().to_string();
        let out_dir = job.out_dir.display().to_string();
        Ok(parts
            .into_iter()
            .map(|p| {
                p.replace("{train_file}", &train_file)
                    .replace("{base_id}", &job.base.id)
                    .replace("{base}", &job.base.location)
                    .replace("{out_dir}", &out_dir)
                    .replace("{epochs}", &job.epochs.to_string())
                    .replace("{iteration}", &job.iteration.to_string())
            })
            .collect())
    }
}

/// `TRAINER_OPT_` plus the key uppercased, with non-alphanumerics as `_`.
pub(crate) fn env_key(key: &str) -> String {
    let cleaned: String = key
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    format!("TRAINER_OPT_{cleaned}")
}

fn tail(bytes: &[u8]) -> String {
    let text = String::from_utf8_lossy(bytes);
    let skip = text.chars().count().saturating_sub(LOG_TAIL);
    text.chars().skip(skip).collect()
}

impl TrainerHook for CommandHook {
    fn invoke(&self, job: &TrainJob) -> Result<(), TrainError> {
        let argv = self.argv(job)?;
        let mut cmd = Command::new(&argv[0]);
        cmd.args(&argv[1..]).env("TRAINER_EPOCHS", job.epochs.to_string());
        for (k, v) in &job.passthrough {
            cmd.env(env_key(k), v);
        }
        let output = cmd.output().map_err(|e| TrainError::HookFailed {
            status: format!("spawn failed: {e}"),
            log_tail: String::new(),
        })?;
        if !output.status.success() {
            let mut log = output.stdout.clone();
            log.extend_from_slice(&output.stderr);
            return Err(TrainError::HookFailed {
                status: output.status.to_string(),
                log_tail: tail(&log),
            });
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!("command `{}`", self.template)
    }
}
