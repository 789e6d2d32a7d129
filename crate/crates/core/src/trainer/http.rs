use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{TrainError, TrainJob, TrainerHook};

/// Submits training jobs to an HTTP job service and polls until they finish.
///
/// `POST {url}/jobs` with the job fields returns `{"job_id": ...}`;
/// `GET {url}/jobs/{job_id}` returns `{"status": "queued" | "running" |
/// "completed" | "failed", "log": ...}`.
#[derive(Debug, Clone)]
pub struct HttpHook {
    url: String,
    poll_interval: Duration,
    timeout: Duration,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct Submit<'a> {
    train_file: String,
    base: &'a str,
    base_id: &'a str,
    out_dir: String,
    epochs: u32,
    iteration: u32,
    passthrough: &'a BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct Submitted {
    job_id: String,
}

#[derive(Deserialize)]
struct JobStatus {
    status: String,
    #[serde(default)]
    log: Option<String>,
}

impl HttpHook {
    pub fn new(url: impl Into<String>, poll_interval: Duration, timeout: Duration) -> Self {
        HttpHook {
            url: url.into().trim_end_matches('/').to_string(),
            poll_interval,
            timeout,
            client: reqwest::blocking::Client::new(),
        }
    }

    fn failed(status: impl Into<String>, log: impl Into<String>) -> TrainError {
        TrainError::HookFailed {
            status: status.into(),
            log_tail: log.into(),
        }
    }

    fn get_json<T: for<'de> Deserialize<'de>>(&self, resp: reqwest::Result<reqwest::blocking::Response>) -> Result<T, TrainError> {
        let resp = resp.map_err(|e| Self::failed("transport error", e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| Self::failed("transport error", e.to_string()))?;
        if !status.is_success() {
            return Err(Self::failed(format!("HTTP {}", status.as_u16()), body));
        }
        serde_json::from_str(&body).map_err(|e| Self::failed("bad response", format!("{e}: {body}")))
    }
}

impl TrainerHook for HttpHook {
    fn invoke(&self, job: &TrainJob) -> Result<(), TrainError> {
        let submit = Submit {
            train_file: job.train_file.display().to_string(),
            base: &job.base.location,
            base_id: &job.base.id,
            out_dir: job.out_dir.display().to_string(),
            epochs: job.epochs,
            iteration: job.iteration,
            passthrough: &job.passthrough,
        };
        let submitted: Submitted = self.get_json(self.client.post(format!("{}/jobs", self.url)).json(&submit).send())?;
        let start = Instant::now();
        loop {
            let status: JobStatus =
                self.get_json(self.client.get(format!("{}/jobs/{}", self.url, submitted.job_id)).send())?;
            match status.status.as_str() {
                "completed" => return Ok(()),
                "failed" => return Err(Self::failed("job failed", status.log.unwrap_or_default())),
                _ if start.elapsed() >= self.timeout => {
                    return Err(Self::failed("timed out", format!("job {} still {}", submitted.job_id, status.status)))
                }
                _ => std::thread::sleep(self.poll_interval),
            }
        }
    }

    fn describe(&self) -> String {
        format!("http {}", self.url)
    }
}
