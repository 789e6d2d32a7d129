use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use super::{write_manifest, Manifest, TrainError, TrainJob, TrainerHook};
use crate::data::Instance;
use crate::inference::{ChatModel, Completion, EndpointConfig, InferenceError, ModelFactory, Request, RequestContext};

/// Decides whether a mock student answers an instance correctly.
pub type CorrectnessRule = Arc<dyn Fn(&Instance) -> bool + Send + Sync>;

const URL_PREFIX: &str = "mock://student/";

/// One recorded training call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockTrainerCall {
    pub base_id: String,
    pub train_file_sha256: String,
    pub round: u32,
    pub checkpoint_id: String,
}

/// Trainer hook plus model factory for tests.
///
/// `schedule[0]` governs the untrained student, `schedule[k]` the student
/// produced by the training job of iteration `k`; past the end the last entry
/// repeats. Checkpoint students are served at `mock://student/<round>` and
/// resolve through this type's [`ModelFactory`] impl, so a fresh instance
/// with the same schedule reproduces every student.
#[derive(Clone)]
pub struct MockTrainer {
    schedule: Arc<Vec<CorrectnessRule>>,
    calls: Arc<Mutex<Vec<MockTrainerCall>>>,
    issued: Arc<Mutex<HashMap<String, u32>>>,
    fail_rounds: Arc<Vec<u32>>,
}

impl MockTrainer {
    pub fn new(schedule: Vec<CorrectnessRule>) -> Self {
        assert!(!schedule.is_empty(), "mock trainer schedule needs at least one entry");
        MockTrainer {
            schedule: Arc::new(schedule),
            calls: Arc::default(),
            issued: Arc::default(),
            fail_rounds: Arc::default(),
        }
    }

    /// Make the hook exit with an error for the given rounds.
    pub fn failing_on(mut self, rounds: Vec<u32>) -> Self {
        self.fail_rounds = Arc::new(rounds);
        self
    }

    /// Endpoint of the untrained student.
    pub fn base_endpoint(&self) -> EndpointConfig {
        EndpointConfig::student(format!("{URL_PREFIX}0"), "mock-base")
    }

    pub fn student(&self, round: u32) -> MockStudent {
        let idx = (round as usize).min(self.schedule.len() - 1);
        MockStudent {
            round,
            rule: self.schedule[idx].clone(),
        }
    }

    pub fn calls(&self) -> Vec<MockTrainerCall> {
        self.calls.lock().unwrap().clone()
    }
}

impl TrainerHook for MockTrainer {
    fn invoke(&self, job: &TrainJob) -> Result<(), TrainError> {
        if self.fail_rounds.contains(&job.iteration) {
            return Err(TrainError::HookFailed {
                status: "exit status: 1".into(),
                log_tail: format!("mock trainer configured to fail at round {}", job.iteration),
            });
        }
        let bytes = std::fs::read(&job.train_file)?;
        let digest = hex::encode(Sha256::digest(&bytes));
        let stem = format!("mock-{}-{}", job.iteration, &digest[..8]);
        let checkpoint_id = {
            let mut issued = self.issued.lock().unwrap();
            let n = issued.entry(stem.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                stem
            } else {
                format!("{stem}-r{n}")
            }
        };
        let mut extra = BTreeMap::new();
        extra.insert("epochs".into(), job.epochs.to_string());
        write_manifest(
            &job.out_dir,
            &Manifest {
                checkpoint_id: checkpoint_id.clone(),
                base_url: format!("{URL_PREFIX}{}", job.iteration),
                model_id: checkpoint_id.clone(),
                api_key_env: None,
                extra,
            },
        )?;
        self.calls.lock().unwrap().push(MockTrainerCall {
            base_id: job.base.id.clone(),
            train_file_sha256: digest,
            round: job.iteration,
            checkpoint_id,
        });
        Ok(())
    }

    fn describe(&self) -> String {
        "mock trainer".into()
    }
}

impl ModelFactory for MockTrainer {
    fn connect(&self, endpoint: &EndpointConfig) -> Result<Arc<dyn ChatModel>, InferenceError> {
        let round = endpoint
            .base_url
            .strip_prefix(URL_PREFIX)
            .and_then(|r| r.parse::<u32>().ok())
            .ok_or_else(|| InferenceError::UnknownEndpoint(endpoint.base_url.clone()))?;
        Ok(Arc::new(self.student(round)))
    }
}

/// Student that answers the gold label when its rule says so and the
/// opposite label otherwise.
#[derive(Clone)]
pub struct MockStudent {
    round: u32,
    rule: CorrectnessRule,
}

impl ChatModel for MockStudent {
    fn complete(&self, request: &Request) -> Result<Completion, InferenceError> {
        let RequestContext::Evaluate { instance } = &request.context else {
            return Err(InferenceError::NoRuleMatches(request.prompt.chars().take(80).collect()));
        };
        let label = if (self.rule)(instance) {
            instance.label
        } else {
            instance.label.flipped()
        };
        Ok(Completion {
            text: label.answer().to_string(),
            finish_reason: "stop".into(),
            request_index: 0,
        })
    }

    fn max_in_flight(&self) -> usize {
        8
    }

    fn describe(&self) -> String {
        format!("mock student (round {})", self.round)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Label, Provenance};
    use crate::eval::evaluate_split;
    use crate::trainer::{export_training_file, train, CheckpointRef, TrainerConfig};

    fn difficulty(inst: &Instance) -> u32 {
        inst.extra.get("difficulty").and_then(|v| v.as_u64()).unwrap_or(0) as u32
    }

    fn graded(n: usize) -> Dataset {
        let items = (0..n)
            .map(|i| {
                let mut inst = Instance::new(
                    format!("Case {i} flows."),
                    "flows",
                    if i % 2 == 0 { Label::Metaphor } else { Label::Literal },
                    Provenance::Original {
                        dataset_name: "g".into(),
                        source_index: i as u64,
                    },
                )
                .unwrap();
                inst.extra.insert("difficulty".into(), ((i % 4) as u64).into());
                inst
            })
            .collect();
        Dataset::from_instances("g", items).unwrap()
    }

    fn schedule() -> Vec<CorrectnessRule> {
        (0..4u32)
            .map(|k| Arc::new(move |i: &Instance| difficulty(i) <= k) as CorrectnessRule)
            .collect()
    }

    #[test]
    fn students_improve_along_schedule() {
        let trainer = MockTrainer::new(schedule());
        let data = graded(40);
        let mut previous = 0;
        for round in 0..4 {
            let (report, split) = evaluate_split(&trainer.student(round), &data).unwrap();
            assert!(split.correct.len() > previous || round == 0);
            previous = split.correct.len();
            assert_eq!(report.records.len(), 40);
        }
        assert_eq!(previous, 40);
    }

    #[test]
    fn schedule_clamps() {
        let trainer = MockTrainer::new(schedule());
        let data = graded(8);
        let (_, a) = evaluate_split(&trainer.student(3), &data).unwrap();
        let (_, b) = evaluate_split(&trainer.student(99), &data).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lineage_and_distinct_ids() {
        let dir = tempfile::tempdir().unwrap();
        let trainer = MockTrainer::new(schedule());
        let file = dir.path().join("train.jsonl");
        export_training_file(&graded(4), &file).unwrap();
        let config = TrainerConfig::default();
        let base = CheckpointRef::base(&trainer.base_endpoint());
        let c1 = train(&trainer, &config, &base, &file, &dir.path().join("c1"), 1).unwrap();
        assert_eq!(c1.parent.as_deref(), Some("base"));
        let c2 = train(&trainer, &config, &c1, &file, &dir.path().join("c2"), 1).unwrap();
        assert_eq!(c2.parent.as_deref(), Some(c1.id.as_str()));
        assert_ne!(c1.id, c2.id);
        let calls = trainer.calls();
        assert_eq!(calls.len(), 2);
        assert_eq!(calls[0].train_file_sha256, calls[1].train_file_sha256);
        assert_eq!(calls[1].base_id, c1.id);
        // the checkpoint's endpoint resolves to the round-1 student
        let model = trainer.connect(&c2.serving).unwrap();
        assert_eq!(model.describe(), "mock student (round 1)");
    }
}
