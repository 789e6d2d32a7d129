use serde::{Deserialize, Deserializer, Serialize};

use crate::augment::{AugMethod, MethodFamily};
use crate::inference::EndpointConfig;
use crate::trainer::TrainerConfig;

use super::PipelineError;

/// Which instances the student is fine-tuned on each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainOn {
    Correct,
    All,
}

/// Which instances seed the teacher's augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentSeed {
    Wrong,
    All,
}

/// What the next iteration's dataset is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NextData {
    Merged,
    AugmentedOnly,
}

/// Starting point of each fine-tuning job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinetuneMode {
    Continuous,
    FromScratch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    /// Seed for drawing the balanced training set from the filtered pool.
    pub sampling: u64,
    /// Master seed for test sampling; trial `t` uses `test + t`.
    pub test: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { sampling: 42, test: 42 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleSizes {
    pub train_per_class: usize,
    pub test_per_class: usize,
}

impl Default for SampleSizes {
    fn default() -> Self {
        SampleSizes {
            train_per_class: 3000,
            test_per_class: 150,
        }
    }
}

/// Every switch of the curriculum loop. Defaults give the main configuration;
/// each ablation flips exactly one field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub iterations: u32,
    pub train_on: TrainOn,
    pub augment_seed: AugmentSeed,
    pub next_data: NextData,
    pub finetune_mode: FinetuneMode,
    pub methods: Vec<AugMethod>,
    #[serde(deserialize_with = "teacher_endpoint")]
    pub teacher: EndpointConfig,
    #[serde(deserialize_with = "student_endpoint")]
    pub student_base: EndpointConfig,
    pub trainer: TrainerConfig,
    pub seeds: Seeds,
    pub sample: SampleSizes,
    pub retries_per_generation: u32,
    /// Evaluate the raw pool with the teacher and keep only what it gets right.
    pub filter_initial: bool,
    /// End the run early once the student makes no mistakes on its data.
    pub stop_when_no_wrong: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            iterations: 3,
            train_on: TrainOn::Correct,
            augment_seed: AugmentSeed::Wrong,
            next_data: NextData::Merged,
            finetune_mode: FinetuneMode::Continuous,
            methods: AugMethod::ALL.to_vec(),
            teacher: EndpointConfig::teacher("https://api.openai.com/v1", "gpt-4o-2024-08-06"),
            student_base: EndpointConfig::student("http://localhost:8000/v1", "meta-llama/Llama-3.1-8B-Instruct"),
            trainer: TrainerConfig::default(),
            seeds: Seeds::default(),
            sample: SampleSizes::default(),
            retries_per_generation: 2,
            filter_initial: true,
            stop_when_no_wrong: false,
        }
    }
}

/// One-field departures from the default configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    TrainOnAll,
    AugmentAll,
    AugmentedOnly,
    FromScratch,
    WithoutFamily(MethodFamily),
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one augmentation method must be enabled".into());
        }
        if self.sample.train_per_class == 0 {
            return bad("sample.train_per_class must be positive".into());
        }
        self.teacher.validate().map_err(|e| PipelineError::Config(format!("teacher: {e}")))?;
        self.student_base
            .validate()
            .map_err(|e| PipelineError::Config(format!("student_base: {e}")))?;
        self.trainer.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn ablate(mut self, ablation: Ablation) -> Self {
        match ablation {
            Ablation::TrainOnAll => self.train_on = TrainOn::All,
            Ablation::AugmentAll => self.augment_seed = AugmentSeed::All,
            Ablation::AugmentedOnly => self.next_data = NextData::AugmentedOnly,
            Ablation::FromScratch => self.finetune_mode = FinetuneMode::FromScratch,
            Ablation::WithoutFamily(family) => {
                let drop = AugMethod::of_family(family);
                self.methods.retain(|m| !drop.contains(m));
            }
        }
        self
    }

    /// Parses a TOML config, applying `key.path=value` overrides first.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, PipelineError> {
        let mut value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: RunConfig = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

/// Sets `a.b.c=value` in a TOML table. The value is read as a TOML literal
/// when it parses as one, otherwise as a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), PipelineError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| PipelineError::Config(format!("override {spec:?} is not key=value")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields at least one item");
    let mut cur = table;
    for key in parents {
        let entry = cur
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| PipelineError::Config(format!("override path {path:?} crosses non-table {key:?}")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn overlay<'de, D: Deserializer<'de>>(d: D, base: EndpointConfig) -> Result<EndpointConfig, D::Error> {
    use serde::de::Error;
    let patch = serde_json::Value::deserialize(d)?;
    let mut merged = serde_json::to_value(&base).map_err(D::Error::custom)?;
    match (merged.as_object_mut(), patch) {
        (Some(m), serde_json::Value::Object(p)) => m.extend(p),
        (_, other) => return Err(D::Error::custom(format!("endpoint must be a table, got {other}"))),
    }
    serde_json::from_value(merged).map_err(D::Error::custom)
}

/// Missing teacher fields take teacher defaults (sampled decoding).
fn teacher_endpoint<'de, D: Deserializer<'de>>(d: D) -> Result<EndpointConfig, D::Error> {
    overlay(d, RunConfig::default().teacher)
}

/// Missing student fields take student defaults (greedy decoding).
fn student_endpoint<'de, D: Deserializer<'de>>(d: D) -> Result<EndpointConfig, D::Error> {
    overlay(d, RunConfig::default().student_base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::HookSpec;

    #[test]
    fn defaults_match_main_configuration() {
        let c = RunConfig::default();
        assert_eq!(c.iterations, 3);
        assert_eq!(c.train_on, TrainOn::Correct);
        assert_eq!(c.augment_seed, AugmentSeed::Wrong);
        assert_eq!(c.next_data, NextData::Merged);
        assert_eq!(c.finetune_mode, FinetuneMode::Continuous);
        assert_eq!(c.methods.len(), 6);
        assert_eq!(c.sample.train_per_class, 3000);
        assert_eq!(c.sample.test_per_class, 150);
        assert_eq!(c.retries_per_generation, 2);
        assert_eq!(c.trainer.epochs, 3);
    }

    #[test]
    fn each_ablation_flips_one_field() {
        let base = serde_json::to_value(RunConfig::default()).unwrap();
        let cases = [
            (Ablation::TrainOnAll, "train_on"),
            (Ablation::AugmentAll, "augment_seed"),
            (Ablation::AugmentedOnly, "next_data"),
            (Ablation::FromScratch, "finetune_mode"),
            (Ablation::WithoutFamily(MethodFamily::Direct), "methods"),
            (Ablation::WithoutFamily(MethodFamily::ReplaceTarget), "methods"),
            (Ablation::WithoutFamily(MethodFamily::ReplaceContext), "methods"),
        ];
        for (ablation, field) in cases {
            let v = serde_json::to_value(RunConfig::default().ablate(ablation)).unwrap();
            let changed: Vec<&String> = v
                .as_object()
                .unwrap()
                .iter()
                .filter(|(k, val)| base[k.as_str()] != **val)
                .map(|(k, _)| k)
                .collect();
            assert_eq!(changed, vec![field], "{ablation:?}");
        }
        let no_direct = RunConfig::default().ablate(Ablation::WithoutFamily(MethodFamily::Direct));
        assert_eq!(no_direct.methods.len(), 4);
        assert!(!no_direct.methods.contains(&AugMethod::DirectLit));
    }

    #[test]
    fn toml_with_partial_endpoints_and_overrides() {
        let text = r#"
            iterations = 2
            [teacher]
            base_url = "http://teacher:9000/v1"
            model_id = "big"
            [student_base]
            model_id = "small"
            [trainer.hook]
            kind = "command"
            template = "python train.py --data {train_file} --base {base} --out {out_dir}"
        "#;
        let c = RunConfig::from_toml(text, &["next_data=augmented_only".into(), "teacher.max_in_flight=2".into()]).unwrap();
        assert_eq!(c.iterations, 2);
        assert_eq!(c.teacher.temperature, 0.7);
        assert_eq!(c.teacher.max_in_flight, 2);
        assert_eq!(c.student_base.temperature, 0.0);
        assert_eq!(c.student_base.model_id, "small");
        assert_eq!(c.next_data, NextData::AugmentedOnly);
        assert!(matches!(c.trainer.hook, HookSpec::Command { .. }));
        assert_eq!(c.trainer.passthrough["adapter_rank"], "8");
    }

    #[test]
    fn invalid_configs() {
        assert!(RunConfig::from_toml("iterations = 0", &[]).is_err());
        assert!(RunConfig::from_toml("methods = []", &[]).is_err());
        assert!(RunConfig::from_toml("", &["nonsense".into()]).is_err());
        assert!(RunConfig::from_toml("methods = [\"bogus\"]", &[]).is_err());
    }
}
