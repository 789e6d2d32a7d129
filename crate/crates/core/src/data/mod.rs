//! Canonical data model for metaphor-detection instances and the
//! dataset-level operations the pipeline is built from.

mod dedup;
mod error;
mod ingest;
mod jsonl;
mod qa;
mod sample;
mod stats;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::AugMethod;
use crate::text;

pub use dedup::{dedup_key, merge_dedup, DedupKey};
pub use error::DataError;
pub use ingest::{ingest_dataset, ColumnMap, Ingested, LabelEncoding, RowDiagnostic, SourceFormat};
pub use jsonl::{read_dataset, read_jsonl, write_dataset, write_jsonl};
pub use qa::{render_qa, QaRecord};
pub use sample::sample_balanced;
pub use stats::{compute_stats, DatasetStats, Percent};

/// Gold or predicted class. `Metaphor` is the positive class for all metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Metaphor,
    Literal,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Metaphor, Label::Literal];

    /// The answer word used in QA records and expected from the model.
    pub fn answer(self) -> &'static str {
        match self {
            Label::Metaphor => "Yes",
            Label::Literal => "No",
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Metaphor => Label::Literal,
            Label::Literal => Label::Metaphor,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Metaphor => "metaphor",
            Label::Literal => "literal",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where an instance came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Original {
        dataset_name: String,
        source_index: u64,
    },
    Augmented {
        method: AugMethod,
        parent_id: String,
        iteration: u32,
    },
}

impl Provenance {
    pub fn kind(&self) -> &'static str {
        match self {
            Provenance::Original { .. } => "original",
            Provenance::Augmented { .. } => "augmented",
        }
    }

    pub fn parent_id(&self) -> Option<&str> {
        match self {
            Provenance::Original { .. } => None,
            Provenance::Augmented { parent_id, .. } => Some(parent_id),
        }
    }
}

/// One (sentence, target word, label) example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub sentence: String,
    pub target_word: String,
    pub label: Label,
    pub provenance: Provenance,
    /// Fields present in the source record that this crate does not interpret.
    #[serde(flatten, default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl Instance {
    /// Builds an instance, computing its id and checking the invariants.
    pub fn new(
        sentence: impl Into<String>,
        target_word: impl Into<String>,
        label: Label,
        provenance: Provenance,
    ) -> Result<Self, String> {
        let instance = Self::new_unchecked(sentence, target_word, label, provenance);
        instance.validate()?;
        Ok(instance)
    }

    /// Builds an instance without checking the target-word invariant.
    pub fn new_unchecked(
        sentence: impl Into<String>,
        target_word: impl Into<String>,
        label: Label,
        provenance: Provenance,
    ) -> Self {
        let sentence = sentence.into();
        let target_word = target_word.into();
        let id = instance_id(&sentence, &target_word, label, &provenance);
        Instance {
            id,
            sentence,
            target_word,
            label,
            provenance,
            extra: serde_json::Map::new(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.sentence.trim().is_empty() {
            return Err("empty sentence".into());
        }
        if self.target_word.trim().is_empty() {
            return Err("empty target word".into());
        }
        if text::find_target(&self.sentence, &self.target_word).is_none() {
            return Err(format!(
                "target word '{}' does not occur in sentence",
                self.target_word
            ));
        }
        if let Provenance::Augmented { iteration, .. } = self.provenance {
            if iteration == 0 {
                return Err("augmented provenance requires iteration >= 1".into());
            }
        }
        Ok(())
    }

    pub fn dedup_key(&self) -> DedupKey {
        dedup_key(&self.sentence, &self.target_word)
    }
}

/// Content hash over normalized sentence, target word, label and provenance kind.
pub fn instance_id(sentence: &str, target_word: &str, label: Label, provenance: &Provenance) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text::normalize_sentence(sentence).as_bytes());
    hasher.update([0x1f]);
    hasher.update(text::normalize_word(target_word).as_bytes());
    hasher.update([0x1f]);
    hasher.update(label.as_str().as_bytes());
    hasher.update([0x1f]);
    hasher.update(provenance.kind().as_bytes());
    let digest = hasher.finalize();
    hex::encode(&digest[..16])
}

/// Ordered, id-unique collection of instances.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub name: String,
    instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(name: impl Into<String>) -> Self {
        Dataset {
            name: name.into(),
            instances: Vec::new(),
        }
    }

    pub fn from_instances(name: impl Into<String>, instances: Vec<Instance>) -> Result<Self, DataError> {
        let mut seen = HashSet::with_capacity(instances.len());
        for inst in &instances {
            if !seen.insert(inst.id.as_str()) {
                return Err(DataError::DuplicateId(inst.id.clone()));
            }
        }
        Ok(Dataset {
            name: name.into(),
            instances,
        })
    }

    /// Appends an instance; returns `false` (and drops it) if the id is taken.
    pub fn push(&mut self, instance: Instance) -> bool {
        if self.contains_id(&instance.id) {
            return false;
        }
        self.instances.push(instance);
        true
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.instances.iter().any(|i| i.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn into_instances(self) -> Vec<Instance> {
        self.instances
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Instance> {
        self.instances.iter()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.instances.iter().map(|i| i.id.as_str())
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.instances.iter().filter(|i| i.label == label).count()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Instance;
    type IntoIter = std::slice::Iter<'a, Instance>;

    fn into_iter(self) -> Self::IntoIter {
        self.instances.iter()
    }
}
