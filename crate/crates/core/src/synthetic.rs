//! Deterministic offline stand-ins: a synthetic labelled pool and a teacher
//! whose answers and generations are pure functions of the request, so runs
//! that use them are reproducible across processes and thread schedules.

use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::augment::{AugMethod, MethodFamily};
use crate::data::{Dataset, Instance, Label, Provenance};
use crate::inference::{MockModel, MockReply, RequestContext};

const WORDS: [&str; 12] = [
    "drowned", "blossomed", "devoured", "ignited", "melted", "anchored", "sparked", "carved", "buried", "poured",
    "stitched", "thundered",
];

const REPLACEMENTS: [&str; 8] = [
    "swallowed", "kindled", "harvested", "sculpted", "flooded", "tangled", "polished", "echoed",
];

/// Maps any list of strings to a uniform value in `[0, 1)`.
pub fn unit_hash(parts: &[&str]) -> f64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0x1f]);
    }
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    (u64::from_be_bytes(word) >> 11) as f64 / (1u64 << 53) as f64
}

/// A pool of `n_metaphor + n_literal` distinct original instances.
pub fn synthetic_pool(name: &str, n_metaphor: usize, n_literal: usize) -> Dataset {
    let mut items = Vec::with_capacity(n_metaphor + n_literal);
    for i in 0..n_metaphor + n_literal {
        let label = if i < n_metaphor { Label::Metaphor } else { Label::Literal };
        let word = WORDS[i % WORDS.len()];
        let sentence = format!("Sample {i} of {name} shows how the storm {word} the valley.");
        let instance = Instance::new(
            sentence,
            word,
            label,
            Provenance::Original {
                dataset_name: name.to_string(),
                source_index: i as u64,
            },
        )
        .expect("synthetic instances are valid");
        items.push(instance);
    }
    Dataset::from_instances(name, items).expect("synthetic ids are distinct")
}

/// The reply a cooperative teacher gives for one generation request.
pub fn synthetic_generation(method: AugMethod, seed: &Instance) -> String {
    let tag = &seed.id[..10];
    match method.family() {
        MethodFamily::Direct => format!("Your sentence: The river {} every doubt in case {tag}.", seed.target_word),
        MethodFamily::ReplaceContext => {
            format!("The old city {} its quiet streets in variant {tag}.", seed.target_word)
        }
        MethodFamily::ReplaceTarget => {
            let seed_word = crate::text::normalize_word(&seed.target_word);
            let mut pick = (unit_hash(&[&seed.id]) * REPLACEMENTS.len() as f64) as usize;
            if REPLACEMENTS[pick] == seed_word {
                pick = (pick + 1) % REPLACEMENTS.len();
            }
            let word = REPLACEMENTS[pick];
            format!("New sentence: Her voice {word} the hall in echo {tag}.\nNew word: {word}")
        }
    }
}

/// Builder for a synthetic teacher backed by [`MockModel`].
#[derive(Clone)]
pub struct SyntheticTeacher {
    reject_rate: f64,
    error_rate: f64,
    max_in_flight: usize,
}

impl Default for SyntheticTeacher {
    fn default() -> Self {
        SyntheticTeacher {
            reject_rate: 0.0,
            error_rate: 0.0,
            max_in_flight: 8,
        }
    }
}

impl SyntheticTeacher {
    pub fn new() -> Self {
        Self::default()
    }

    /// Probability that a single generation attempt produces unusable text.
    pub fn reject_rate(mut self, p: f64) -> Self {
        self.reject_rate = p;
        self
    }

    /// Probability that the teacher mislabels an instance when evaluating.
    pub fn error_rate(mut self, p: f64) -> Self {
        self.error_rate = p;
        self
    }

    pub fn max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n;
        self
    }

    pub fn build(self) -> MockModel {
        let cfg = Arc::new(self.clone());
        MockModel::from_fn(move |req, _| match &req.context {
            RequestContext::Evaluate { instance } => {
                let wrong = unit_hash(&[&instance.id, "teacher-eval"]) < cfg.error_rate;
                let label = if wrong { instance.label.flipped() } else { instance.label };
                MockReply::Text(label.answer().to_string())
            }
            RequestContext::Generate { seed, method, attempt } => {
                let roll = unit_hash(&[&seed.id, method.as_str(), &attempt.to_string()]);
                if roll < cfg.reject_rate {
                    MockReply::Text("I'm sorry, I can't produce that sentence.".into())
                } else {
                    MockReply::Text(synthetic_generation(*method, seed))
                }
            }
            RequestContext::None => MockReply::Status(400),
        })
        .name("synthetic teacher")
        .max_in_flight(self.max_in_flight)
        .build()
    }
}
