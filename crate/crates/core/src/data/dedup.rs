use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::text;

/// Normalized (sentence, target word) pair used to detect duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DedupKey {
    pub sentence: String,
    pub target_word: String,
}

pub fn dedup_key(sentence: &str, target_word: &str) -> DedupKey {
    DedupKey {
        sentence: text::normalize_sentence(sentence),
        target_word: text::normalize_word(target_word),
    }
}

/// `base` followed by every addition whose dedup key is new.
///
/// Base instances are never dropped, even when two of them share a key.
pub fn merge_dedup(base: &Dataset, additions: &Dataset) -> Dataset {
    let mut keys: HashSet<DedupKey> = base.iter().map(|i| i.dedup_key()).collect();
    let mut ids: HashSet<&str> = base.ids().collect();
    let mut merged = base.clone();
    for inst in additions {
        if ids.contains(inst.id.as_str()) {
            continue;
        }
        if keys.insert(inst.dedup_key()) {
            ids.insert(inst.id.as_str());
            merged.push(inst.clone());
        }
    }
    merged
}
