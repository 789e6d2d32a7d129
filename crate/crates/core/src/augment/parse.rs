use serde::{Deserialize, Serialize};

use super::{AugMethod, MethodFamily};
use crate::data::{Instance, Provenance};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MissingTargetWord,
    UnchangedTarget,
    ParseFailure,
    Duplicate,
    EmptyOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GenerationOutcome {
    Accepted { instance: Instance },
    Rejected { reason: RejectReason, raw: String },
}

impl GenerationOutcome {
    fn reject(reason: RejectReason, raw: &str) -> Self {
        GenerationOutcome::Rejected {
            reason,
            raw: raw.to_string(),
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, GenerationOutcome::Accepted { .. })
    }
}

const QUOTES: &[char] = &['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'];

/// Labels a teacher may put in front of a single-sentence answer.
const ANSWER_LABELS: &[&str] = &["your sentence:", "new sentence:", "sentence:", "output:", "answer:"];

/// Turns raw teacher output into a validated instance or a typed rejection.
/// Total: every input yields an outcome.
pub fn parse_generation(method: AugMethod, raw: &str, seed: &Instance, iteration: u32) -> GenerationOutcome {
    if raw.trim().is_empty() {
        return GenerationOutcome::reject(RejectReason::EmptyOutput, raw);
    }
    let parsed = match method.family() {
        MethodFamily::Direct | MethodFamily::ReplaceContext => parse_single_sentence(raw, &seed.target_word),
        MethodFamily::ReplaceTarget => parse_replacement(raw, &seed.target_word),
    };
    let (sentence, target) = match parsed {
        Ok(pair) => pair,
        Err(reason) => return GenerationOutcome::reject(reason, raw),
    };
    let provenance = Provenance::Augmented {
        method,
        parent_id: seed.id.clone(),
        iteration: iteration.max(1),
    };
    match Instance::new(sentence, target, seed.label, provenance) {
        Ok(instance) => GenerationOutcome::Accepted { instance },
        Err(_) => GenerationOutcome::reject(RejectReason::ParseFailure, raw),
    }
}

fn parse_single_sentence(raw: &str, seed_target: &str) -> Result<(String, String), RejectReason> {
    let lines: Vec<String> = raw
        .lines()
        .map(|line| {
            let line = clean_line(line);
            let line = strip_label(line, ANSWER_LABELS);
            strip_quotes(line).to_string()
        })
        .filter(|l| !l.is_empty())
        .collect();
    let sentence = match lines.as_slice() {
        [] => return Err(RejectReason::EmptyOutput),
        [one] => one.clone(),
        _ => return Err(RejectReason::ParseFailure),
    };
    if count_sentences(&sentence) != 1 {
        return Err(RejectReason::ParseFailure);
    }
    let surface = text::find_target(&sentence, seed_target).ok_or(RejectReason::MissingTargetWord)?;
    let surface = surface.to_string();
    Ok((sentence, surface))
}

fn parse_replacement(raw: &str, seed_target: &str) -> Result<(String, String), RejectReason> {
    let lines: Vec<&str> = raw.lines().map(clean_line).collect();
    // Skip an echoed seed block: search after the last "Target word:" line.
    let start = lines
        .iter()
        .rposition(|l| has_label(l, "target word:"))
        .map_or(0, |i| i + 1);
    let field = |label: &str| -> Option<String> {
        let idx = lines[start..].iter().position(|l| has_label(l, label))? + start;
        let value = strip_quotes(lines[idx][label.len()..].trim_start_matches(['*', ' ']));
        if !value.is_empty() {
            return Some(value.to_string());
        }
        // value on the following line
        lines[idx + 1..]
            .iter()
            .find(|l| !l.is_empty())
            .filter(|l| !l.contains(':'))
            .map(|l| strip_quotes(l).to_string())
    };
    let sentence = field("new sentence:").ok_or(RejectReason::ParseFailure)?;
    let new_word = field("new word:").ok_or(RejectReason::ParseFailure)?;
    let new_word = new_word
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string();
    if sentence.is_empty() || new_word.is_empty() {
        return Err(RejectReason::ParseFailure);
    }
    if text::normalize_word(&new_word) == text::normalize_word(seed_target) {
        return Err(RejectReason::UnchangedTarget);
    }
    let surface = text::find_target(&sentence, &new_word).ok_or(RejectReason::MissingTargetWord)?;
    let surface = surface.to_string();
    Ok((sentence, surface))
}

/// Drops markdown emphasis and list markers.
fn clean_line(line: &str) -> &str {
    let line = line.trim();
    let line = line.trim_start_matches(['-', '*', '#', '>', ' ']);
    let line = line.strip_suffix("**").unwrap_or(line);
    line.trim()
}

fn has_label(line: &str, label: &str) -> bool {
    line.len() >= label.len()
        && line.is_char_boundary(label.len())
        && line[..label.len()].eq_ignore_ascii_case(label)
}

fn strip_label<'a>(line: &'a str, labels: &[&str]) -> &'a str {
    for label in labels {
        if line.len() >= label.len() && line.is_char_boundary(label.len()) && line[..label.len()].eq_ignore_ascii_case(label) {
            return line[label.len()..].trim_start_matches(['*', ' ']).trim();
        }
    }
    line
}

fn strip_quotes(mut s: &str) -> &str {
    loop {
        s = s.trim();
        let mut chars = s.chars();
        match (chars.next(), chars.next_back()) {
            (Some(a), Some(b)) if QUOTES.contains(&a) && QUOTES.contains(&b) => {
                s = &s[a.len_utf8()..s.len() - b.len_utf8()];
            }
            _ => return s,
        }
    }
}

/// Sentence count by terminal punctuation followed by a capitalised word.
fn count_sentences(line: &str) -> usize {
    let chars: Vec<char> = line.chars().collect();
    let mut count = 1;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && (QUOTES.contains(&chars[j]) || matches!(chars[j], '.' | '!' | '?')) {
                j += 1;
            }
            let ws_start = j;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            if j > ws_start && j < chars.len() && (chars[j].is_uppercase() || QUOTES.contains(&chars[j])) {
                count += 1;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    count
}
