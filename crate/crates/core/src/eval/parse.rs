use serde::{Deserialize, Serialize};

use crate::data::Label;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "snake_case")]
pub enum ParsedAnswer {
    Yes,
    No,
    Unparseable { raw: String },
}

impl ParsedAnswer {
    pub fn label(&self) -> Option<Label> {
        match self {
            ParsedAnswer::Yes => Some(Label::Metaphor),
            ParsedAnswer::No => Some(Label::Literal),
            ParsedAnswer::Unparseable { .. } => None,
        }
    }
}

/// Reads the first alphabetic word of a model answer as Yes or No.
///
/// Only the first word counts: "No, ... yes ..." is No.
pub fn parse_answer(raw: &str) -> ParsedAnswer {
    let trimmed = raw.trim();
    let first = trimmed
        .split(|c: char| !c.is_alphabetic())
        .find(|tok| !tok.is_empty())
        .unwrap_or("");
    if first.eq_ignore_ascii_case("yes") {
        ParsedAnswer::Yes
    } else if first.eq_ignore_ascii_case("no") {
        ParsedAnswer::No
    } else {
        ParsedAnswer::Unparseable { raw: raw.to_string() }
    }
}
