use serde::{Deserialize, Serialize};

use super::Instance;

/// Instruction-tuning record in the question-answer format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

/// The zero-shot question asked of every model.
pub fn qa_instruction(sentence: &str, target_word: &str) -> String {
    format!(
        "Is the word '{target_word}' in the sentence '{sentence}' used metaphorically? \
         Please answer with 'Yes' or 'No' only."
    )
}

pub fn render_qa(instance: &Instance) -> QaRecord {
    QaRecord {
        instruction: qa_instruction(&instance.sentence, &instance.target_word),
        input: String::new(),
        output: instance.label.answer().to_string(),
    }
}
