//! Teacher prompt templates, one per augmentation method.
//!
//! Placeholders are `{target_word}` and `{sentence}`. Substitution is plain
//! text replacement with no escaping.

use super::{AugError, AugMethod};
use crate::data::Instance;

const DIRECT_MET: &str = "You are a creative writing assistant skilled in crafting subtle and intricate metaphors. \
Your task is to create a sentence that incorporates the metaphorical interpretation of the verb '{target_word}' \
in an unexpected and unique way. The output must contain the word '{target_word}' as a verb. \
Please provide only the sentence.\n\nYour sentence:";

const REPLACE_TARGET_MET: &str = "You are a creative writing assistant skilled in crafting subtle and intricate metaphors. \
Your task is to replace the target word in the following sentence with a new metaphorical expression, \
ensuring that the new word also carries a metaphorical meaning.\n\
The following are several examples:\n\n\
Original sentence: He grasped the concept quickly.\n\
Target word: grasp\n\
New sentence: He digested the concept swiftly.\n\
New word: digest\n\n\
Original sentence: He soared to new heights in his career.\n\
Target word: soar\n\
New sentence: He climbed to new summits in his career.\n\
New word: climb\n\n\
Original sentence: {sentence}\n\
Target word: {target_word}";

const REPLACE_CONTEXT_MET: &str = "You are a creative writing assistant skilled in transforming contexts while preserving metaphorical meanings. \
Your task is to take the given sentence containing the metaphorical use of the word '{target_word}' \
and rework it into a new sentence that maintains the metaphorical essence while changing the surrounding context. \
The output must contain the word '{target_word}'. Please provide only the new sentence.\n\n\
Given sentence: '{sentence}'\n\nYour sentence:";

const DIRECT_LIT: &str = "You are a straightforward writing assistant skilled in creating clear and literal statements. \
Your task is to formulate a sentence that uses the verb '{target_word}' in its direct and obvious meaning. \
The output must contain the word '{target_word}' as a verb. Please provide only the sentence.\n\nYour sentence:";

const REPLACE_TARGET_LIT: &str = "You are a straightforward writing assistant skilled in creating clear and literal statements. \
Your task is to replace the target word in the following sentence with a new literal expression, \
ensuring that the new word is used in its direct and obvious meaning.\n\
The following are several examples:\n\n\
Original sentence: He quickly understood the concept.\n\
Target word: understand\n\
New sentence: He quickly comprehended the concept.\n\
New word: comprehend\n\n\
Original sentence: She ran fast to catch the bus.\n\
Target word: run\n\
New sentence: She sprinted to catch the bus.\n\
New word: sprint\n\n\
Original sentence: {sentence}\n\
Target word: {target_word}";

const REPLACE_CONTEXT_LIT: &str = "You are a creative writing assistant skilled in transforming contexts while preserving the literal meanings of words. \
Your task is to take the given sentence containing the literal use of the word '{target_word}' \
and rework it into a new sentence that maintains the literal essence while changing the surrounding context. \
The output must contain the word '{target_word}'. Please provide only the new sentence.\n\n\
Given sentence: '{sentence}'\n\nYour sentence:";

/// Raw template text for a method.
pub fn template(method: AugMethod) -> &'static str {
    match method {
        AugMethod::DirectMet => DIRECT_MET,
        AugMethod::ReplaceTargetMet => REPLACE_TARGET_MET,
        AugMethod::ReplaceContextMet => REPLACE_CONTEXT_MET,
        AugMethod::DirectLit => DIRECT_LIT,
        AugMethod::ReplaceTargetLit => REPLACE_TARGET_LIT,
        AugMethod::ReplaceContextLit => REPLACE_CONTEXT_LIT,
    }
}

/// Fills the method's template from a seed instance.
///
/// The target word is substituted last so that a literal `{sentence}` inside a
/// target word cannot be expanded.
pub fn render_aug_prompt(method: AugMethod, seed: &Instance) -> Result<String, AugError> {
    if method.polarity() != seed.label {
        return Err(AugError::PolarityMismatch {
            method,
            label: seed.label,
        });
    }
    let text = template(method);
    let mut out = String::with_capacity(text.len() + 2 * seed.sentence.len());
    let mut rest = text;
    while let Some(pos) = rest.find('{') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if let Some(after) = tail.strip_prefix("{target_word}") {
            out.push_str(&seed.target_word);
            rest = after;
        } else if let Some(after) = tail.strip_prefix("{sentence}") {
            out.push_str(&seed.sentence);
            rest = after;
        } else {
            out.push('{');
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    Ok(out)
}
