//! Token-level text helpers shared by ingestion, deduplication and the
//! augmentation output parser.

/// Minimum length of a word for prefix (stem) matching.
pub const MIN_STEM_LEN: usize = 3;

/// Lowercase, drop punctuation, and collapse whitespace runs to one space.
///
/// Word order is kept. Used for dedup keys and instance ids.
pub fn normalize_sentence(sentence: &str) -> String {
    let mut out = String::with_capacity(sentence.len());
    for word in sentence.split_whitespace() {
        let cleaned: String = word
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        if cleaned.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&cleaned);
    }
    out
}

/// Lowercased word with surrounding whitespace removed.
pub fn normalize_word(word: &str) -> String {
    word.trim().to_lowercase()
}

/// A whitespace token with edge punctuation removed, keeping its original case.
pub fn surface_tokens(sentence: &str) -> impl Iterator<Item = &str> {
    sentence
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
}

/// Stem-match rule: a token matches `word` iff, after lowercasing, the token
/// equals the word or starts with it and the word is at least
/// [`MIN_STEM_LEN`] characters long.
pub fn stem_matches(token: &str, word: &str) -> bool {
    let token = token.to_lowercase();
    let word = normalize_word(word);
    if word.is_empty() {
        return false;
    }
    token == word || (word.chars().count() >= MIN_STEM_LEN && token.starts_with(&word))
}

/// First surface token of `sentence` that stem-matches `word`.
pub fn find_target<'a>(sentence: &'a str, word: &str) -> Option<&'a str> {
    surface_tokens(sentence).find(|t| stem_matches(t, word))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_ignores_case_punctuation_and_spacing() {
        assert_eq!(
            normalize_sentence("  He   grasped, the \"concept\" quickly!  "),
            "he grasped the concept quickly"
        );
        assert_eq!(normalize_sentence("?? !!"), "");
    }

    #[test]
    fn stem_rule() {
        assert!(stem_matches("digested", "digest"));
        assert!(stem_matches("Runs", "run"));
        assert!(stem_matches("ran", "ran"));
        assert!(!stem_matches("ran", "run"));
        // two-letter words only match exactly
        assert!(stem_matches("go", "go"));
        assert!(!stem_matches("goes", "go"));
        assert!(!stem_matches("anything", ""));
    }

    #[test]
    fn finds_surface_token() {
        assert_eq!(find_target("\"She runs every morning.\"", "run"), Some("runs"));
        assert_eq!(find_target("He digested the concept swiftly.", "digest"), Some("digested"));
        assert_eq!(find_target("The sky wept.", "soar"), None);
    }
}
