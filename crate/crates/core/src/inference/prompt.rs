use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::corpus::{Label, TweetRecord};

/// Version tag of the classification template, recorded with every prediction.
pub const CLASSIFY_PROMPT_VERSION: &str = "classify-v1";
/// Version tag of the translation template.
pub const TRANSLATE_PROMPT_VERSION: &str = "translate-v1";

/// Instruction sent ahead of every text to classify. Its length is pinned to
/// a 76-token budget under [`count_tokens`].
pub const CLASSIFY_INSTRUCTIONS: &str = "You label social media posts about immigration. \
Read the post and assign exactly one of these four labels: neutral, pro-immigration, \
anti-immigration, unrelated. Choose unrelated when the post is not about immigration at all. \
Reply with the single label only, with no explanation and no further words.";

pub const TRANSLATE_INSTRUCTIONS: &str = "Translate the following social media post into English. \
Reply with the English translation only, without notes or quotation marks.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classify,
    Translate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

/// Approximate token count: one token per four characters, rounded up.
///
/// The real tokenizer is model-internal, so this is only an estimate; the
/// footprint model also accepts exact counts reported by an endpoint.
pub fn count_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// The text a classifier should see: the machine translation when the record
/// carries one, otherwise the original text.
pub fn classification_input(record: &TweetRecord) -> &str {
    record.translated_text.as_deref().unwrap_or(&record.text)
}

pub fn build_prompt(record: &TweetRecord, task: Task) -> Result<Vec<ChatMessage>, InferenceError> {
    let text = match task {
        Task::Classify => classification_input(record),
        Task::Translate => record.text.as_str(),
    };
    if text.trim().is_empty() {
        return Err(InferenceError::Precondition(format!(
            "record `{}` has no text to send",
            record.id
        )));
    }
    let instructions = match task {
        Task::Classify => CLASSIFY_INSTRUCTIONS,
        Task::Translate => TRANSLATE_INSTRUCTIONS,
    };
    Ok(vec![ChatMessage::system(instructions), ChatMessage::user(text)])
}

/// Maps a word to a stance label. Hyphenated forms such as
/// "pro-immigration" reach this function as two words and resolve on "pro".
fn word_label(word: &str) -> Option<Label> {
    match word {
        "neutral" => Some(Label::Neutral),
        "pro" => Some(Label::Pro),
        "anti" => Some(Label::Anti),
        "unrelated" => Some(Label::Unrelated),
        _ => None,
    }
}

/// Extracts the first recognized stance label from a model response.
///
/// Matching is case-insensitive over alphanumeric words, so "Pro-immigration."
/// yields `pro` and "problem" yields nothing.
pub fn parse_label(raw: &str) -> Result<Label, InferenceError> {
    let lowered = raw.to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .find_map(word_label)
        .ok_or_else(|| InferenceError::Unparseable(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Language, TranslationQuality};

    fn record(text: &str) -> TweetRecord {
        TweetRecord {
            id: "t1".into(),
            text: text.into(),
            language: Language::Es,
            label: Label::Neutral,
            split: None,
            translation_quality: TranslationQuality::NotTranslated,
            translated_text: None,
        }
    }

    #[test]
    fn classify_prompt_names_all_four_labels() {
        let msgs = build_prompt(&record("hola"), Task::Classify).unwrap();
        let instruction = &msgs[0].content;
        for label in ["neutral", "pro-immigration", "anti-immigration", "unrelated"] {
            assert!(instruction.contains(label), "{label}");
        }
        assert!(instruction.contains("single label"));
        assert_eq!(msgs[1].content, "hola");
    }

    #[test]
    fn classify_template_is_byte_stable() {
        assert_eq!(CLASSIFY_INSTRUCTIONS.len(), 301);
        assert!(CLASSIFY_INSTRUCTIONS.starts_with("You label social media posts about immigration. Read"));
        assert!(CLASSIFY_INSTRUCTIONS.ends_with("no explanation and no further words."));
    }

    #[test]
    fn translate_prompt_carries_text_verbatim() {
        let msgs = build_prompt(&record("hola"), Task::Translate).unwrap();
        assert!(msgs.iter().any(|m| m.content.contains("hola")));
        assert!(msgs[0].content.contains("English"));
    }

    #[test]
    fn classify_prompt_prefers_translation() {
        let mut r = record("hola");
        r.translated_text = Some("hello".into());
        r.translation_quality = TranslationQuality::Unknown;
        let msgs = build_prompt(&r, Task::Classify).unwrap();
        assert_eq!(msgs[1].content, "hello");
    }

    #[test]
    fn empty_text_is_a_precondition_error() {
        assert!(matches!(
            build_prompt(&record("  "), Task::Classify),
            Err(InferenceError::Precondition(_))
        ));
    }

    #[test]
    fn classify_instruction_budget_is_76_tokens() {
        assert_eq!(count_tokens(CLASSIFY_INSTRUCTIONS), 76);
    }

    #[test]
    fn token_count_rule() {
        assert_eq!(count_tokens(""), 0);
        assert_eq!(count_tokens("abcd"), 1);
        assert_eq!(count_tokens("abcde"), 2);
        assert_eq!(count_tokens(&"x".repeat(144)), 36);
        // characters, not bytes
        assert_eq!(count_tokens("난민난민"), 1);
    }

    #[test]
    fn parse_label_examples() {
        assert_eq!(parse_label("Pro-immigration.").unwrap(), Label::Pro);
        assert_eq!(
            parse_label("the tweet is UNRELATED to immigration").unwrap(),
            Label::Unrelated
        );
        assert!(matches!(parse_label("maybe"), Err(InferenceError::Unparseable(_))));
        assert!(parse_label("a problem with antibodies").is_err());
        assert_eq!(parse_label("ANTI").unwrap(), Label::Anti);
        assert_eq!(parse_label("Label: neutral (not pro)").unwrap(), Label::Neutral);
    }

    /// Scan oracle: for each synonym find its first whole-word byte offset by
    /// brute force, then pick the synonym with the smallest offset.
    fn first_match_oracle(raw: &str) -> Option<Label> {
        let text = raw.to_lowercase();
        let synonyms = [
            ("neutral", Label::Neutral),
            ("pro-immigration", Label::Pro),
            ("anti-immigration", Label::Anti),
            ("unrelated", Label::Unrelated),
            ("pro", Label::Pro),
            ("anti", Label::Anti),
        ];
        let is_word = |c: Option<char>| c.is_some_and(char::is_alphanumeric);
        let mut best: Option<(usize, Label)> = None;
        for (syn, label) in synonyms {
            for start in 0..text.len() {
                if !text.is_char_boundary(start) || !text[start..].starts_with(syn) {
                    continue;
                }
                let before = text[..start].chars().next_back();
                let end = start + syn.len();
                let after = text[end..].chars().next();
                if is_word(before) || is_word(after) {
                    continue;
                }
                if best.is_none_or(|(pos, _)| start < pos) {
                    best = Some((start, label));
                }
                break;
            }
        }
        best.map(|(_, l)| l)
    }

    #[test]
    fn parse_label_agrees_with_scan_oracle() {
        let words = [
            "the",
            "tweet",
            "is",
            "UNRELATED",
            "to",
            "immigration",
            "Pro-immigration",
            "anti",
            "neutral.",
            "maybe",
            "problem",
            "antique",
            "Neutral:",
            "pro",
            "(anti-immigration)",
            "ünrelated",
            "unrelatedness",
        ];
        // Exhaustive over all ordered triples of the vocabulary.
        for a in words {
            for b in words {
                for c in words {
                    let raw = format!("{a} {b} {c}");
                    assert_eq!(parse_label(&raw).ok(), first_match_oracle(&raw), "{raw}");
                }
            }
        }
    }

    #[test]
    fn parse_label_is_idempotent_over_its_tokens() {
        for label in Label::ALL {
            assert_eq!(parse_label(label.token()).unwrap(), *label);
            assert_eq!(
                parse_label(&parse_label(label.token()).unwrap().to_string()).unwrap(),
                *label
            );
        }
    }
}
