use std::collections::BTreeMap;

use serde::Deserialize;
use unicode_normalization::UnicodeNormalization;

use super::{CorpusError, Language};

const DEFAULT_TERMS: &str = include_str!("../../data/search_terms.toml");

/// Normalizes text for term matching: NFC composition followed by Unicode
/// default case folding. Scripts without case (Arabic, Devanagari, Hangul)
/// pass through unchanged apart from normalization.
pub fn fold_text(text: &str) -> String {
    let composed: String = text.nfc().collect();
    caseless::default_case_fold_str(&composed).nfc().collect()
}

/// Per-language search terms, stored case-folded in their configured order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchTermTable {
    terms: BTreeMap<Language, Vec<String>>,
}

#[derive(Deserialize)]
#[serde(transparent)]
struct RawTable(BTreeMap<String, Vec<String>>);

impl SearchTermTable {
    /// Builds a table, folding every term. Every language must have at least
    /// one term, and no term may fold to the empty string.
    pub fn new<I, S>(entries: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (Language, Vec<S>)>,
        S: AsRef<str>,
    {
        let mut terms = BTreeMap::new();
        for (lang, list) in entries {
            let folded: Vec<String> = list.iter().map(|t| fold_text(t.as_ref().trim())).collect();
            if let Some(pos) = folded.iter().position(String::is_empty) {
                return Err(CorpusError::TermTable(format!(
                    "term #{} for `{lang}` is empty after case folding",
                    pos + 1
                )));
            }
            terms.insert(lang, folded);
        }
        for lang in Language::ALL {
            if terms.get(lang).is_none_or(Vec::is_empty) {
                return Err(CorpusError::TermTable(format!("no terms for `{lang}`")));
            }
        }
        Ok(Self { terms })
    }

    /// Parses a TOML table of `code = ["term", ...]` entries.
    pub fn from_toml(source: &str) -> Result<Self, CorpusError> {
        let raw: RawTable = toml::from_str(source).map_err(|e| CorpusError::TermTable(e.to_string()))?;
        let mut entries = Vec::with_capacity(raw.0.len());
        for (code, list) in raw.0 {
            let lang = code
                .parse::<Language>()
                .map_err(|e| CorpusError::TermTable(e.to_string()))?;
            entries.push((lang, list));
        }
        Self::new(entries)
    }

    /// The shipped immigration search-term table for all thirteen languages.
    pub fn default_table() -> Self {
        Self::from_toml(DEFAULT_TERMS).expect("bundled search-term table is valid")
    }

    pub fn terms(&self, language: Language) -> Option<&[String]> {
        self.terms.get(&language).map(Vec::as_slice)
    }
}

/// Returns every configured term for `language` that occurs as a substring of
/// the case-folded text, in table order. An empty result means the text would
/// not have been sampled.
pub fn match_search_terms(text: &str, language: Language, table: &SearchTermTable) -> Result<Vec<String>, CorpusError> {
    let terms = table
        .terms(language)
        .ok_or_else(|| CorpusError::UnknownLanguage(language.to_string()))?;
    let folded = fold_text(text);
    Ok(terms.iter().filter(|t| folded.contains(t.as_str())).cloned().collect())
}
