//! Annotated multilingual corpus: record types, the delimited corpus format,
//! search-term filtering, per-language splitting and label composition.

mod split;
mod terms;

pub use split::{build_training_sets, stratified_split, summarize, CorpusSummary, LanguageSummary, SplitOutcome};
pub use terms::{fold_text, match_search_terms, SearchTermTable};

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column order of the corpus file header.
pub const CORPUS_HEADER: [&str; 7] = [
    "id",
    "text",
    "language",
    "label",
    "split",
    "translation_quality",
    "translated_text",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus header must be `{expected}`, found `{found}`")]
    BadHeader { expected: String, found: String },
    #[error("row {row}: malformed record: {message}")]
    Malformed { row: u64, message: String },
    #[error("row {row}: unknown {field} `{token}`")]
    UnknownToken {
        row: u64,
        field: &'static str,
        token: String,
    },
    #[error("row {row}: duplicate id `{id}`")]
    DuplicateId { row: u64, id: String },
    #[error("row {row}: record `{id}` is invalid: {reason}")]
    Invalid { row: u64, id: String, reason: String },
    #[error("no search terms configured for language `{0}`")]
    UnknownLanguage(String),
    #[error("search-term table: {0}")]
    TermTable(String),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
}

/// Error raised when a token does not name a member of one of the corpus enums.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{token}`")]
pub struct UnknownToken {
    pub kind: &'static str,
    pub token: String,
}

macro_rules! token_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $kind:literal {
            $( $variant:ident => $token:literal $(| $alias:literal)* ),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(
                #[serde(rename = $token)]
                $variant,
            )+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Canonical token used in files and on the wire.
            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $token,)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let lowered = s.trim().to_lowercase();
                match lowered.as_str() {
                    $($token $(| $alias)* => Ok($name::$variant),)+
                    _ => Err(UnknownToken { kind: $kind, token: s.to_string() }),
                }
            }
        }
    };
}

token_enum! {
    /// The thirteen tweet languages, by ISO 639-1 code.
    Language, "language" {
        En => "en",
        Es => "es",
        Tr => "tr",
        Ar => "ar",
        It => "it",
        Id => "id",
        Hi => "hi",
        Hu => "hu",
        Pl => "pl",
        Pt => "pt",
        Fr => "fr",
        De => "de",
        Ko => "ko",
    }
}

impl Language {
    pub fn english_name(self) -> &'static str {
        match self {
            Language::En => "English",
            Language::Es => "Spanish",
            Language::Tr => "Turkish",
            Language::Ar => "Arabic",
            Language::It => "Italian",
            Language::Id => "Indonesian",
            Language::Hi => "Hindi",
            Language::Hu => "Hungarian",
            Language::Pl => "Polish",
            Language::Pt => "Portuguese",
            Language::Fr => "French",
            Language::De => "German",
            Language::Ko => "Korean",
        }
    }
}

token_enum! {
    /// Four-way stance label.
    Label, "label" {
        Neutral => "neutral",
        Pro => "pro" | "pro-immigration",
        Anti => "anti" | "anti-immigration",
        Unrelated => "unrelated",
    }
}

token_enum! {
    Split, "split" {
        Train => "train",
        Test => "test",
        AdditionalTest => "additional_test" | "additional-test",
    }
}

token_enum! {
    /// Human-assessed quality of a machine translation.
    TranslationQuality, "translation quality" {
        NotTranslated => "not_translated" | "not-translated",
        Good => "good",
        Bad => "bad",
        Unknown => "unknown",
    }
}

/// One annotated text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    pub language: Language,
    pub label: Label,
    /// `None` until the record has been assigned to a split.
    pub split: Option<Split>,
    pub translation_quality: TranslationQuality,
    pub translated_text: Option<String>,
}

impl TweetRecord {
    /// Checks the per-record invariants, returning the violated rule.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("id is empty".into());
        }
        let translated = self.translated_text.is_some();
        let marked = self.translation_quality != TranslationQuality::NotTranslated;
        if translated != marked {
            return Err(format!(
                "translation_quality `{}` is inconsistent with translated_text being {}",
                self.translation_quality,
                if translated { "present" } else { "absent" }
            ));
        }
        if self.language == Language::En && marked {
            return Err("English records cannot carry a translation".into());
        }
        Ok(())
    }
}

fn sniff_delimiter(header_line: &str) -> u8 {
    if header_line.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn parse_token<T: FromStr<Err = UnknownToken>>(row: u64, raw: &str) -> Result<T, CorpusError> {
    raw.parse::<T>().map_err(|e| CorpusError::UnknownToken {
        row,
        field: e.kind,
        token: e.token,
    })
}

/// Parses a corpus stream. Row numbers in errors count the header as row 1.
pub fn parse_corpus<R: Read>(mut source: R) -> Result<Vec<TweetRecord>, CorpusError> {
    let mut buf = String::new();
    source.read_to_string(&mut buf)?;
    let buf = buf.strip_prefix('\u{feff}').unwrap_or(&buf);
    let first_line = buf.lines().next().unwrap_or("");
    if first_line.trim().is_empty() {
        return Ok(Vec::new());
    }
    let delimiter = sniff_delimiter(first_line);

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(buf.as_bytes());

    let headers = reader.headers().map_err(|e| CorpusError::Malformed {
        row: 1,
        message: e.to_string(),
    })?;
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != CORPUS_HEADER {
        return Err(CorpusError::BadHeader {
            expected: CORPUS_HEADER.join(","),
            found: found.join(","),
        });
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, result) in reader.records().enumerate() {
        let fallback_row = idx as u64 + 2;
        let row_data = result.map_err(|e| CorpusError::Malformed {
            row: e.position().map(|p| p.line()).unwrap_or(fallback_row),
            message: e.to_string(),
        })?;
        let row = row_data.position().map(|p| p.line()).unwrap_or(fallback_row);
        let field = |i: usize| row_data.get(i).unwrap_or("");

        let id = field(0).trim().to_string();
        let split = match field(4).trim() {
            "" => None,
            raw => Some(parse_token::<Split>(row, raw)?),
        };
        let translated_text = match field(6) {
            "" => None,
            t => Some(t.to_string()),
        };
        let translation_quality = match field(5).trim() {
            "" => TranslationQuality::NotTranslated,
            raw => parse_token(row, raw)?,
        };
        let record = TweetRecord {
            text: field(1).to_string(),
            language: parse_token(row, field(2))?,
            label: parse_token(row, field(3))?,
            split,
            translation_quality,
            translated_text,
            id,
        };
        record.validate().map_err(|reason| CorpusError::Invalid {
            row,
            id: record.id.clone(),
            reason,
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId { row, id: record.id });
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the comma-delimited corpus format.
pub fn write_corpus<W: Write>(sink: W, records: &[TweetRecord]) -> Result<(), CorpusError> {
    let mut writer = csv::WriterBuilder::new().from_writer(sink);
    let to_io = |e: csv::Error| CorpusError::Io(e.into());
    writer.write_record(CORPUS_HEADER).map_err(to_io)?;
    for r in records {
        writer
            .write_record([
                r.id.as_str(),
                r.text.as_str(),
                r.language.token(),
                r.label.token(),
                r.split.map(Split::token).unwrap_or(""),
                r.translation_quality.token(),
                r.translated_text.as_deref().unwrap_or(""),
            ])
            .map_err(to_io)?;
    }
    writer.flush()?;
    Ok(())
}
