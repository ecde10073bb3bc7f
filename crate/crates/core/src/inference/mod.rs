//! Classification and translation through chat-completion endpoints, with
//! bounded retries and resumable campaigns.

mod campaign;
mod endpoint;
mod prompt;
pub mod stub;

pub use campaign::{
    predictions_by_id, read_log, run_campaign, run_classify_campaign, run_translate_campaign, CampaignConfig,
    CampaignEntry, CampaignError, CampaignReport, Checkpoint, ClassifyEntry, FailureKind, FailureRecord,
    TranslateEntry,
};
pub use endpoint::{ChatEndpoint, ChatRequest, ChatResponse, EndpointDescriptor, HttpEndpoint, Usage, API_KEY_ENV};
pub use prompt::{
    build_prompt, classification_input, count_tokens, parse_label, ChatMessage, Role, Task, CLASSIFY_INSTRUCTIONS,
    CLASSIFY_PROMPT_VERSION, TRANSLATE_INSTRUCTIONS, TRANSLATE_PROMPT_VERSION,
};

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, Language, TranslationQuality, TweetRecord, UnknownToken};

/// The four fine-tuned classifier variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "english")]
    English,
    #[serde(rename = "spanish")]
    Spanish,
    #[serde(rename = "english-spanish")]
    EnglishSpanish,
    #[serde(rename = "multilanguage")]
    Multilanguage,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::English,
        Variant::EnglishSpanish,
        Variant::Multilanguage,
        Variant::Spanish,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Variant::English => "english",
            Variant::Spanish => "spanish",
            Variant::EnglishSpanish => "english-spanish",
            Variant::Multilanguage => "multilanguage",
        }
    }

    /// Level name used for the `Model` factor in regression designs.
    pub fn level(self) -> &'static str {
        match self {
            Variant::English => "English",
            Variant::Spanish => "Spanish",
            Variant::EnglishSpanish => "EnglishSpanish",
            Variant::Multilanguage => "Multilanguage",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Variant {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().replace('_', "-").as_str() {
            "english" | "en" => Ok(Variant::English),
            "spanish" | "es" => Ok(Variant::Spanish),
            "english-spanish" | "englishspanish" | "en-es" => Ok(Variant::EnglishSpanish),
            "multilanguage" | "multilingual" | "multi" => Ok(Variant::Multilanguage),
            _ => Err(UnknownToken {
                kind: "variant",
                token: s.to_string(),
            }),
        }
    }
}

/// A variant tag bound to the endpoint that serves it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelVariant {
    pub tag: Variant,
    pub endpoint: EndpointDescriptor,
}

/// One classification outcome for a (record, variant) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub variant: Variant,
    pub predicted: Label,
    pub correct: bool,
    pub raw_response: String,
    pub input_token_count: u64,
    pub output_token_count: u64,
    pub model: String,
    pub prompt_version: String,
}

/// Machine translation of a record. Quality is always `unknown` here; good
/// and bad are assigned by human reviewers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationRecord {
    pub id: String,
    pub translated_text: String,
    pub translation_quality: TranslationQuality,
    pub input_token_count: u64,
    pub output_token_count: u64,
    pub model: String,
    pub prompt_version: String,
}

impl TranslationRecord {
    /// The source record with this translation attached.
    pub fn apply(&self, record: &TweetRecord) -> TweetRecord {
        TweetRecord {
            translated_text: Some(self.translated_text.clone()),
            translation_quality: self.translation_quality,
            ..record.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{message}")]
pub struct TransportError {
    pub message: String,
    pub status: Option<u16>,
    pub retryable: bool,
}

impl TransportError {
    pub fn retryable(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            status: None,
            retryable: true,
        }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            status: None,
            retryable: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("no stance label found in response `{0}`")]
    Unparseable(String),
    #[error("transport failure after {attempts} attempt(s): {source}")]
    Transport {
        attempts: u32,
        #[source]
        source: TransportError,
    },
    #[error("no label could be parsed after {attempts} attempt(s); last response `{last_response}`")]
    ParseFailure { attempts: u32, last_response: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Exponential backoff with jitter, bounded by a fixed attempt count.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Same attempt budget, no waiting between attempts.
    pub fn immediate(max_attempts: u32) -> Self {
        Self {
            max_attempts,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    /// Delay before retry number `retry` (1-based): half the capped
    /// exponential step plus a uniformly random share of the other half.
    pub fn delay(&self, retry: u32) -> Duration {
        let exp = self
            .base_delay
            .saturating_mul(1u32 << retry.saturating_sub(1).min(16))
            .min(self.max_delay);
        if exp.is_zero() {
            return exp;
        }
        let half = exp / 2;
        half + half.mul_f64(rand::rng().random::<f64>())
    }
}

fn request_for(endpoint: &dyn ChatEndpoint, messages: Vec<ChatMessage>) -> ChatRequest {
    ChatRequest {
        model: endpoint.model().to_string(),
        messages,
        temperature: 0.0,
    }
}

fn prompt_tokens(messages: &[ChatMessage]) -> u64 {
    messages.iter().map(|m| count_tokens(&m.content)).sum()
}

/// Sends `request` until `accept` succeeds on a response, retrying transport
/// failures and rejected responses within the policy's attempt budget.
fn with_retries<T>(
    endpoint: &dyn ChatEndpoint,
    request: &ChatRequest,
    policy: &RetryPolicy,
    mut accept: impl FnMut(ChatResponse) -> Result<T, ChatResponse>,
) -> Result<T, InferenceError> {
    let max = policy.max_attempts.max(1);
    let mut attempt = 0;
    loop {
        attempt += 1;
        match endpoint.complete(request) {
            Ok(response) => match accept(response) {
                Ok(value) => return Ok(value),
                Err(rejected) if attempt >= max => {
                    return Err(InferenceError::ParseFailure {
                        attempts: attempt,
                        last_response: rejected.content,
                    })
                }
                Err(_) => {}
            },
            Err(err) => {
                if !err.retryable || attempt >= max {
                    return Err(InferenceError::Transport {
                        attempts: attempt,
                        source: err,
                    });
                }
                std::thread::sleep(policy.delay(attempt));
            }
        }
    }
}

/// Classifies one record with one variant. Each attempt issues exactly one
/// request; the answer is scored against the record's gold label.
pub fn classify(
    endpoint: &dyn ChatEndpoint,
    record: &TweetRecord,
    variant: Variant,
    policy: &RetryPolicy,
) -> Result<PredictionRecord, InferenceError> {
    let messages = build_prompt(record, Task::Classify)?;
    let estimated_input = prompt_tokens(&messages);
    let request = request_for(endpoint, messages);
    with_retries(endpoint, &request, policy, |response| {
        let predicted = match parse_label(&response.content) {
            Ok(label) => label,
            Err(_) => return Err(response),
        };
        let (input_token_count, output_token_count) = match response.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => (estimated_input, count_tokens(&response.content)),
        };
        Ok(PredictionRecord {
            id: record.id.clone(),
            variant,
            predicted,
            correct: predicted == record.label,
            raw_response: response.content,
            input_token_count,
            output_token_count,
            model: endpoint.model().to_string(),
            prompt_version: CLASSIFY_PROMPT_VERSION.to_string(),
        })
    })
}

/// Machine-translates a non-English record into English.
pub fn translate(
    endpoint: &dyn ChatEndpoint,
    record: &TweetRecord,
    policy: &RetryPolicy,
) -> Result<TranslationRecord, InferenceError> {
    if record.language == Language::En {
        return Err(InferenceError::Precondition(format!(
            "record `{}` is already English",
            record.id
        )));
    }
    let messages = build_prompt(record, Task::Translate)?;
    let estimated_input = prompt_tokens(&messages);
    let request = request_for(endpoint, messages);
    with_retries(endpoint, &request, policy, |response| {
        let text = response.content.trim();
        if text.is_empty() {
            return Err(response);
        }
        let (input_token_count, output_token_count) = match response.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => (estimated_input, count_tokens(text)),
        };
        Ok(TranslationRecord {
            id: record.id.clone(),
            translated_text: text.to_string(),
            translation_quality: TranslationQuality::Unknown,
            input_token_count,
            output_token_count,
            model: endpoint.model().to_string(),
            prompt_version: TRANSLATE_PROMPT_VERSION.to_string(),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::sync::Mutex;

    struct Scripted {
        replies: Mutex<Vec<Result<ChatResponse, TransportError>>>,
        calls: AtomicU32,
        last_request: Mutex<Option<ChatRequest>>,
    }

    impl Scripted {
        fn new(mut replies: Vec<Result<ChatResponse, TransportError>>) -> Self {
            replies.reverse();
            Self {
                replies: Mutex::new(replies),
                calls: AtomicU32::new(0),
                last_request: Mutex::new(None),
            }
        }

        fn always(reply: &str) -> Self {
            Self::new((0..10).map(|_| Ok(ChatResponse::text(reply))).collect())
        }
    }

    impl ChatEndpoint for Scripted {
        fn model(&self) -> &str {
            "stub-model"
        }

        fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            *self.last_request.lock().unwrap() = Some(request.clone());
            self.replies
                .lock()
                .unwrap()
                .pop()
                .unwrap_or_else(|| Err(TransportError::fatal("script exhausted")))
        }
    }

    fn record(language: Language, label: Label, text: &str) -> TweetRecord {
        TweetRecord {
            id: "t1".into(),
            text: text.into(),
            language,
            label,
            split: Some(Split::Test),
            translation_quality: TranslationQuality::NotTranslated,
            translated_text: None,
        }
    }

    #[test]
    fn correct_when_answer_matches_gold() {
        let stub = Scripted::always("neutral");
        let r = record(Language::Es, Label::Neutral, "hola");
        let p = classify(&stub, &r, Variant::Spanish, &RetryPolicy::immediate(3)).unwrap();
        assert!(p.correct);
        assert_eq!(p.predicted, Label::Neutral);
        assert_eq!(p.prompt_version, CLASSIFY_PROMPT_VERSION);
        assert_eq!(stub.calls.load(Ordering::SeqCst), 1);
        assert_eq!(p.input_token_count, 76 + 1);
        assert_eq!(p.output_token_count, 2);
        let req = stub.last_request.lock().unwrap().clone().unwrap();
        assert_eq!(req.temperature, 0.0);
        assert_eq!(req.model, "stub-model");
    }

    #[test]
    fn incorrect_when_answer_differs() {
        let stub = Scripted::always("anti-immigration");
        let r = record(Language::Es, Label::Pro, "hola");
        let p = classify(&stub, &r, Variant::Spanish, &RetryPolicy::immediate(3)).unwrap();
        assert!(!p.correct);
        assert_eq!(p.predicted, Label::Anti);
    }

    #[test]
    fn garbage_three_times_is_a_parse_failure() {
        let stub = Scripted::always("I cannot say");
        let r = record(Language::Es, Label::Pro, "hola");
        let err = classify(&stub, &r, Variant::Spanish, &RetryPolicy::immediate(3)).unwrap_err();
        assert_eq!(
            err,
            InferenceError::ParseFailure {
                attempts: 3,
                last_response: "I cannot say".into()
            }
        );
        assert_eq!(stub.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn parse_failure_then_success_recovers() {
        let stub = Scripted::new(vec![Ok(ChatResponse::text("hmm")), Ok(ChatResponse::text("pro"))]);
        let r = record(Language::Es, Label::Pro, "hola");
        let p = classify(&stub, &r, Variant::Spanish, &RetryPolicy::immediate(3)).unwrap();
        assert!(p.correct);
        assert_eq!(stub.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn transport_failures_are_retried_then_surface() {
        let stub = Scripted::new(vec![
            Err(TransportError::retryable("503")),
            Err(TransportError::retryable("503")),
            Err(TransportError::retryable("503")),
        ]);
        let r = record(Language::Es, Label::Pro, "hola");
        let err = translate(&stub, &r, &RetryPolicy::immediate(3)).unwrap_err();
        assert!(matches!(err, InferenceError::Transport { attempts: 3, .. }));
        assert_eq!(stub.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn fatal_transport_errors_are_not_retried() {
        let stub = Scripted::new(vec![Err(TransportError::fatal("401"))]);
        let r = record(Language::Es, Label::Pro, "hola");
        let err = classify(&stub, &r, Variant::English, &RetryPolicy::immediate(3)).unwrap_err();
        assert!(matches!(err, InferenceError::Transport { attempts: 1, .. }));
    }

    #[test]
    fn exact_usage_overrides_estimates() {
        let stub = Scripted::new(vec![Ok(ChatResponse {
            content: "unrelated".into(),
            usage: Some(Usage {
                prompt_tokens: 112,
                completion_tokens: 1,
            }),
        })]);
        let r = record(Language::Es, Label::Unrelated, "hola");
        let p = classify(&stub, &r, Variant::English, &RetryPolicy::immediate(3)).unwrap();
        assert_eq!((p.input_token_count, p.output_token_count), (112, 1));
    }

    #[test]
    fn translation_of_english_is_rejected() {
        let stub = Scripted::always("hello");
        let r = record(Language::En, Label::Pro, "hello");
        assert!(matches!(
            translate(&stub, &r, &RetryPolicy::immediate(3)),
            Err(InferenceError::Precondition(_))
        ));
        assert_eq!(stub.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn translation_is_attached_with_unknown_quality() {
        let stub = Scripted::always("hello");
        let r = record(Language::Es, Label::Pro, "hola");
        let t = translate(&stub, &r, &RetryPolicy::immediate(3)).unwrap();
        assert_eq!(t.translated_text, "hello");
        assert_eq!(t.translation_quality, TranslationQuality::Unknown);
        let msg = &stub.last_request.lock().unwrap().clone().unwrap().messages[1];
        assert_eq!(msg.content, "hola");
        let applied = t.apply(&r);
        assert_eq!(applied.translated_text.as_deref(), Some("hello"));
        applied.validate().unwrap();
    }

    #[test]
    fn backoff_grows_and_is_capped() {
        let policy = RetryPolicy {
            max_attempts: 5,
            base_delay: Duration::from_millis(100),
            max_delay: Duration::from_millis(300),
        };
        let d1 = policy.delay(1);
        assert!(d1 >= Duration::from_millis(50) && d1 <= Duration::from_millis(100));
        let d2 = policy.delay(2);
        assert!(d2 >= Duration::from_millis(100) && d2 <= Duration::from_millis(200));
        let d5 = policy.delay(5);
        assert!(d5 >= Duration::from_millis(150) && d5 <= Duration::from_millis(300));
        assert_eq!(RetryPolicy::immediate(3).delay(2), Duration::ZERO);
    }

    #[test]
    fn variant_tokens_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.token().parse::<Variant>().unwrap(), v);
        }
        assert!("bilingual".parse::<Variant>().is_err());
    }
}
