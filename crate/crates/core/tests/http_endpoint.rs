use std::collections::HashMap;
use std::time::Duration;

use stance_core::corpus::{Label, Language, Split, TranslationQuality, TweetRecord};
use stance_core::inference::stub::{user_text, StubReply, StubServer};
use stance_core::inference::{
    classify, ChatEndpoint, ChatMessage, ChatRequest, EndpointDescriptor, HttpEndpoint, InferenceError, RetryPolicy,
    Role, Variant, CLASSIFY_INSTRUCTIONS,
};

fn endpoint(server: &StubServer, key: Option<&str>) -> HttpEndpoint {
    HttpEndpoint::new(
        EndpointDescriptor::new(server.base_url(), "stub-model"),
        key.map(str::to_string),
        Duration::from_secs(10),
    )
    .unwrap()
}

fn request(text: &str) -> ChatRequest {
    ChatRequest {
        model: "stub-model".into(),
        messages: vec![
            ChatMessage {
                role: Role::System,
                content: "sys".into(),
            },
            ChatMessage {
                role: Role::User,
                content: text.into(),
            },
        ],
        temperature: 0.0,
    }
}

fn record(text: &str, label: Label) -> TweetRecord {
    TweetRecord {
        id: "r1".into(),
        text: text.into(),
        language: Language::En,
        label,
        split: Some(Split::Test),
        translation_quality: TranslationQuality::NotTranslated,
        translated_text: None,
    }
}

#[test]
fn posts_to_chat_completions_with_bearer_token() {
    let server = StubServer::start(|_| {
        StubReply::status(
            200,
            r#"{"choices":[{"message":{"content":"anti"}}],"usage":{"prompt_tokens":90,"completion_tokens":1}}"#,
        )
    })
    .unwrap();
    let ep = endpoint(&server, Some("secret-token"));
    let response = ep.complete(&request("hello")).unwrap();
    assert_eq!(response.content, "anti");
    assert_eq!(response.usage.unwrap().prompt_tokens, 90);
    let seen = server.requests();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].method, "POST");
    assert_eq!(seen[0].path, "/chat/completions");
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer secret-token"));
    assert_eq!(user_text(&seen[0].body).as_deref(), Some("hello"));
}

#[test]
fn no_token_means_no_auth_header() {
    let server = StubServer::start(|_| StubReply::content("neutral")).unwrap();
    endpoint(&server, None).complete(&request("x")).unwrap();
    assert_eq!(server.requests()[0].authorization, None);
}

#[test]
fn status_codes_map_to_retryability() {
    for (status, retryable) in [
        (500, true),
        (503, true),
        (429, true),
        (400, false),
        (401, false),
        (404, false),
    ] {
        let server = StubServer::start(move |_| StubReply::status(status, "{}")).unwrap();
        let err = endpoint(&server, None).complete(&request("x")).unwrap_err();
        assert_eq!(err.status, Some(status));
        assert_eq!(err.retryable, retryable, "HTTP {status}");
    }
}

#[test]
fn malformed_bodies_are_retryable() {
    let server = StubServer::start(|_| StubReply::status(200, "not json")).unwrap();
    assert!(endpoint(&server, None).complete(&request("x")).unwrap_err().retryable);
    let server = StubServer::start(|_| StubReply::status(200, r#"{"choices":[]}"#)).unwrap();
    assert!(endpoint(&server, None).complete(&request("x")).unwrap_err().retryable);
}

#[test]
fn refused_connection_is_retryable() {
    let addr = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap()
    };
    let ep = HttpEndpoint::new(
        EndpointDescriptor::new(format!("http://{addr}"), "m"),
        None,
        Duration::from_secs(2),
    )
    .unwrap();
    let err = ep.complete(&request("x")).unwrap_err();
    assert!(err.retryable);
    assert_eq!(err.status, None);
}

#[test]
fn classify_over_http_retries_transient_failures() {
    let calls = std::sync::Arc::new(std::sync::atomic::AtomicUsize::new(0));
    let counter = std::sync::Arc::clone(&calls);
    let server = StubServer::start(move |_| {
        if counter.fetch_add(1, std::sync::atomic::Ordering::SeqCst) == 0 {
            StubReply::status(503, "busy")
        } else {
            StubReply::content("Pro-immigration")
        }
    })
    .unwrap();
    let ep = endpoint(&server, None);
    let p = classify(
        &ep,
        &record("welcome them", Label::Pro),
        Variant::English,
        &RetryPolicy::immediate(3),
    )
    .unwrap();
    assert_eq!(p.predicted, Label::Pro);
    assert!(p.correct);
    assert_eq!(p.model, "stub-model");
    let seen = server.requests();
    assert_eq!(seen.len(), 2);
    let body: serde_json::Value = serde_json::from_str(&seen[1].body).unwrap();
    assert_eq!(body["messages"][0]["content"], CLASSIFY_INSTRUCTIONS);
    assert_eq!(body["messages"][1]["content"], "welcome them");
    assert_eq!(body["temperature"], 0.0);
}

#[test]
fn fatal_status_is_not_retried() {
    let server = StubServer::start(|_| StubReply::status(401, "nope")).unwrap();
    let err = classify(
        &endpoint(&server, None),
        &record("x", Label::Anti),
        Variant::English,
        &RetryPolicy::immediate(5),
    )
    .unwrap_err();
    assert!(matches!(err, InferenceError::Transport { attempts: 1, .. }));
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn label_table_server_answers_by_text() {
    let table: HashMap<String, String> = [("a".to_string(), "anti".to_string())].into();
    let server = StubServer::label_table(table, "neutral").unwrap();
    let ep = endpoint(&server, None);
    assert_eq!(ep.complete(&request("a")).unwrap().content, "anti");
    assert_eq!(ep.complete(&request("b")).unwrap().content, "neutral");
}
