//! The HTTP surface end to end, with stub generators.

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use opinion_core::backend::{BackendError, BackendKind, Completion, GenerationParams, Generator};
use opinion_core::prompt::RenderedPrompt;
use opinion_core::Bias;
use opinion_server::model::{AnswerStatus, AskRequest, AskResponse, Conversation, ConversationSummary, SharedConversation};
use opinion_server::{router, Gateway, GatewayConfig, Store};
use serde_json::{json, Value};

/// Answers "<subreddit>: <instruction>".
struct Echo;

#[async_trait]
impl Generator for Echo {
    fn kind(&self) -> BackendKind {
        BackendKind::Retrieval
    }

    async fn generate(&self, prompt: &RenderedPrompt, _: &GenerationParams) -> Result<Completion, BackendError> {
        // Later biases finish first, so answers must be put back in order.
        let rank = prompt.bias.map_or(0, |b| Bias::ALL.iter().position(|x| *x == b).unwrap() as u64);
        tokio::time::sleep(Duration::from_millis(40 - 3 * rank)).await;
        Ok(Completion {
            text: format!("{}: {}", prompt.subreddit, prompt.instruction()),
            backend: BackendKind::Retrieval,
            latency_ms: 0,
        })
    }
}

struct Hang;

#[async_trait]
impl Generator for Hang {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    async fn generate(&self, _: &RenderedPrompt, _: &GenerationParams) -> Result<Completion, BackendError> {
        tokio::time::sleep(Duration::from_secs(3600)).await;
        unreachable!()
    }
}

struct Blank;

#[async_trait]
impl Generator for Blank {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    async fn generate(&self, _: &RenderedPrompt, _: &GenerationParams) -> Result<Completion, BackendError> {
        Ok(Completion {
            text: "  ".into(),
            backend: BackendKind::Remote,
            latency_ms: 0,
        })
    }
}

fn gateway(store: &Path) -> Gateway {
    let config = GatewayConfig {
        per_bias_timeout: Duration::from_millis(300),
        ..Default::default()
    };
    Gateway::new(Arc::new(Echo), Store::open(store).unwrap(), config)
}

async fn spawn(gateway: Gateway) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, router(Arc::new(gateway))).await.unwrap() });
    base
}

async fn ask(client: &reqwest::Client, base: &str, body: Value) -> reqwest::Response {
    client.post(format!("{base}/api/ask")).json(&body).send().await.unwrap()
}

async fn get<T: serde::de::DeserializeOwned>(client: &reqwest::Client, url: String) -> T {
    client.get(url).send().await.unwrap().json().await.unwrap()
}

async fn share(client: &reqwest::Client, base: &str, id: impl std::fmt::Display) -> String {
    let body: Value = client.post(format!("{base}/api/conversations/{id}/share")).send().await.unwrap().json().await.unwrap();
    body["share_token"].as_str().unwrap().to_string()
}

const FIGURE_QUESTION: &str = "Give two examples of reputable TV news channels";

#[tokio::test]
async fn four_biases_four_answers_in_request_order() {
    let dir = tempfile::tempdir().unwrap();
    let base = spawn(gateway(&dir.path().join("log"))).await;
    let client = reqwest::Client::new();
    let res = ask(
        &client,
        &base,
        json!({"question": format!("  {FIGURE_QUESTION} "), "bias_ids": ["conservative", "german", "american", "liberal", "german"]}),
    )
    .await;
    assert_eq!(res.status(), 200);
    let body: AskResponse = res.json().await.unwrap();
    let order: Vec<Bias> = body.answers.iter().map(|a| a.bias).collect();
    assert_eq!(order, vec![Bias::Conservative, Bias::German, Bias::American, Bias::Liberal]);
    for a in &body.answers {
        assert_eq!(a.status, AnswerStatus::Ok);
        assert_eq!(a.text, format!("{}: {FIGURE_QUESTION}", a.subreddit_used));
        assert_eq!(a.subreddit_used, a.bias.serving_subreddit());
    }
}

#[tokio::test]
async fn composite_bias_uses_first_source() {
    let dir = tempfile::tempdir().unwrap();
    let base = spawn(gateway(&dir.path().join("log"))).await;
    let body: AskResponse = ask(&reqwest::Client::new(), &base, json!({"question": "Why?", "bias_ids": ["teenager", "people_over_30"]}))
        .await
        .json()
        .await
        .unwrap();
    assert_eq!(body.answers[0].subreddit_used, "AskTeenGirls");
    assert_eq!(body.answers[1].subreddit_used, "AskMenOver30");
}

#[tokio::test]
async fn one_hanging_backend_fails_alone() {
    let dir = tempfile::tempdir().unwrap();
    let gw = gateway(&dir.path().join("log"))
        .with_backend(Bias::American, Arc::new(Hang))
        .with_backend(Bias::Liberal, Arc::new(Blank));
    let base = spawn(gw).await;
    let started = std::time::Instant::now();
    let body: AskResponse = ask(
        &reqwest::Client::new(),
        &base,
        json!({"question": FIGURE_QUESTION, "bias_ids": ["german", "american", "liberal", "conservative"]}),
    )
    .await
    .json()
    .await
    .unwrap();
    assert!(started.elapsed() < Duration::from_secs(3));
    let statuses: Vec<AnswerStatus> = body.answers.iter().map(|a| a.status).collect();
    use AnswerStatus::{Error, Ok};
    assert_eq!(statuses, vec![Ok, Error, Error, Ok]);
    assert!(body.answers[1].error_detail.as_deref().unwrap().contains("timed out"));
    assert_eq!(body.answers[2].error_detail.as_deref(), Some("empty completion"));
    assert!(body.answers[0].error_detail.is_none());
}

#[tokio::test]
async fn validation_lists_offending_fields() {
    let dir = tempfile::tempdir().unwrap();
    let base = spawn(gateway(&dir.path().join("log"))).await;
    let client = reqwest::Client::new();

    let res = ask(&client, &base, json!({"question": "   ", "bias_ids": ["german", "martian"], "params": {"max_tokens": 0}})).await;
    assert_eq!(res.status(), 400);
    let body: Value = res.json().await.unwrap();
    let fields: Vec<&str> = body["fields"].as_array().unwrap().iter().map(|f| f["field"].as_str().unwrap()).collect();
    assert_eq!(fields, vec!["question", "bias_ids", "params.max_tokens"]);
    assert!(body["fields"][1]["message"].as_str().unwrap().contains("martian"));

    let res = ask(&client, &base, json!({"question": "x".repeat(2001), "bias_ids": []})).await;
    assert_eq!(res.status(), 400);
    let body: Value = res.json().await.unwrap();
    assert_eq!(body["fields"].as_array().unwrap().len(), 2);

    let res = ask(&client, &base, json!({"question": "y".repeat(2000), "bias_ids": ["male"]})).await;
    assert_eq!(res.status(), 200);

    let res = client
        .post(format!("{base}/api/ask"))
        .header("content-type", "application/json")
        .body("{nope")
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 400);

    let res = ask(&client, &base, json!({"question": "Q?", "bias_ids": ["male"], "conversation_id": uuid::Uuid::new_v4()})).await;
    assert_eq!(res.status(), 404);
    assert_eq!(res.json::<Value>().await.unwrap()["error"], "not_found");
}

#[tokio::test]
async fn history_counts() {
    let dir = tempfile::tempdir().unwrap();
    let base = spawn(gateway(&dir.path().join("log"))).await;
    let client = reqwest::Client::new();
    let list = format!("{base}/api/conversations");
    assert!(get::<Vec<ConversationSummary>>(&client, list.clone()).await.is_empty());

    let first: AskResponse = ask(&client, &base, json!({"question": "First?", "bias_ids": ["german"]})).await.json().await.unwrap();
    ask(&client, &base, json!({"question": "Again?", "bias_ids": ["male"], "conversation_id": first.conversation_id})).await;
    let summaries: Vec<ConversationSummary> = get(&client, list.clone()).await;
    assert_eq!(summaries.len(), 1);
    assert_eq!(summaries[0].turn_count, 2);
    assert_eq!(summaries[0].title, "First?");

    let second: AskResponse = ask(&client, &base, json!({"question": "Other?", "bias_ids": ["german"]})).await.json().await.unwrap();
    let summaries: Vec<ConversationSummary> = get(&client, list).await;
    assert_eq!(summaries.len(), 2);
    assert_eq!(summaries[0].id, second.conversation_id, "newest first");

    let conv: Conversation = get(&client, format!("{base}/api/conversations/{}", first.conversation_id)).await;
    let questions: Vec<&str> = conv.turns.iter().map(|t| t.question.as_str()).collect();
    assert_eq!(questions, vec!["First?", "Again?"]);
    assert_eq!(client.get(format!("{base}/api/conversations/not-a-uuid")).send().await.unwrap().status(), 404);
}

#[tokio::test]
async fn share_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log");
    let client = reqwest::Client::new();

    let (id, token, before) = {
        let base = spawn(gateway(&log)).await;
        let res: AskResponse = ask(&client, &base, json!({"question": FIGURE_QUESTION, "bias_ids": ["german", "american"]}))
            .await
            .json()
            .await
            .unwrap();
        let token = share(&client, &base, res.conversation_id).await;
        assert_eq!(share(&client, &base, res.conversation_id).await, token);
        let before: Conversation = get(&client, format!("{base}/api/conversations/{}", res.conversation_id)).await;
        (res.conversation_id, token, before)
    };

    // A second gateway over the same log stands in for a restarted process.
    let base = spawn(gateway(&log)).await;
    let after: Conversation = get(&client, format!("{base}/api/conversations/{id}")).await;
    assert_eq!(after, before);
    let shared: SharedConversation = get(&client, format!("{base}/api/share/{token}")).await;
    assert_eq!(shared.turns, before.turns);
    let raw: Value = get(&client, format!("{base}/api/share/{token}")).await;
    assert!(raw.get("id").is_none(), "share view must not expose the conversation id");
    assert_eq!(share(&client, &base, id).await, token);
    assert_eq!(client.get(format!("{base}/api/share/AAAAAAAAAAAAAAAAAAAAAA")).send().await.unwrap().status(), 404);
}

#[tokio::test]
async fn biases_listing() {
    let dir = tempfile::tempdir().unwrap();
    let base = spawn(gateway(&dir.path().join("log"))).await;
    let rows: Vec<Value> = get(&reqwest::Client::new(), format!("{base}/api/biases")).await;
    assert_eq!(rows.len(), 13);
    assert_eq!(rows[0]["bias"], "german");
    assert_eq!(rows[0]["subreddit"], "AskAGerman");
    assert_eq!(rows[0]["quota"], 25000);
}

#[tokio::test]
async fn concurrent_asks_keep_turns_whole() {
    let dir = tempfile::tempdir().unwrap();
    let gw = Arc::new(gateway(&dir.path().join("log")));
    let first = gw.ask(AskRequest::new("seed?", &[Bias::German])).await.unwrap();
    let tasks: Vec<_> = (0..12)
        .map(|i| {
            let gw = gw.clone();
            let mut req = AskRequest::new(format!("q{i}?"), &[Bias::German, Bias::Male]);
            if i % 2 == 0 {
                req.conversation_id = Some(first.conversation_id.to_string());
            }
            tokio::spawn(async move { gw.ask(req).await.unwrap() })
        })
        .collect();
    for t in tasks {
        t.await.unwrap();
    }
    let conv = gw.conversation(first.conversation_id).unwrap();
    assert_eq!(conv.turns.len(), 7);
    for turn in &conv.turns[1..] {
        assert_eq!(turn.answers.len(), 2);
        for a in &turn.answers {
            assert!(a.text.ends_with(&turn.question), "{a:?} vs {}", turn.question);
        }
    }
    assert_eq!(gw.history().len(), 7);
}
