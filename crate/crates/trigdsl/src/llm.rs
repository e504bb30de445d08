//! Natural-language query → validated trigger IR via a chat-completion
//! endpoint.
//!
//! The prompt is a fixed template: a system message carrying the trigger
//! grammar, worked IR examples, the predicate registry signatures, and the
//! declared topics, followed by the user's query. The model is asked for a
//! single JSON object — the IR — which is parsed and validated; diagnostics
//! feed back into up to two repair rounds ([`MAX_ATTEMPTS`] total).
//!
//! Transports are pluggable behind [`LlmTransport`]. [`HttpTransport`]
//! speaks chat-completion JSON over HTTP; [`RecordingTransport`] and
//! [`ReplayTransport`] persist and serve fixtures keyed by the request
//! hash, so the whole test suite runs with networking disabled.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ir::{from_json, validate, TriggerIr};
use crate::predicates::PredicateRegistry;
use crate::topic::TopicSet;

/// Chat endpoint URL, e.g. `https://host/v1/chat/completions`.
pub const LLM_URL_ENV: &str = "TRIGDSL_LLM_URL";
/// Model name sent in the request body.
pub const LLM_MODEL_ENV: &str = "TRIGDSL_LLM_MODEL";
/// Optional bearer token.
pub const LLM_KEY_ENV: &str = "TRIGDSL_LLM_KEY";

/// Total generation attempts: one initial plus two repair rounds.
pub const MAX_ATTEMPTS: usize = 3;

/// Endpoint-default sampling temperature.
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

pub const DEFAULT_LLM_TIMEOUT: Duration = Duration::from_secs(30);

/// The trigger language, as given to the model verbatim.
pub const GRAMMAR: &str = r#"TriggerSpec     ::= "TRIGGER" Identifier [SpecList] "{" ConditionExpr "}"
SpecList        ::= "(" SpecEntry {"," SpecEntry} ")"
SpecEntry       ::= Identifier "=" Value
ConditionExpr   ::= AtomicExpr {AtomicExpr}
AtomicExpr      ::= ["NOT"] Predicate ["AS" Identifier]
Predicate       ::= "PREDICATE" "(" PredicateType ["," PredicateArgs] ")"
PredicateType   ::= Identifier
PredicateArgs   ::= ComparatorExpr | ArgList
ArgList         ::= Arg {"," Arg}
Arg             ::= Value | Identifier "=" Value
ComparatorExpr  ::= Comparator Value
Comparator      ::= "=" | "!=" | "<" | ">"
Value           ::= String | Number | Boolean | Identifier"#;

/// Worked DSL → IR translations included in the system prompt. Their JSON is
/// exactly what the compiler emits (enforced by a test).
pub const EXAMPLES: &str = r#"Query: "I need data with more than 5 persons"

TRIGGER crowd (frequency=2) {
  PREDICATE(detect, class="person") AS persons
  PREDICATE(count, on="persons", > 5)
}

IR:

{
  "type": "trigger",
  "name": "crowd",
  "spec": {
    "frequency": 2
  },
  "predicates": [
    {
      "type": "detect",
      "target": {
        "class": "person"
      },
      "store_as": "persons"
    },
    {
      "type": "count",
      "on": "persons",
      "comparison": {
        "operator": ">",
        "value": 5
      }
    }
  ]
}

Query: "I want to find images with stop signs"

TRIGGER stop_signs {
  PREDICATE(detect, class="stop sign")
}

IR:

{
  "type": "trigger",
  "name": "stop_signs",
  "predicates": [
    {
      "type": "detect",
      "target": {
        "class": "stop sign"
      }
    }
  ]
}"#;

/// One generation task: what to ask and under which sampling settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub query: String,
    /// Full system message; always includes the predicate registry.
    pub system_context: String,
    pub seed: Option<u64>,
    pub temperature: f64,
}

/// A successful generation: the validated IR plus its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    /// Validates with zero errors against the registry used to generate.
    pub ir: TriggerIr,
    /// The raw model response the IR was parsed from.
    pub raw_response: String,
    /// 1-based attempt count that produced `ir`.
    pub attempts: usize,
    /// Diagnostics of each failed attempt, in order.
    pub diagnostics_history: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        ChatMessage {
            role: role.to_string(),
            content: content.into(),
        }
    }
}

/// The transport-level request. Deliberately excludes the model name so
/// recorded fixtures stay valid across deployments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Content hash that names a fixture file: sha256 over the canonical JSON
/// serialization of the request.
pub fn request_key(request: &ChatRequest) -> String {
    let canonical = serde_json::to_string(request).expect("ChatRequest serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("malformed endpoint response: {0}")]
    BadResponse(String),
    #[error("REPLAY_MISS: no fixture for request {key}")]
    ReplayMiss { key: String },
    #[error("fixture store: {0}")]
    Io(#[from] std::io::Error),
}

/// One round-trip to a chat-completion model, returning the assistant text.
pub trait LlmTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("no valid IR after {attempts} attempts")]
    Exhausted {
        attempts: usize,
        diagnostics_history: Vec<Vec<String>>,
    },
}

/// Builds the deterministic system message: grammar, worked examples,
/// registry signatures, and the declared topics.
pub fn system_context(registry: &PredicateRegistry, topics: &TopicSet) -> String {
    let mut out = String::new();
    out.push_str(
        "You translate data collection requests into trigger IR for a vehicle \
         data recorder.\n\nThe trigger language grammar:\n\n",
    );
    out.push_str(GRAMMAR);
    out.push_str("\n\nTriggers compile to JSON IR. Worked examples:\n\n");
    out.push_str(EXAMPLES);
    out.push_str("\n\nAvailable predicates:\n\n");
    out.push_str(&registry.describe());
    out.push_str("\nAvailable topics:\n\n");
    for topic in topics.iter() {
        out.push_str(&format!("{} ({})", topic.name, topic.kind.as_str()));
        if let Some(unit) = &topic.unit {
            out.push_str(&format!(" [{unit}]"));
        }
        out.push('\n');
    }
    out.push_str(
        "\nRespond with exactly one JSON object: the IR of one trigger. \
         No prose, no code fences.\n",
    );
    out
}

/// Runs the generate → parse → validate → repair loop.
pub fn generate(
    request: &GenerationRequest,
    transport: &dyn LlmTransport,
    registry: &PredicateRegistry,
) -> Result<GenerationResult, LlmError> {
    let mut messages = vec![
        ChatMessage::new("system", &request.system_context),
        ChatMessage::new("user", &request.query),
    ];
    let mut diagnostics_history: Vec<Vec<String>> = Vec::new();

    for attempt in 1..=MAX_ATTEMPTS {
        let raw = transport.complete(&ChatRequest {
            messages: messages.clone(),
            temperature: request.temperature,
            seed: request.seed,
        })?;
        match parse_and_validate(&raw, registry) {
            Ok(ir) => {
                return Ok(GenerationResult {
                    ir,
                    raw_response: raw,
                    attempts: attempt,
                    diagnostics_history,
                })
            }
            Err(diagnostics) => {
                messages.push(ChatMessage::new("assistant", &raw));
                messages.push(ChatMessage::new("user", repair_prompt(&diagnostics)));
                diagnostics_history.push(diagnostics);
            }
        }
    }
    Err(LlmError::Exhausted {
        attempts: MAX_ATTEMPTS,
        diagnostics_history,
    })
}

/// Two independent generations of the same query under different seeds, for
/// downstream consistency scoring.
pub fn consistency_probe(
    query: &str,
    system_context: &str,
    temperature: f64,
    seeds: [u64; 2],
    transport: &dyn LlmTransport,
    registry: &PredicateRegistry,
) -> Result<(GenerationResult, GenerationResult), LlmError> {
    let request = |seed: u64| GenerationRequest {
        query: query.to_string(),
        system_context: system_context.to_string(),
        seed: Some(seed),
        temperature,
    };
    let first = generate(&request(seeds[0]), transport, registry)?;
    let second = generate(&request(seeds[1]), transport, registry)?;
    Ok((first, second))
}

fn parse_and_validate(raw: &str, registry: &PredicateRegistry) -> Result<TriggerIr, Vec<String>> {
    let ir = from_json(extract_json(raw)).map_err(|d| vec![d.to_string()])?;
    let errors: Vec<String> = validate(&ir, registry)
        .iter()
        .filter(|d| d.is_error())
        .map(ToString::to_string)
        .collect();
    if errors.is_empty() {
        Ok(ir)
    } else {
        Err(errors)
    }
}

/// Models often wrap JSON in Markdown fences despite instructions; strip one
/// surrounding fence pair when present.
fn extract_json(raw: &str) -> &str {
    let trimmed = raw.trim();
    let Some(inner) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    let Some(inner) = inner.strip_suffix("```") else {
        return trimmed;
    };
    // Drop a language tag such as `json` on the opening fence line.
    match inner.split_once('\n') {
        Some((_tag, body)) => body.trim(),
        None => inner.trim(),
    }
}

fn repair_prompt(diagnostics: &[String]) -> String {
    let mut prompt =
        String::from("The previous response was not a valid trigger IR. Problems:\n");
    for diagnostic in diagnostics {
        prompt.push_str("- ");
        prompt.push_str(diagnostic);
        prompt.push('\n');
    }
    prompt.push_str("Return the corrected JSON object only.");
    prompt
}

/// Chat-completion JSON over HTTP. The request body is
/// `{"model", "messages", "temperature", "seed"?}`; the assistant text is
/// read from `choices[0].message.content`.
pub struct HttpTransport {
    url: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        HttpTransport {
            url: url.into(),
            model: model.into(),
            api_key,
            client: reqwest::blocking::Client::builder()
                .timeout(DEFAULT_LLM_TIMEOUT)
                .build()
                .expect("client builds"),
        }
    }

    /// Reads `TRIGDSL_LLM_URL` (required), `TRIGDSL_LLM_MODEL` (default
    /// "default"), and `TRIGDSL_LLM_KEY` (optional).
    pub fn from_env() -> Result<Self, TransportError> {
        let url = std::env::var(LLM_URL_ENV)
            .map_err(|_| TransportError::Unreachable(format!("{LLM_URL_ENV} is not set")))?;
        let model = std::env::var(LLM_MODEL_ENV).unwrap_or_else(|_| "default".to_string());
        let api_key = std::env::var(LLM_KEY_ENV).ok();
        Ok(HttpTransport::new(url, model, api_key))
    }
}

impl LlmTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": request.messages,
            "temperature": request.temperature,
        });
        if let Some(seed) = request.seed {
            body["seed"] = serde_json::json!(seed);
        }
        let mut http = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let response: serde_json::Value = http
            .send()
            .map_err(|e| TransportError::Unreachable(e.to_string()))?
            .error_for_status()
            .map_err(|e| TransportError::BadResponse(e.to_string()))?
            .json()
            .map_err(|e| TransportError::BadResponse(e.to_string()))?;
        response["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                TransportError::BadResponse("missing choices[0].message.content".to_string())
            })
    }
}

/// One persisted exchange: the request (for auditability and collision
/// checks) and the raw response text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub request: ChatRequest,
    pub response: String,
}

/// Wraps a live transport and persists every exchange as
/// `<sha256(request)>.json` under the fixture directory.
pub struct RecordingTransport {
    inner: Box<dyn LlmTransport>,
    dir: PathBuf,
}

impl RecordingTransport {
    pub fn new(inner: Box<dyn LlmTransport>, dir: impl Into<PathBuf>) -> Result<Self, TransportError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(RecordingTransport { inner, dir })
    }
}

impl LlmTransport for RecordingTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let response = self.inner.complete(request)?;
        let fixture = Fixture {
            request: request.clone(),
            response: response.clone(),
        };
        let path = self.dir.join(format!("{}.json", request_key(request)));
        let mut text = serde_json::to_string_pretty(&fixture).expect("fixture serializes");
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(response)
    }
}

/// Serves recorded responses only; a request without a fixture is a
/// `REPLAY_MISS` error. This is the transport the test suite runs on.
pub struct ReplayTransport {
    dir: PathBuf,
}

impl ReplayTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayTransport { dir: dir.into() }
    }
}

impl LlmTransport for ReplayTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let key = request_key(request);
        let path = self.dir.join(format!("{key}.json"));
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(TransportError::ReplayMiss { key })
            }
            Err(e) => return Err(e.into()),
        };
        let fixture: Fixture = serde_json::from_str(&text)
            .map_err(|e| TransportError::BadResponse(format!("fixture {key}: {e}")))?;
        if fixture.request != *request {
            return Err(TransportError::BadResponse(format!(
                "fixture {key} was recorded for a different request"
            )));
        }
        Ok(fixture.response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_one;
    use crate::ir::{compile, to_json};
    use crate::topic::{Topic, TopicKind};
    use std::collections::VecDeque;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::sync::Mutex;

    /// Scripted transport: pops canned responses and records what it saw.
    #[derive(Default)]
    struct Script {
        responses: Mutex<VecDeque<String>>,
        seen: Mutex<Vec<ChatRequest>>,
    }

    impl Script {
        fn of(responses: &[&str]) -> Self {
            Script {
                responses: Mutex::new(responses.iter().map(|s| s.to_string()).collect()),
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    impl LlmTransport for Script {
        fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
            self.seen.lock().unwrap().push(request.clone());
            self.responses
                .lock()
                .unwrap()
                .pop_front()
                .ok_or_else(|| TransportError::Unreachable("script exhausted".to_string()))
        }
    }

    fn registry() -> PredicateRegistry {
        PredicateRegistry::with_builtins()
    }

    fn topics() -> TopicSet {
        [Topic {
            name: "camera_front".to_string(),
            kind: TopicKind::Image,
            unit: None,
        }]
        .into_iter()
        .collect()
    }

    fn request(query: &str) -> GenerationRequest {
        GenerationRequest {
            query: query.to_string(),
            system_context: system_context(&registry(), &topics()),
            seed: Some(7),
            temperature: DEFAULT_TEMPERATURE,
        }
    }

    const VALID_IR: &str = r#"{
        "type": "trigger",
        "name": "stop_signs",
        "predicates": [
            {"type": "detect", "target": {"class": "stop sign"}}
        ]
    }"#;

    #[test]
    fn prompt_examples_match_the_compiler_exactly() {
        // Every IR block in EXAMPLES is the canonical compilation of the DSL
        // text above it.
        let crowd = to_json(&compile(
            &parse_one(
                r#"TRIGGER crowd (frequency=2) {
                     PREDICATE(detect, class="person") AS persons
                     PREDICATE(count, on="persons", > 5)
                   }"#,
            )
            .unwrap(),
        ));
        let stop = to_json(&compile(
            &parse_one(r#"TRIGGER stop_signs { PREDICATE(detect, class="stop sign") }"#).unwrap(),
        ));
        assert!(EXAMPLES.contains(crowd.trim_end()), "crowd IR drifted");
        assert!(EXAMPLES.contains(stop.trim_end()), "stop_signs IR drifted");
    }

    #[test]
    fn system_context_lists_grammar_registry_and_topics() {
        let context = system_context(&registry(), &topics());
        assert!(context.contains("TRIGGER"));
        assert!(context.contains("ComparatorExpr"));
        for name in registry().names() {
            assert!(context.contains(name), "missing predicate {name}");
        }
        assert!(context.contains("camera_front (image)"));
    }

    #[test]
    fn first_attempt_success() {
        let transport = Script::of(&[VALID_IR]);
        let result = generate(&request("find stop signs"), &transport, &registry()).unwrap();
        assert_eq!(result.ir.name, "stop_signs");
        assert_eq!(result.attempts, 1);
        assert!(result.diagnostics_history.is_empty());
        assert_eq!(result.raw_response, VALID_IR);
        assert!(validate(&result.ir, &registry()).iter().all(|d| !d.is_error()));

        // The prompt is the fixed two-message template.
        let seen = transport.seen.lock().unwrap();
        assert_eq!(seen[0].messages.len(), 2);
        assert_eq!(seen[0].messages[0].role, "system");
        assert_eq!(seen[0].messages[1].content, "find stop signs");
        assert_eq!(seen[0].seed, Some(7));
    }

    #[test]
    fn code_fences_are_tolerated() {
        let fenced = format!("```json\n{VALID_IR}\n```");
        let transport = Script::of(&[&fenced]);
        let result = generate(&request("q"), &transport, &registry()).unwrap();
        assert_eq!(result.ir.name, "stop_signs");
    }

    #[test]
    fn repair_loop_feeds_diagnostics_back() {
        let bad_ir = r#"{"type": "trigger", "name": "t", "predicates": [{"type": "teleport"}]}"#;
        let transport = Script::of(&["not json at all", bad_ir, VALID_IR]);
        let result = generate(&request("q"), &transport, &registry()).unwrap();
        assert_eq!(result.attempts, 3);
        assert_eq!(result.diagnostics_history.len(), 2);
        assert!(result.diagnostics_history[1]
            .iter()
            .any(|d| d.contains("teleport")));

        // Round 3 carries the full conversation: system, user, then one
        // assistant echo + repair prompt per failed round.
        let seen = transport.seen.lock().unwrap();
        assert_eq!(seen[2].messages.len(), 6);
        assert_eq!(seen[2].messages[2].content, "not json at all");
        assert!(seen[2].messages[3].content.contains("Problems:"));
        assert!(seen[2].messages[5].content.contains("teleport"));
    }

    #[test]
    fn exhausted_attempts_return_the_history() {
        let transport = Script::of(&["nope", "still nope", "never"]);
        let error = generate(&request("q"), &transport, &registry()).unwrap_err();
        match error {
            LlmError::Exhausted {
                attempts,
                diagnostics_history,
            } => {
                assert_eq!(attempts, 3);
                assert_eq!(diagnostics_history.len(), 3);
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn transport_failure_aborts_immediately() {
        let transport = Script::of(&[]);
        let error = generate(&request("q"), &transport, &registry()).unwrap_err();
        assert!(matches!(error, LlmError::Transport(_)));
    }

    #[test]
    fn request_key_is_deterministic_and_seed_sensitive() {
        let chat = |seed| ChatRequest {
            messages: vec![ChatMessage::new("user", "q")],
            temperature: 1.0,
            seed,
        };
        assert_eq!(request_key(&chat(Some(1))), request_key(&chat(Some(1))));
        assert_ne!(request_key(&chat(Some(1))), request_key(&chat(Some(2))));
        assert_ne!(request_key(&chat(Some(1))), request_key(&chat(None)));
    }

    #[test]
    fn record_then_replay_round_trips_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let exotic = "```json\n{\"weird\": \"ünïcode\\n\"}\n```  trailing";
        let recorder =
            RecordingTransport::new(Box::new(Script::of(&[exotic])), dir.path()).unwrap();
        let chat = ChatRequest {
            messages: vec![ChatMessage::new("user", "q")],
            temperature: 0.3,
            seed: Some(42),
        };
        let live = recorder.complete(&chat).unwrap();
        assert_eq!(live, exotic);

        // The fixture is named by the request hash.
        let path = dir.path().join(format!("{}.json", request_key(&chat)));
        assert!(path.exists());

        let replay = ReplayTransport::new(dir.path());
        assert_eq!(replay.complete(&chat).unwrap(), exotic);

        // Any request drift misses.
        let other = ChatRequest {
            seed: Some(43),
            ..chat.clone()
        };
        match replay.complete(&other).unwrap_err() {
            TransportError::ReplayMiss { key } => assert_eq!(key, request_key(&other)),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn consistency_probe_generates_twice() {
        let transport = Script::of(&[VALID_IR, VALID_IR]);
        let (first, second) = consistency_probe(
            "find stop signs",
            &system_context(&registry(), &topics()),
            DEFAULT_TEMPERATURE,
            [1, 2],
            &transport,
            &registry(),
        )
        .unwrap();
        assert_eq!(first.ir, second.ir);
        let seen = transport.seen.lock().unwrap();
        assert_eq!(seen[0].seed, Some(1));
        assert_eq!(seen[1].seed, Some(2));

        // Endpoint failure on the second call surfaces as an error.
        let transport = Script::of(&[VALID_IR]);
        let error = consistency_probe(
            "q",
            "ctx",
            DEFAULT_TEMPERATURE,
            [1, 2],
            &transport,
            &registry(),
        )
        .unwrap_err();
        assert!(matches!(error, LlmError::Transport(_)));
    }

    /// Minimal loopback chat-completion server: accepts one request, checks
    /// nothing, answers with a canned completion.
    fn one_shot_server(content: &str) -> (String, std::thread::JoinHandle<String>) {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let body = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}]
        })
        .to_string();
        let handle = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut line = String::new();
            let mut content_length = 0usize;
            loop {
                line.clear();
                reader.read_line(&mut line).unwrap();
                if let Some(rest) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    content_length = rest.trim().parse().unwrap();
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut request_body = vec![0u8; content_length];
            reader.read_exact(&mut request_body).unwrap();
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                body.len(),
                body
            )
            .unwrap();
            String::from_utf8(request_body).unwrap()
        });
        (url, handle)
    }

    #[test]
    fn http_transport_speaks_chat_completion_json() {
        let (url, server) = one_shot_server(VALID_IR);
        let transport = HttpTransport::new(url, "test-model", Some("sekret".to_string()));
        let chat = ChatRequest {
            messages: vec![
                ChatMessage::new("system", "ctx"),
                ChatMessage::new("user", "find stop signs"),
            ],
            temperature: 0.7,
            seed: Some(11),
        };
        let response = transport.complete(&chat).unwrap();
        assert_eq!(response, VALID_IR);

        let request_body: serde_json::Value =
            serde_json::from_str(&server.join().unwrap()).unwrap();
        assert_eq!(request_body["model"], "test-model");
        assert_eq!(request_body["temperature"], 0.7);
        assert_eq!(request_body["seed"], 11);
        assert_eq!(request_body["messages"][1]["content"], "find stop signs");
    }

    #[test]
    fn http_transport_reports_unreachable_endpoints() {
        // A port nothing listens on: connection refused, not a hang.
        let transport = HttpTransport::new("http://127.0.0.1:1/v1/none", "m", None);
        let chat = ChatRequest {
            messages: vec![ChatMessage::new("user", "q")],
            temperature: 1.0,
            seed: None,
        };
        assert!(matches!(
            transport.complete(&chat).unwrap_err(),
            TransportError::Unreachable(_)
        ));
    }
}
