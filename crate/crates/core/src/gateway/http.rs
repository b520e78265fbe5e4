use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::vlm::{describe_prompt, parse_side_reply, side_prompt};
use super::{BackendUsage, Planner, PlannerContext, PlannerReply, SideAnswer, Vlm, DEFAULT_MAX_TOKENS};
use crate::codec::approx_tokens;
use crate::error::{ConfigError, GatewayError};
use crate::sim::SimEnv;

pub const ENV_API_BASE: &str = "DADUE_API_BASE";
pub const ENV_API_KEY: &str = "DADUE_API_KEY";
pub const ENV_MODEL: &str = "DADUE_MODEL";
pub const ENV_VLM_MODEL: &str = "DADUE_VLM_MODEL";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub max_tokens: u32,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubles afterwards.
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, initial_backoff: Duration::from_secs(1), timeout: Duration::from_secs(30) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Base URL; `/chat/completions` is appended.
    pub api_base: String,
    pub api_key: Option<String>,
    pub model: String,
    pub vlm_model: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub retry: RetryPolicy,
}

impl HttpConfig {
    pub fn new(api_base: impl Into<String>, model: impl Into<String>) -> Self {
        let model = model.into();
        Self {
            api_base: api_base.into(),
            api_key: None,
            vlm_model: model.clone(),
            model,
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: 0.0,
            retry: RetryPolicy::default(),
        }
    }

    /// Reads the endpoint settings from the environment.
    pub fn from_env() -> Result<Self, ConfigError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let base = var(ENV_API_BASE).ok_or_else(|| ConfigError::Invalid(format!("{ENV_API_BASE} is not set")))?;
        let model = var(ENV_MODEL).ok_or_else(|| ConfigError::Invalid(format!("{ENV_MODEL} is not set")))?;
        let mut cfg = Self::new(base, model);
        cfg.api_key = var(ENV_API_KEY);
        if let Some(v) = var(ENV_VLM_MODEL) {
            cfg.vlm_model = v;
        }
        Ok(cfg)
    }
}

/// Chat-completions client. Cheap to clone; clones share one connection
/// pool.
#[derive(Debug, Clone)]
pub struct ChatClient {
    config: HttpConfig,
    http: reqwest::blocking::Client,
}

/// Raw exchange plus the parsed first choice.
#[derive(Debug, Clone)]
pub struct ChatExchange {
    pub request: String,
    pub response: String,
    pub content: String,
    pub usage: BackendUsage,
}

impl ChatClient {
    pub fn new(config: HttpConfig) -> Result<Self, GatewayError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(config.retry.timeout)
            .build()
            .map_err(|e| GatewayError::Transport { attempts: 0, message: e.to_string() })?;
        Ok(Self { config, http })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.api_base.trim_end_matches('/'))
    }

    pub fn request_for(&self, model: &str, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            model: model.to_string(),
            messages,
            max_tokens: self.config.max_tokens,
            temperature: self.config.temperature,
        }
    }

    /// Sends one request, retrying transport errors, 429 and 5xx.
    pub fn send(&self, request: &ChatRequest) -> Result<ChatExchange, GatewayError> {
        let body = serde_json::to_string(request).expect("request serializes");
        let policy = &self.config.retry;
        let started = Instant::now();
        let mut backoff = policy.initial_backoff;
        let mut last = GatewayError::Transport { attempts: 0, message: "no attempt made".into() };
        for attempt in 1..=policy.attempts.max(1) {
            if attempt > 1 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            let mut req = self
                .http
                .post(self.url())
                .header("content-type", "application/json")
                .body(body.clone());
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Err(e) => last = GatewayError::Transport { attempts: attempt, message: e.to_string() },
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().unwrap_or_default();
                    if status.is_success() {
                        let (content, usage) = parse_completion(&text, request, started.elapsed())?;
                        return Ok(ChatExchange { request: body, response: text, content, usage });
                    }
                    last = GatewayError::BadStatus(status.as_u16());
                    if !(status.is_server_error() || status.as_u16() == 429) {
                        return Err(last);
                    }
                }
            }
        }
        Err(last)
    }
}

fn parse_completion(text: &str, request: &ChatRequest, elapsed: Duration) -> Result<(String, BackendUsage), GatewayError> {
    let root: Value = serde_json::from_str(text).map_err(|_| GatewayError::ParseFail(text.to_string()))?;
    let content = root
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::ParseFail(text.to_string()))?
        .to_string();
    let count = |key: &str| root.pointer(&format!("/usage/{key}")).and_then(Value::as_u64);
    let prompt_proxy: usize = request.messages.iter().map(|m| approx_tokens(&m.content)).sum();
    let usage = BackendUsage {
        prompt_tokens: count("prompt_tokens").unwrap_or(prompt_proxy as u64),
        completion_tokens: count("completion_tokens").unwrap_or(approx_tokens(&content) as u64),
        wall_time: elapsed.as_secs_f64(),
    };
    Ok((content, usage))
}

/// Planner conversation replayed in full on every request.
#[derive(Debug, Clone)]
pub struct HttpPlanner {
    client: ChatClient,
    history: Vec<ChatMessage>,
}

impl HttpPlanner {
    pub fn new(client: ChatClient) -> Self {
        Self { client, history: Vec::new() }
    }

    pub fn history(&self) -> &[ChatMessage] {
        &self.history
    }

    fn exchange(&mut self, message: &str) -> Result<PlannerReply, GatewayError> {
        let mut messages = self.history.clone();
        messages.push(ChatMessage::user(message));
        let request = self.client.request_for(&self.client.config().model, messages.clone());
        let ex = self.client.send(&request)?;
        messages.push(ChatMessage::assistant(ex.content.clone()));
        self.history = messages;
        Ok(PlannerReply {
            text: ex.content,
            usage: ex.usage,
            raw_request: Some(ex.request),
            raw_response: Some(ex.response),
        })
    }
}

impl Planner for HttpPlanner {
    fn name(&self) -> &str {
        "http"
    }

    fn initial(&mut self, prompt: &str, _ctx: &PlannerContext<'_>) -> Result<PlannerReply, GatewayError> {
        self.history.clear();
        self.exchange(prompt)
    }

    fn step(&mut self, feedback: &str, _ctx: &PlannerContext<'_>) -> Result<PlannerReply, GatewayError> {
        self.exchange(feedback)
    }
}

/// Vision queries sent as text to the configured vision model.
#[derive(Debug, Clone)]
pub struct HttpVlm {
    client: ChatClient,
}

impl HttpVlm {
    pub fn new(client: ChatClient) -> Self {
        Self { client }
    }

    fn ask(&self, object: &str, env: &SimEnv, prompt: String) -> Result<ChatExchange, GatewayError> {
        if env.locate_visible(object).is_err() {
            return Err(GatewayError::ObjectNotVisible(object.to_string()));
        }
        let request = self.client.request_for(&self.client.config().vlm_model, vec![ChatMessage::user(prompt)]);
        self.client.send(&request)
    }
}

impl Vlm for HttpVlm {
    fn table_side(&mut self, object: &str, env: &SimEnv) -> Result<(SideAnswer, BackendUsage), GatewayError> {
        let ex = self.ask(object, env, side_prompt(object))?;
        Ok((parse_side_reply(&ex.content)?, ex.usage))
    }

    fn describe(&mut self, object: &str, env: &SimEnv) -> Result<(String, BackendUsage), GatewayError> {
        let ex = self.ask(object, env, describe_prompt(object))?;
        Ok((ex.content.trim().to_string(), ex.usage))
    }
}

/// Body of a minimal successful completion, used by mocks.
pub fn completion_body(content: &str, prompt_tokens: u64, completion_tokens: u64) -> String {
    json!({
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Serves canned (status, body) pairs in order and records request bodies.
    fn mock(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        std::thread::spawn(move || {
            for (status, body) in replies {
                let Ok((stream, _)) = listener.accept() else { return };
                let mut reader = BufReader::new(stream);
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                log.lock().unwrap().push(String::from_utf8(buf).unwrap());
                let mut stream = reader.into_inner();
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
            }
        });
        (format!("http://{addr}/v1"), seen)
    }

    fn client(base: &str) -> ChatClient {
        let mut cfg = HttpConfig::new(base, "planner-model");
        cfg.retry.initial_backoff = Duration::from_millis(5);
        cfg.retry.timeout = Duration::from_secs(5);
        ChatClient::new(cfg).unwrap()
    }

    fn ctx_scene() -> crate::scene::SceneMap {
        crate::scene::canonical_scene(0)
    }

    #[test]
    fn history_is_replayed() {
        let (base, seen) = mock(vec![
            (200, completion_body("{\"first_action\": \"go_to(fruit table)\"}", 600, 40)),
            (200, completion_body("{\"next_action\": \"done\"}", 700, 10)),
        ]);
        let scene = ctx_scene();
        let ctx = PlannerContext { scene: &scene, task: None };
        let mut p = HttpPlanner::new(client(&base));
        let a = p.initial("prompt text", &ctx).unwrap();
        let b = p.step("#feedback: pick up success", &ctx).unwrap();
        assert_eq!(a.usage.prompt_tokens, 600);
        assert!(b.usage.prompt_tokens > a.usage.prompt_tokens);
        assert_eq!(p.history().len(), 4);
        let bodies = seen.lock().unwrap();
        let second: ChatRequest = serde_json::from_str(&bodies[1]).unwrap();
        assert_eq!(second.messages.len(), 3);
        assert_eq!(second.messages[0].content, "prompt text");
        assert_eq!(second.temperature, 0.0);
        assert_eq!(second.max_tokens, 512);
        assert_eq!(b.raw_request.as_deref(), Some(bodies[1].as_str()));
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (base, seen) = mock(vec![
            (503, "{}".into()),
            (429, "{}".into()),
            (200, completion_body("ok", 1, 1)),
        ]);
        let c = client(&base);
        let ex = c.send(&c.request_for("m", vec![ChatMessage::user("hi")])).unwrap();
        assert_eq!(ex.content, "ok");
        assert_eq!(seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (base, seen) = mock(vec![(401, "{}".into()), (200, completion_body("late", 1, 1))]);
        let c = client(&base);
        let err = c.send(&c.request_for("m", vec![ChatMessage::user("hi")])).unwrap_err();
        assert_eq!(err, GatewayError::BadStatus(401));
        assert_eq!(seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn unreachable_endpoint_gives_transport_after_three_attempts() {
        let port = {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let c = client(&format!("http://127.0.0.1:{port}"));
        match c.send(&c.request_for("m", vec![ChatMessage::user("hi")])) {
            Err(GatewayError::Transport { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn failed_step_leaves_history_alone() {
        let (base, _) = mock(vec![(200, completion_body("plan", 1, 1)), (400, "{}".into())]);
        let scene = ctx_scene();
        let ctx = PlannerContext { scene: &scene, task: None };
        let mut p = HttpPlanner::new(client(&base));
        p.initial("prompt", &ctx).unwrap();
        assert!(p.step("#feedback: place success", &ctx).is_err());
        assert_eq!(p.history().len(), 2);
    }

    #[test]
    fn vlm_reply_that_is_not_json_fails_to_parse() {
        let (base, _) = mock(vec![(200, completion_body("not json", 1, 1))]);
        let mut env = SimEnv::new(ctx_scene(), 0, Default::default()).unwrap();
        env.exec_navigate(&crate::sim::NavTarget::Site { name: "fruit table".into(), side: None }).unwrap();
        let mut vlm = HttpVlm::new(client(&base));
        assert!(matches!(vlm.table_side("apple", &env), Err(GatewayError::ParseFail(_))));
        assert!(matches!(vlm.describe("unicorn", &env), Err(GatewayError::ObjectNotVisible(_))));
    }
}
