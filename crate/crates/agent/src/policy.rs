//! Policy adapters. A [`Policy`] is shared across episodes and opens one
//! [`PolicySession`] per episode; sessions hold whatever per-episode state
//! the adapter needs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use tabprep_core::ops::Operator;

use crate::episode::TaskSpec;
use crate::trajectory::Usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Message { role, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct PolicyError(pub String);

pub trait Policy: Send + Sync {
    fn name(&self) -> &str;
    fn start<'a>(&'a self, task: &TaskSpec) -> Box<dyn PolicySession + 'a>;
}

pub trait PolicySession {
    fn reply(&mut self, messages: &[Message]) -> Result<String, PolicyError>;

    /// Tokens consumed so far in this session.
    fn usage(&self) -> Usage {
        Usage::default()
    }
}

// ---- scripted replay ----

/// Splits a script file into replies. Each reply starts with a line reading
/// `### reply`; anything before the first marker is ignored.
pub fn parse_script(text: &str) -> Vec<String> {
    let mut replies: Vec<String> = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if line.trim() == "### reply" {
            replies.extend(current.take());
            current = Some(String::new());
        } else if let Some(c) = current.as_mut() {
            c.push_str(line);
            c.push('\n');
        }
    }
    replies.extend(current);
    replies
}

/// Replays canned replies in order, either one script for every task or a
/// script per task id.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    per_task: BTreeMap<String, Vec<String>>,
    fallback: Option<Vec<String>>,
}

impl ScriptedPolicy {
    pub fn new(replies: Vec<String>) -> Self {
        ScriptedPolicy { per_task: BTreeMap::new(), fallback: Some(replies) }
    }

    pub fn per_task(scripts: BTreeMap<String, Vec<String>>) -> Self {
        ScriptedPolicy { per_task: scripts, fallback: None }
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::new(parse_script(&fs::read_to_string(path)?)))
    }

    /// One `<task_id>.txt` script per task.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut scripts = BTreeMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "txt") {
                let id = path.file_stem().unwrap().to_string_lossy().into_owned();
                scripts.insert(id, parse_script(&fs::read_to_string(&path)?));
            }
        }
        Ok(Self::per_task(scripts))
    }
}

struct ScriptSession<'a> {
    replies: &'a [String],
    next: usize,
}

impl PolicySession for ScriptSession<'_> {
    fn reply(&mut self, _: &[Message]) -> Result<String, PolicyError> {
        let r = self
            .replies
            .get(self.next)
            .cloned()
            .ok_or_else(|| PolicyError(format!("script exhausted after {} replies", self.replies.len())))?;
        self.next += 1;
        Ok(r)
    }
}

impl Policy for ScriptedPolicy {
    fn name(&self) -> &str {
        "scripted"
    }

    fn start<'a>(&'a self, task: &TaskSpec) -> Box<dyn PolicySession + 'a> {
        let replies = self.per_task.get(&task.task_id).or(self.fallback.as_ref()).map_or(&[][..], Vec::as_slice);
        Box::new(ScriptSession { replies, next: 0 })
    }
}

// ---- heuristic baseline ----

/// Answers with the identity pipeline when a source already has exactly the
/// target columns, projects a source holding all of them, and otherwise
/// gives up with the identity pipeline on the first source.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicPolicy;

struct HeuristicSession {
    target_cols: Vec<String>,
    exact: Option<String>,
    superset: Option<String>,
    fallback: Option<String>,
    expanded: Option<(String, String)>,
}

fn answer(plan: &str, path: &str, target: &str) -> String {
    format!("<plan>{plan}</plan>\n<answer>\n{path}\ntarget: {target}\n</answer>\n")
}

impl PolicySession for HeuristicSession {
    fn reply(&mut self, messages: &[Message]) -> Result<String, PolicyError> {
        if let Some(t) = &self.exact {
            return Ok(answer(&format!("table {t} already matches the target schema"), "root", t));
        }
        if let Some((t, call)) = &self.expanded {
            let failed = messages.last().is_some_and(|m| m.content.contains("failed operator:"));
            return Ok(if failed {
                answer(&format!("projecting {t} failed, return {t} unchanged"), "root", t)
            } else {
                answer(&format!("table {t} now holds the target columns"), call, t)
            });
        }
        if let Some(t) = self.superset.clone() {
            let call = Operator::SelectColumn { table: t.clone(), columns: self.target_cols.clone() }.to_string();
            let plan = format!("select columns {} from table {t}", self.target_cols.join(", "));
            let reply = format!("<plan>{plan}</plan>\n<expand>\nparent: root\n{call}\n</expand>\n");
            self.expanded = Some((t, call));
            return Ok(reply);
        }
        match &self.fallback {
            Some(t) => Ok(answer(&format!("no source matches, return {t}"), "root", t)),
            None => Err(PolicyError("task has no source tables".into())),
        }
    }
}

impl Policy for HeuristicPolicy {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn start<'a>(&'a self, task: &TaskSpec) -> Box<dyn PolicySession + 'a> {
        let target_cols: Vec<String> = task.target_schema.columns.iter().map(|c| c.name.clone()).collect();
        let want = {
            let mut v = target_cols.clone();
            v.sort();
            v
        };
        let mut exact = None;
        let mut superset = None;
        for t in task.sources.iter() {
            let mut have: Vec<String> = t.column_names().into_iter().map(String::from).collect();
            have.sort();
            if have == want && exact.is_none() {
                exact = Some(t.name().to_string());
            } else if want.iter().all(|c| have.contains(c)) && superset.is_none() {
                superset = Some(t.name().to_string());
            }
        }
        let fallback = task.sources.names().next().map(String::from);
        Box::new(HeuristicSession { target_cols, exact, superset, fallback, expanded: None })
    }
}

// ---- remote chat endpoint ----

/// A chat-completion style backend: messages in, one text reply out.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[Message]) -> Result<(String, Usage), PolicyError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatConfig {
    pub url: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Sent as a bearer token when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
}

fn default_temperature() -> f64 {
    0.01
}

fn default_timeout() -> u64 {
    120
}

impl ChatConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        ChatConfig { url: url.into(), model: model.into(), temperature: default_temperature(), timeout_secs: default_timeout(), api_key: None }
    }
}

/// Posts `{model, temperature, messages: [{role, content}]}` and accepts
/// either `{content}` or the `choices[0].message.content` shape. Token
/// counts are read from `usage` when present.
pub struct ChatClient {
    config: ChatConfig,
    http: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(config: ChatConfig) -> Result<Self, PolicyError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| PolicyError(format!("http client: {e}")))?;
        Ok(ChatClient { config, http })
    }

    pub fn config(&self) -> &ChatConfig {
        &self.config
    }
}

pub fn request_body(config: &ChatConfig, messages: &[Message]) -> Json {
    json!({ "model": config.model, "temperature": config.temperature, "messages": messages })
}

pub fn parse_response(body: &Json) -> Result<(String, Usage), PolicyError> {
    let content = body
        .get("content")
        .and_then(Json::as_str)
        .or_else(|| body.pointer("/choices/0/message/content").and_then(Json::as_str))
        .ok_or_else(|| PolicyError("response has no content field".into()))?;
    let n = |p: &str| body.pointer(p).and_then(Json::as_u64);
    let usage = Usage {
        input_tokens: n("/usage/prompt_tokens").or(n("/usage/input_tokens")).unwrap_or(0),
        output_tokens: n("/usage/completion_tokens").or(n("/usage/output_tokens")).unwrap_or(0),
        cached_input_tokens: n("/usage/prompt_tokens_details/cached_tokens").unwrap_or(0),
    };
    Ok((content.to_string(), usage))
}

impl ChatBackend for ChatClient {
    fn complete(&self, messages: &[Message]) -> Result<(String, Usage), PolicyError> {
        let mut req = self
            .http
            .post(&self.config.url)
            .header("content-type", "application/json")
            .body(request_body(&self.config, messages).to_string());
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| PolicyError(format!("request failed: {e}")))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| PolicyError(format!("reading response: {e}")))?;
        if !status.is_success() {
            return Err(PolicyError(format!("endpoint returned {status}: {}", text.chars().take(200).collect::<String>())));
        }
        let body: Json = serde_json::from_str(&text).map_err(|e| PolicyError(format!("response is not json: {e}")))?;
        parse_response(&body)
    }
}

/// Sends the whole conversation to a chat backend each turn. Stateless
/// across episodes.
pub struct ChatPolicy<B: ChatBackend = ChatClient> {
    backend: B,
}

impl<B: ChatBackend> ChatPolicy<B> {
    pub fn new(backend: B) -> Self {
        ChatPolicy { backend }
    }
}

struct ChatSession<'a, B: ChatBackend> {
    backend: &'a B,
    usage: Usage,
}

impl<B: ChatBackend> PolicySession for ChatSession<'_, B> {
    fn reply(&mut self, messages: &[Message]) -> Result<String, PolicyError> {
        let (text, usage) = self.backend.complete(messages)?;
        self.usage.add(usage);
        Ok(text)
    }

    fn usage(&self) -> Usage {
        self.usage
    }
}

impl<B: ChatBackend> Policy for ChatPolicy<B> {
    fn name(&self) -> &str {
        "chat"
    }

    fn start<'a>(&'a self, _: &TaskSpec) -> Box<dyn PolicySession + 'a> {
        Box::new(ChatSession { backend: &self.backend, usage: Usage::default() })
    }
}
