//! Model clients: the transport trait, HTTP and subprocess implementations,
//! and builtin reference responders used for self-checks.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expand::TestCase;
use crate::lexicon::Lexicon;
use crate::validate::CaseMatcher;

use super::DecodingConfig;

/// Environment variable holding the bearer token for the HTTP client.
pub const API_KEY_ENV: &str = "M2C_API_KEY";

/// A pluggable text model: one prompt in, one completion out.
pub trait ModelClient: Send + Sync {
    fn id(&self) -> String;
    fn request(&self, prompt: &str, decoding: &DecodingConfig) -> Result<String>;
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    temperature: f64,
    max_steps: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

/// POSTs `{prompt, temperature, max_steps}` as JSON and reads `{text}`.
pub struct HttpClient {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(endpoint: impl Into<String>) -> HttpClient {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        HttpClient {
            endpoint: endpoint.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            agent: config.into(),
        }
    }
}

impl ModelClient for HttpClient {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn request(&self, prompt: &str, decoding: &DecodingConfig) -> Result<String> {
        let body = serde_json::to_string(&WireRequest {
            prompt,
            temperature: decoding.temperature,
            max_steps: decoding.max_steps,
        })?;
        let mut request = self
            .agent
            .post(&self.endpoint)
            .header("content-type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send(&body)
            .map_err(|e| Error::Transport(format!("POST {}: {e}", self.endpoint)))?;
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(format!("read response: {e}")))?;
        let parsed: WireResponse = serde_json::from_str(&text)
            .map_err(|e| Error::Transport(format!("malformed response body: {e}")))?;
        Ok(parsed.text)
    }
}

/// Speaks newline-delimited JSON over a child process's stdin/stdout, one
/// request per line. Requests are serialized; the child is spawned once.
pub struct SubprocessClient {
    command: String,
    io: Mutex<SubprocessIo>,
}

struct SubprocessIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl SubprocessClient {
    pub fn spawn(command: &str) -> Result<SubprocessClient> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Transport(format!("spawn `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(SubprocessClient {
            command: command.to_string(),
            io: Mutex::new(SubprocessIo {
                child,
                stdin,
                stdout,
            }),
        })
    }
}

impl ModelClient for SubprocessClient {
    fn id(&self) -> String {
        format!("subprocess:{}", self.command)
    }

    fn request(&self, prompt: &str, decoding: &DecodingConfig) -> Result<String> {
        let line = serde_json::to_string(&WireRequest {
            prompt,
            temperature: decoding.temperature,
            max_steps: decoding.max_steps,
        })?;
        let mut io = self.io.lock().expect("subprocess mutex");
        io.stdin
            .write_all(format!("{line}\n").as_bytes())
            .and_then(|()| io.stdin.flush())
            .map_err(|e| Error::Transport(format!("write to subprocess: {e}")))?;
        let mut response = String::new();
        io.stdout
            .read_line(&mut response)
            .map_err(|e| Error::Transport(format!("read from subprocess: {e}")))?;
        if response.is_empty() {
            return Err(Error::Transport("subprocess closed its stdout".into()));
        }
        let parsed: WireResponse = serde_json::from_str(response.trim())
            .map_err(|e| Error::Transport(format!("malformed subprocess reply: {e}")))?;
        Ok(parsed.text)
    }
}

impl Drop for SubprocessClient {
    fn drop(&mut self) {
        if let Ok(mut io) = self.io.lock() {
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}

/// Builtin reference responders. Unlike transport clients these see the test
/// case, which lets them answer exactly right or exactly wrong.
pub enum BuiltinClient {
    /// Answers with the gold answer; accuracy must come out at 100%.
    Oracle,
    /// Answers with a different inflection of the gold entry when one exists;
    /// classifies as a morphological error.
    WrongInflection { lexicon: Lexicon },
    /// Answers with a fixed string.
    Constant(String),
}

impl BuiltinClient {
    pub fn id(&self) -> String {
        match self {
            BuiltinClient::Oracle => "oracle".into(),
            BuiltinClient::WrongInflection { .. } => "mock:morph".into(),
            BuiltinClient::Constant(_) => "mock:const".into(),
        }
    }

    pub fn respond(&self, case: &TestCase) -> String {
        match self {
            BuiltinClient::Oracle => case.gold_answer.clone(),
            BuiltinClient::Constant(s) => s.clone(),
            BuiltinClient::WrongInflection { lexicon } => {
                wrong_inflection(case, lexicon).unwrap_or_else(|| "???".to_string())
            }
        }
    }
}

fn wrong_inflection(case: &TestCase, lexicon: &Lexicon) -> Option<String> {
    for matcher in &case.matchers {
        let CaseMatcher::GoldForm {
            type_name,
            entry_id,
            required,
            prefix,
            suffix,
            ..
        } = matcher
        else {
            continue;
        };
        let entry = lexicon.entry(type_name, entry_id).ok()?;
        for (key, surface) in entry.variants() {
            if key != required {
                return Some(format!("{prefix}{surface}{suffix}"));
            }
        }
    }
    None
}

/// What `evaluate_suite` drives: either a builtin responder or an external
/// model behind the [`ModelClient`] transport.
pub enum Responder {
    Builtin(BuiltinClient),
    External(Box<dyn ModelClient>),
}

impl Responder {
    pub fn id(&self) -> String {
        match self {
            Responder::Builtin(b) => b.id(),
            Responder::External(c) => c.id(),
        }
    }

    pub fn is_external(&self) -> bool {
        matches!(self, Responder::External(_))
    }

    pub fn respond(
        &self,
        case: &TestCase,
        prompt: &str,
        decoding: &DecodingConfig,
    ) -> Result<String> {
        match self {
            Responder::Builtin(b) => Ok(b.respond(case)),
            Responder::External(c) => c.request(prompt, decoding),
        }
    }
}
