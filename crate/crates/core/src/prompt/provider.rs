//! Chat-completion providers: messages in, text out.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DecodingParams, PromptRequest};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("rate limited by provider")]
    RateLimited { retry_after: Option<Duration> },
    #[error("provider configuration: {0}")]
    Config(String),
}

pub trait Provider: Send + Sync {
    fn complete(&self, request: &PromptRequest) -> Result<String, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn complete(&self, request: &PromptRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn complete(&self, request: &PromptRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

/// Replays a fixed list of replies in order, one per call.
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    replies: Mutex<VecDeque<Result<String, ProviderError>>>,
    calls: AtomicUsize,
}

impl ScriptedProvider {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_results(replies.into_iter().map(|s| Ok(s.into())))
    }

    pub fn with_results<I: IntoIterator<Item = Result<String, ProviderError>>>(replies: I) -> Self {
        ScriptedProvider {
            replies: Mutex::new(replies.into_iter().collect()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Provider for ScriptedProvider {
    fn complete(&self, _request: &PromptRequest) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.replies
            .lock()
            .expect("script lock")
            .pop_front()
            .unwrap_or_else(|| Err(ProviderError::Transport("script exhausted".into())))
    }
}

#[derive(Deserialize)]
struct FileEntry {
    input: String,
    response: String,
}

/// Offline provider answering from a JSON-lines file of
/// `{"input": ..., "response": ...}` objects, keyed by the query's `<input>` text.
#[derive(Debug, Clone, Default)]
pub struct FileProvider {
    responses: HashMap<String, String>,
}

impl FileProvider {
    pub fn from_jsonl(text: &str) -> Result<Self, ProviderError> {
        let mut responses = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: FileEntry = serde_json::from_str(line)
                .map_err(|err| ProviderError::Config(format!("line {}: {err}", n + 1)))?;
            responses.insert(e.input.trim().to_string(), e.response);
        }
        Ok(FileProvider { responses })
    }

    pub fn open(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }

    pub fn insert(&mut self, input: impl Into<String>, response: impl Into<String>) {
        self.responses.insert(input.into(), response.into());
    }
}

impl Provider for FileProvider {
    fn complete(&self, request: &PromptRequest) -> Result<String, ProviderError> {
        let input = request
            .query_input()
            .ok_or_else(|| ProviderError::Transport("request has no <input> block".into()))?;
        self.responses
            .get(input.trim())
            .cloned()
            .ok_or_else(|| ProviderError::Transport(format!("no recorded response for {input:?}")))
    }
}

fn default_in_flight() -> usize {
    4
}

fn default_rpm() -> u32 {
    60
}

fn default_key_env() -> String {
    "AGEC_API_KEY".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub decoding: DecodingParams,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_rpm")]
    pub rpm: u32,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
}

impl ProviderConfig {
    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        let cfg: ProviderConfig =
            serde_json::from_str(text).map_err(|e| ProviderError::Config(e.to_string()))?;
        if cfg.max_in_flight == 0 {
            return Err(ProviderError::Config(
                "max_in_flight must be positive".into(),
            ));
        }
        Ok(cfg)
    }

    /// `file://<path>` endpoints give a [`FileProvider`]; anything else an
    /// HTTP client when that feature is built.
    pub fn connect(&self) -> Result<Box<dyn Provider>, ProviderError> {
        if let Some(path) = self.endpoint.strip_prefix("file://") {
            return Ok(Box::new(FileProvider::open(Path::new(path))?));
        }
        #[cfg(feature = "http")]
        {
            Ok(Box::new(HttpProvider::new(self)?))
        }
        #[cfg(not(feature = "http"))]
        {
            Err(ProviderError::Config("built without http support".into()))
        }
    }
}

#[cfg(feature = "http")]
pub use http::HttpProvider;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde_json::{json, Value};

    use super::{Provider, ProviderConfig, ProviderError};
    use crate::prompt::PromptRequest;

    /// OpenAI-style `/chat/completions` client.
    pub struct HttpProvider {
        agent: ureq::Agent,
        endpoint: String,
        model: String,
        key: String,
    }

    impl HttpProvider {
        pub fn new(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
            let key = std::env::var(&cfg.api_key_env).map_err(|_| {
                ProviderError::Config(format!(
                    "environment variable {} is not set",
                    cfg.api_key_env
                ))
            })?;
            let agent = ureq::Agent::config_builder()
                .http_status_as_error(false)
                .timeout_global(Some(Duration::from_secs(120)))
                .build()
                .into();
            Ok(HttpProvider {
                agent,
                endpoint: cfg.endpoint.clone(),
                model: cfg.model.clone(),
                key,
            })
        }

        fn body(&self, request: &PromptRequest) -> Value {
            let d = &request.decoding;
            let mut body = json!({
                "model": self.model,
                "messages": request.messages,
                "temperature": d.temperature,
                "top_p": d.top_p,
            });
            if let Some(k) = d.top_k {
                body["top_k"] = json!(k);
            }
            body
        }
    }

    impl Provider for HttpProvider {
        fn complete(&self, request: &PromptRequest) -> Result<String, ProviderError> {
            let mut resp = self
                .agent
                .post(&self.endpoint)
                .header("Authorization", &format!("Bearer {}", self.key))
                .send_json(self.body(request))
                .map_err(|e| ProviderError::Transport(e.to_string()))?;
            let status = resp.status().as_u16();
            if status == 429 {
                let retry_after = resp
                    .headers()
                    .get("retry-after")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse::<u64>().ok())
                    .map(Duration::from_secs);
                return Err(ProviderError::RateLimited { retry_after });
            }
            if !(200..300).contains(&status) {
                let text = resp.body_mut().read_to_string().unwrap_or_default();
                return Err(ProviderError::Transport(format!("status {status}: {text}")));
            }
            let v: Value = resp
                .body_mut()
                .read_json()
                .map_err(|e| ProviderError::Transport(e.to_string()))?;
            v["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| {
                    ProviderError::Transport("response lacks choices[0].message.content".into())
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sentence;
    use crate::prompt::Prompts;

    fn req(text: &str) -> PromptRequest {
        Prompts::default().corruption(&Sentence::from_text(text), &[])
    }

    #[test]
    fn file_provider_lookup() {
        let p = FileProvider::from_jsonl(
            "{\"input\":\"الرجل يرب\",\"response\":\"<output>الرجل يركب</output>\"}\n\n",
        )
        .unwrap();
        assert_eq!(
            p.complete(&req("الرجل يرب")).unwrap(),
            "<output>الرجل يركب</output>"
        );
        assert!(p.complete(&req("غيره")).is_err());
        assert!(FileProvider::from_jsonl("not json").is_err());
    }

    #[test]
    fn scripted_provider_runs_out() {
        let p = ScriptedProvider::new(["a"]);
        assert_eq!(p.complete(&req("x")).unwrap(), "a");
        assert!(matches!(
            p.complete(&req("x")),
            Err(ProviderError::Transport(_))
        ));
        assert_eq!(p.calls(), 2);
    }

    #[test]
    fn config_parsing() {
        let cfg = ProviderConfig::from_json(
            r#"{"endpoint":"file:///dev/null","model":"m","decoding":{"temperature":0.8,"top_p":0.8,"top_k":75},"max_in_flight":2,"rpm":30}"#,
        )
        .unwrap();
        assert_eq!(cfg.decoding, DecodingParams::top_p());
        assert_eq!(cfg.api_key_env, "AGEC_API_KEY");
        assert!(cfg.connect().is_ok());
        assert!(ProviderConfig::from_json(r#"{"endpoint":"x","model":"m","extra":1}"#).is_err());
        assert!(
            ProviderConfig::from_json(r#"{"endpoint":"x","model":"m","max_in_flight":0}"#).is_err()
        );
    }
}
