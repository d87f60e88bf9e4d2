//! Language-model clients: scripted replay, a deterministic rule policy and
//! an OpenAI-compatible HTTP backend.

#[cfg(feature = "http")]
mod http;
mod rule;
mod scripted;

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Role;

#[cfg(feature = "http")]
pub use http::HttpClient;
pub use rule::RuleClient;
pub use scripted::{ScenarioEntry, ScriptedClient};

/// One completion request. `facts` carries structured data that only the
/// rule backend reads; text backends see `system` and `prompt` alone.
#[derive(Debug, Clone, Copy)]
pub struct LlmRequest<'a> {
    pub role: Role,
    pub system: &'a str,
    pub prompt: &'a str,
    pub facts: &'a serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("scripted scenario has no remaining {0} entry for this prompt")]
    ScenarioExhausted(Role),
    #[error("http error {status:?}: {body}")]
    Http { status: Option<u16>, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("backend configuration: {0}")]
    Config(String),
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest<'_>) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout_seconds: u64,
    pub retries: u32,
    pub backoff_ms: u64,
    pub temperature: f64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "http://localhost:8000/v1".into(),
            api_key: None,
            model: "default".into(),
            timeout_seconds: 60,
            retries: 2,
            backoff_ms: 500,
            temperature: 0.0,
        }
    }
}

impl HttpConfig {
    /// Overlays `MMORF_LLM_BASE_URL`, `MMORF_LLM_API_KEY` and
    /// `MMORF_LLM_MODEL` when set.
    pub fn with_env(mut self) -> Self {
        if let Ok(v) = std::env::var("MMORF_LLM_BASE_URL") {
            self.base_url = v;
        }
        if let Ok(v) = std::env::var("MMORF_LLM_API_KEY") {
            self.api_key = Some(v);
        }
        if let Ok(v) = std::env::var("MMORF_LLM_MODEL") {
            self.model = v;
        }
        self
    }
}

/// Backend selector as written on the command line:
/// `scripted:<path>`, `rule` or `http`.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Scripted(PathBuf),
    Rule,
    Http(HttpConfig),
}

impl FromStr for BackendSpec {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("scripted:") {
            if path.is_empty() {
                return Err(LlmError::Config("scripted backend needs a scenario path".into()));
            }
            return Ok(BackendSpec::Scripted(PathBuf::from(path)));
        }
        match s {
            "rule" => Ok(BackendSpec::Rule),
            "http" => Ok(BackendSpec::Http(HttpConfig::default().with_env())),
            other => Err(LlmError::Config(format!("unknown backend {other:?}; use scripted:<path>, rule or http"))),
        }
    }
}

impl BackendSpec {
    /// A fresh client. Scripted clients keep a per-instance cursor, so each
    /// task should get its own.
    pub fn client(&self) -> Result<Box<dyn LlmClient>, LlmError> {
        match self {
            BackendSpec::Scripted(path) => Ok(Box::new(ScriptedClient::load(path)?)),
            BackendSpec::Rule => Ok(Box::new(RuleClient)),
            #[cfg(feature = "http")]
            BackendSpec::Http(cfg) => Ok(Box::new(HttpClient::new(cfg.clone())?)),
            #[cfg(not(feature = "http"))]
            BackendSpec::Http(_) => Err(LlmError::Config("built without the http feature".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_specs() {
        assert_eq!("rule".parse::<BackendSpec>(), Ok(BackendSpec::Rule));
        assert_eq!("scripted:a.json".parse::<BackendSpec>(), Ok(BackendSpec::Scripted("a.json".into())));
        assert!("scripted:".parse::<BackendSpec>().is_err());
        assert!("gpt".parse::<BackendSpec>().is_err());
    }
}
