use std::thread::sleep;
use std::time::Duration;

use serde_json::json;

use super::{HttpConfig, LlmClient, LlmError, LlmRequest};

/// Chat-completions client. Safe to share across threads; each call is an
/// independent request.
pub struct HttpClient {
    config: HttpConfig,
    agent: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let agent = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_seconds))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(HttpClient { config, agent })
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, (bool, LlmError)> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut req = self.agent.post(url).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            let err =
                if e.is_timeout() { LlmError::Timeout } else { LlmError::Http { status: None, body: e.to_string() } };
            (true, err)
        })?;
        let status = resp.status();
        let text =
            resp.text().map_err(|e| (true, LlmError::Http { status: Some(status.as_u16()), body: e.to_string() }))?;
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            let body: String = text.chars().take(200).collect();
            return Err((retry, LlmError::Http { status: Some(status.as_u16()), body }));
        }
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| (false, LlmError::Http { status: Some(status.as_u16()), body: format!("bad json: {e}") }))?;
        v["choices"][0]["message"]["content"].as_str().map(str::to_string).ok_or_else(|| {
            (false, LlmError::Http { status: Some(status.as_u16()), body: "response has no message content".into() })
        })
    }
}

impl LlmClient for HttpClient {
    fn complete(&self, request: &LlmRequest<'_>) -> Result<String, LlmError> {
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.prompt},
            ],
        });
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut tries = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((retry, err)) => {
                    if !retry || tries >= self.config.retries {
                        return Err(err);
                    }
                    tracing::warn!(error = %err, attempt = tries + 1, "llm request failed; retrying");
                    tries += 1;
                    sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
}
