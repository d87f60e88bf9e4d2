use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{LlmClient, LlmError, LlmRequest};
use crate::agents::Role;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub role: Role,
    #[serde(default, rename = "match", skip_serializing_if = "Option::is_none")]
    pub matches: Option<String>,
    pub response: String,
}

/// Replays canned responses. Each call consumes the first unused entry for
/// the request's role whose `match` (if any) occurs in the prompt.
#[derive(Debug)]
pub struct ScriptedClient {
    entries: Vec<ScenarioEntry>,
    used: Mutex<Vec<bool>>,
}

impl ScriptedClient {
    pub fn new(entries: Vec<ScenarioEntry>) -> Self {
        let used = Mutex::new(vec![false; entries.len()]);
        ScriptedClient { entries, used }
    }

    pub fn from_json_str(text: &str) -> Result<Self, LlmError> {
        let entries: Vec<ScenarioEntry> =
            serde_json::from_str(text).map_err(|e| LlmError::Config(format!("scenario: {e}")))?;
        Ok(Self::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn remaining(&self) -> usize {
        self.used.lock().expect("scenario lock").iter().filter(|u| !**u).count()
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, request: &LlmRequest<'_>) -> Result<String, LlmError> {
        let mut used = self.used.lock().expect("scenario lock");
        let hit = self.entries.iter().enumerate().position(|(i, e)| {
            !used[i] && e.role == request.role && e.matches.as_deref().is_none_or(|m| request.prompt.contains(m))
        });
        match hit {
            Some(i) => {
                used[i] = true;
                Ok(self.entries[i].response.clone())
            }
            None => Err(LlmError::ScenarioExhausted(request.role)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ask(c: &ScriptedClient, role: Role, prompt: &str) -> Result<String, LlmError> {
        c.complete(&LlmRequest { role, system: "", prompt, facts: &serde_json::Value::Null })
    }

    #[test]
    fn consumed_in_order() {
        let c = ScriptedClient::from_json_str(r#"[{"role":"verifier","response":"one"}]"#).unwrap();
        assert_eq!(ask(&c, Role::Verifier, "x").unwrap(), "one");
        assert_eq!(ask(&c, Role::Verifier, "x"), Err(LlmError::ScenarioExhausted(Role::Verifier)));
    }

    #[test]
    fn role_and_match_filters() {
        let c = ScriptedClient::from_json_str(
            r#"[{"role":"verifier","match":"zz","response":"a"},
                {"role":"verifier","response":"b"},
                {"role":"navigator","response":"c"}]"#,
        )
        .unwrap();
        assert_eq!(ask(&c, Role::Navigator, "x").unwrap(), "c");
        assert_eq!(ask(&c, Role::Verifier, "x").unwrap(), "b");
        assert_eq!(ask(&c, Role::Verifier, "has zz").unwrap(), "a");
        assert_eq!(c.remaining(), 0);
        assert!(ScriptedClient::from_json_str(r#"[{"role":"oracle","response":"x"}]"#).is_err());
    }
}
