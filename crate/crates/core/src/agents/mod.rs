//! Language-model roles around the planner: prompt rendering, the action
//! grammar, the Navigator / Regulator / Verifier / Coordinator sessions and
//! pluggable completion backends.

mod action;
mod llm;
mod prompts;
mod session;
mod template;
mod views;

pub use action::{parse_action, render_action, ActionError, AgentAction, Role, TOOL_NAMES};
#[cfg(feature = "http")]
pub use llm::HttpClient;
pub use llm::{BackendSpec, HttpConfig, LlmClient, LlmError, LlmRequest, RuleClient, ScenarioEntry, ScriptedClient};
pub use prompts::{render_prompt, template_ids, template_source};
pub use session::{
    coordinator_delegate, navigator_session, regulator_session, verify_route, AgentConfig, AgentLog, Decision,
    SessionContext, TranscriptEntry, Verdict, VERIFIER_FALLBACK_REASON,
};
pub use template::{list_key, Context, Template, TemplateError, Value};
pub use views::RouteView;
