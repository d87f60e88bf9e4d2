use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::chemworld::World;
use crate::planner::{route_height, Constraint, RestrictionDelta, RestrictionSet};
use crate::vfdsl::{evaluate_vf, parse_vf, render_vf, Expr};

use super::template::Context;
use super::{parse_action, render_action, render_prompt, AgentAction, LlmClient, LlmRequest, Role, RouteView};

pub const VERIFIER_FALLBACK_REASON: &str = "verifier-parse-fallback";
const VERIFIER_HISTORY_SHOWN: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Turns per Navigator / Regulator session.
    pub turn_limit: usize,
    /// Extra attempts after an unusable reply.
    pub parse_retries_per_turn: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig { turn_limit: 3, parse_retries_per_turn: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub role: Role,
    pub turn: usize,
    pub attempt: usize,
    pub prompt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything the sessions said and heard, plus warnings for the planner's
/// event log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentLog {
    pub transcript: Vec<TranscriptEntry>,
    pub notes: Vec<String>,
}

impl AgentLog {
    pub fn turns(&self, role: Role) -> usize {
        self.transcript.iter().filter(|e| e.role == role).map(|e| e.turn).collect::<BTreeSet<_>>().len()
    }
}

/// Planner state a session may read.
pub struct SessionContext<'a> {
    pub world: &'a World,
    pub product: &'a str,
    pub task_instruction: &'a str,
    pub constraints: &'a [Constraint],
    pub value_function: &'a Expr,
    pub restrictions: &'a RestrictionSet,
    pub remaining_iterations: usize,
    pub llm: &'a dyn LlmClient,
    pub config: &'a AgentConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    AcceptProposed,
    Reject,
    /// 1-based index into the rejection history.
    AcceptPrevious(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    pub reason: String,
}

struct Ask<'p> {
    role: Role,
    turn: usize,
    system: &'p str,
    prompt: String,
    facts: Json,
}

/// One turn: the first usable action within `1 + parse_retries_per_turn`
/// attempts, each retry echoing the previous error.
fn ask(
    ctx: &SessionContext<'_>,
    q: Ask<'_>,
    log: &mut AgentLog,
    check: impl Fn(&AgentAction) -> Result<(), String>,
) -> Option<AgentAction> {
    let mut prompt = q.prompt.clone();
    for attempt in 0..=ctx.config.parse_retries_per_turn {
        let req = LlmRequest { role: q.role, system: q.system, prompt: &prompt, facts: &q.facts };
        let (response, err) = match ctx.llm.complete(&req) {
            Err(e) => (None, e.to_string()),
            Ok(text) => {
                let parsed = parse_action(&text, q.role.allowed_tools())
                    .map_err(|e| e.to_string())
                    .and_then(|a| check(&a).map(|_| a));
                match parsed {
                    Ok(action) => {
                        log.transcript.push(TranscriptEntry {
                            role: q.role,
                            turn: q.turn,
                            attempt,
                            prompt,
                            response: Some(text),
                            error: None,
                        });
                        return Some(action);
                    }
                    Err(e) => (Some(text), e),
                }
            }
        };
        log.notes.push(format!("{} turn {} attempt {}: {err}", q.role, q.turn, attempt + 1));
        log.transcript.push(TranscriptEntry {
            role: q.role,
            turn: q.turn,
            attempt,
            prompt: prompt.clone(),
            response,
            error: Some(err.clone()),
        });
        prompt = format!(
            "{}\n\nYour previous response could not be used: {err}. Reply again with one Action line in the required format.",
            q.prompt
        );
    }
    None
}

fn system(id: &str) -> String {
    render_prompt(id, &Context::new()).unwrap_or_else(|e| panic!("bundled system prompt {id}: {e}"))
}

fn prompt(id: &str, ctx: &Context) -> String {
    render_prompt(id, ctx).unwrap_or_else(|e| panic!("prompt {id} context incomplete: {e}"))
}

fn acts_list(acts: &[String]) -> Vec<Context> {
    acts.iter().map(|a| Context::new().text("ACT", a.clone())).collect()
}

fn score(ctx: &SessionContext<'_>, vf: &Expr, view: &RouteView) -> f64 {
    match evaluate_vf(vf, &view.state, ctx.world) {
        Ok(v) if !v.is_nan() => v,
        _ => f64::NEG_INFINITY,
    }
}

/// Multi-turn value-function editing. Returns the last valid expression,
/// or the incoming one if none was accepted.
pub fn navigator_session(
    ctx: &SessionContext<'_>,
    candidates: &[RouteView],
    instruction: &str,
    log: &mut AgentLog,
) -> Expr {
    let system = system("navigator_system");
    let limit = ctx.config.turn_limit.max(1);
    let mut vf = ctx.value_function.clone();
    let mut acts: Vec<String> = Vec::new();
    for turn in 1..=limit {
        let mut ranked: Vec<(f64, &RouteView)> = candidates.iter().map(|c| (score(ctx, &vf, c), c)).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let items = ranked
            .iter()
            .enumerate()
            .map(|(i, (v, c))| {
                Context::new()
                    .int("IDX", i as i64)
                    .text("CANDIDATE_ROUTE_REPORT", format!("{} value={v}", c.report_text()))
            })
            .collect();
        let pctx = Context::new()
            .text("PREVIOUS_OUTPUT", "")
            .text("PRODUCT", ctx.product)
            .list("candidate_partial_route", items)
            .text("INSTRUCTION_FROM_COORDINATOR", instruction)
            .text("VALUE_FUNCTION", render_vf(&vf))
            .int("REMAINING_TURNS", (limit + 1 - turn) as i64)
            .list("previous_act", acts_list(&acts));
        let q = Ask {
            role: Role::Navigator,
            turn,
            system: &system,
            prompt: prompt("navigator_prompt", &pctx),
            facts: json!({"turn": turn}),
        };
        match ask(ctx, q, log, |_| Ok(())) {
            Some(AgentAction::SetValueFunction(text)) => match parse_vf(&text) {
                Ok(new) => {
                    acts.push(format!("SetValueFunction(\"{text}\"): accepted; routes reranked"));
                    vf = new;
                }
                Err(e) => {
                    log.notes.push(format!("navigator: invalid value function {text:?}: {e}"));
                    acts.push(format!("SetValueFunction(\"{text}\"): rejected, {e}"));
                }
            },
            Some(AgentAction::Finalize) => break,
            Some(other) => log.notes.push(format!("navigator: ignored {}", render_action(&other))),
            None => {
                log.notes.push("navigator: no usable reply; keeping the current value function".into());
                break;
            }
        }
    }
    vf
}

fn apply_regulator_action(preview: &mut RestrictionSet, action: &AgentAction) -> Vec<String> {
    let mut delta = RestrictionDelta::default();
    match action {
        AgentAction::RestrictMolecules(v) => delta.add_molecules = v.clone(),
        AgentAction::RestrictSpecificReactions(v) => delta.add_reactions = v.clone(),
        AgentAction::RestrictReactionTemplates(v) => delta.add_patterns = v.clone(),
        AgentAction::DepthLimit(n) => delta.depth_limit = Some(*n),
        AgentAction::UnrestrictMolecules(v) => delta.remove_molecules = v.clone(),
        AgentAction::UnrestrictSpecificReaction(s) => delta.remove_reactions = vec![s.clone()],
        AgentAction::UnrestrictReactionTemplate(s) => delta.remove_patterns = vec![s.clone()],
        _ => return vec![format!("{} is not a regulation action", render_action(action))],
    }
    preview.apply_delta(&delta)
}

fn ground_truth(ctx: &SessionContext<'_>, routes: &[RouteView]) -> Json {
    let mut out = serde_json::Map::new();
    for r in routes {
        let mols = r.state.reactions.iter().flat_map(|x| x.molecules()).chain(r.state.frontier.iter());
        for m in mols {
            let p = ctx.world.profile(m);
            out.insert(
                m.to_string(),
                json!({"truth_carcinogen": p.ground_truth_carcinogen, "truth_pyrophoric": p.ground_truth_pyrophoric}),
            );
        }
    }
    Json::Object(out)
}

/// Multi-turn restriction editing on a preview copy. Returns the net change
/// against the restrictions the session started from.
pub fn regulator_session(
    ctx: &SessionContext<'_>,
    routes: &[RouteView],
    instruction: &str,
    log: &mut AgentLog,
) -> RestrictionDelta {
    let system = system("regulator_system");
    let limit = ctx.config.turn_limit.max(1);
    let mut preview = ctx.restrictions.clone();
    let mut acts: Vec<String> = Vec::new();
    let mut previous_output = String::new();
    let truth = ground_truth(ctx, routes);
    let listing: Vec<Context> = routes
        .iter()
        .enumerate()
        .map(|(i, r)| Context::new().int("IDX", i as i64 + 1).text("ROUTE_REPORT", r.report_text()))
        .collect();
    for turn in 1..=limit {
        let pctx = Context::new()
            .int("REMAINING_TURNS", (limit + 1 - turn) as i64)
            .text("PRODUCT", ctx.product)
            .list("candidate_partial_route_from_coordinator_or_rejected_route_from_verifier", listing.clone())
            .text("RESTRICTIONS", preview.to_json())
            .text("PREVIOUS_OUTPUT", previous_output.clone())
            .text("INSTRUCTION_FROM_COORDINATOR_OR_VERIFIER", instruction)
            .list("previous_act", acts_list(&acts));
        let facts = json!({
            "turn": turn,
            "instruction": instruction,
            "constraints": ctx.constraints,
            "molecules": truth,
            "restricted": preview.to_spec().molecules,
        });
        let q = Ask { role: Role::Regulator, turn, system: &system, prompt: prompt("regulator_prompt", &pctx), facts };
        let action = match ask(ctx, q, log, |_| Ok(())) {
            Some(AgentAction::Finalize) => break,
            Some(a) => a,
            None => {
                log.notes.push("regulator: no usable reply; keeping the restrictions so far".into());
                break;
            }
        };
        let warnings = apply_regulator_action(&mut preview, &action);
        let rendered = render_action(&action);
        let outcome = if warnings.is_empty() {
            format!("{rendered}: applied")
        } else {
            for w in &warnings {
                log.notes.push(format!("regulator: {w}"));
            }
            format!("{rendered}: {}", warnings.join("; "))
        };
        let surviving: Vec<String> = routes
            .iter()
            .filter(|r| {
                let h = route_height(&r.target, &r.state.reactions).unwrap_or(usize::MAX);
                preview.route_violation(r.state.reactions.iter(), h).is_none()
            })
            .map(|r| format!(" - {}", r.report_text()))
            .collect();
        previous_output = format!(
            "Result: {outcome}\nCurrent restrictions: {}\nRoutes remaining under the current restrictions:\n{}",
            preview.to_json(),
            if surviving.is_empty() { " (none)".to_string() } else { surviving.join("\n") }
        );
        acts.push(outcome);
    }
    RestrictionSet::diff(ctx.restrictions, &preview)
}

/// Judges a complete route against the rejection history.
pub fn verify_route(
    ctx: &SessionContext<'_>,
    proposed: &RouteView,
    history: &[RouteView],
    log: &mut AgentLog,
) -> Verdict {
    let system = system("verifier_system");
    let n = history.len();
    let shown: Vec<Context> = history
        .iter()
        .enumerate()
        .skip(n.saturating_sub(VERIFIER_HISTORY_SHOWN))
        .map(|(i, r)| Context::new().int("IDX", i as i64 + 1).text("REJECTED_ROUTE_REPORT", r.report_text()))
        .collect();
    let pctx = Context::new()
        .text("PRODUCT", ctx.product)
        .text("ROUTE_REPORT", proposed.report_text())
        .text("TASK_INSTRUCTIONS", ctx.task_instruction)
        .int("NUM_REJECTED_ROUTES", n as i64)
        .list("rejected_route_up_to_3", shown)
        .int("REMAINING_RETRO_ITERATIONS", ctx.remaining_iterations as i64);
    let facts = json!({
        "constraints": ctx.constraints,
        "proposed": proposed.report,
        "rejected": history.iter().map(|r| &r.report).collect::<Vec<_>>(),
    });
    let q = Ask { role: Role::Verifier, turn: 1, system: &system, prompt: prompt("verifier_prompt", &pctx), facts };
    let check = |a: &AgentAction| match a {
        AgentAction::AcceptPrevious(id, _) if *id > n => {
            Err(format!("AcceptPrevious({id}) refers to a route that was never rejected ({n} rejected so far)"))
        }
        _ => Ok(()),
    };
    match ask(ctx, q, log, check) {
        Some(AgentAction::AcceptProposed(reason)) => Verdict { decision: Decision::AcceptProposed, reason },
        Some(AgentAction::Reject(reason)) => Verdict { decision: Decision::Reject, reason },
        Some(AgentAction::AcceptPrevious(id, reason)) => Verdict { decision: Decision::AcceptPrevious(id), reason },
        _ => {
            log.notes.push("verifier: no usable reply; accepting the proposed route".into());
            Verdict { decision: Decision::AcceptProposed, reason: VERIFIER_FALLBACK_REASON.into() }
        }
    }
}

/// Asks the Coordinator for its next delegation. Falls back to
/// `ExpandDefault(1)`.
pub fn coordinator_delegate(
    ctx: &SessionContext<'_>,
    candidates: &[RouteView],
    previous_actions: &[String],
    log: &mut AgentLog,
) -> AgentAction {
    let system = system("coordinator_system");
    let items = candidates.iter().map(|c| Context::new().text("CANDIDATE_ROUTE_REPORT", c.report_text())).collect();
    let previous = previous_actions.iter().map(|a| Context::new().text("ACTION", a.clone())).collect();
    let pctx = Context::new()
        .text("PRODUCT", ctx.product)
        .list("candidate_route_from_simulation", items)
        .text("TASK_INSTRUCTION", ctx.task_instruction)
        .flag("not_first_delegation_step", !previous_actions.is_empty())
        .list("previous_action", previous)
        .text("RESTRICTIONS", ctx.restrictions.to_json())
        .text("VALUE_FUNCTION", render_vf(ctx.value_function));
    let flagged: BTreeSet<String> = candidates
        .iter()
        .filter_map(|c| c.report["molecules"].as_object())
        .flat_map(|m| m.iter())
        .filter(|(_, p)| p["carc_alert"].as_bool() == Some(true) || p["pyrophoric"].as_bool() == Some(true))
        .map(|(name, _)| name.clone())
        .collect();
    let facts = json!({
        "previous_actions": previous_actions,
        "flagged": flagged,
        "instruction": ctx.task_instruction,
    });
    let q =
        Ask { role: Role::Coordinator, turn: 1, system: &system, prompt: prompt("coordinator_prompt", &pctx), facts };
    ask(ctx, q, log, |_| Ok(())).unwrap_or_else(|| {
        log.notes.push("coordinator: no usable reply; falling back to ExpandDefault(1)".into());
        AgentAction::ExpandDefault(1)
    })
}
