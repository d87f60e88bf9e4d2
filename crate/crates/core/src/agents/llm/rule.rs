//! Deterministic stand-in for a language model, driven only by the
//! structured `facts` attached to each request.
//!
//! | role        | reply |
//! |-------------|-------|
//! | verifier    | `Reject` naming every molecule that trips a task constraint on its agent-visible flags (carcinogen: `carc_alert`; pyrophoric: predicted flag; user: listed). Otherwise `AcceptProposed` when there is no clean earlier rejection or the route is no worse on all five objectives than the best clean one (lexicographic minimum); else `Reject`. |
//! | regulator   | First turn: `RestrictMolecules` for molecules named in the instruction whose ground-truth flags violate the task constraints (any carcinogen or pyrophoric when the task has none). Then `Finalize`. |
//! | navigator   | First turn: `SetValueFunction` with [`NAVIGATOR_VF`]; then `Finalize`. |
//! | coordinator | `Pruning` once, then `ValueFn` once, then `ExpandDefault(50)`. |

use std::collections::BTreeSet;

use serde_json::Value;

use super::{LlmClient, LlmError, LlmRequest};
use crate::agents::{render_action, AgentAction, Role};

pub const NAVIGATOR_VF: &str = "Synth() - 10*Pyro() - 10*FastCarc() - 0.01*BBPrice()";
pub const COORDINATOR_DEFAULT_RUN: usize = 50;

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleClient;

impl LlmClient for RuleClient {
    fn complete(&self, request: &LlmRequest<'_>) -> Result<String, LlmError> {
        let f = request.facts;
        let action = match request.role {
            Role::Verifier => verifier(f),
            Role::Regulator => regulator(f),
            Role::Navigator => navigator(f),
            Role::Coordinator => coordinator(f),
        };
        Ok(format!("Thought: rule policy for the {}.\nAction: `{}`<PAUSE>", request.role, render_action(&action)))
    }
}

fn strs(v: &Value) -> Vec<String> {
    v.as_array().map(|a| a.iter().filter_map(|x| x.as_str().map(str::to_string)).collect()).unwrap_or_default()
}

fn kinds(f: &Value) -> Vec<(String, Vec<String>)> {
    f["constraints"]
        .as_array()
        .map(|a| {
            a.iter().map(|c| (c["type"].as_str().unwrap_or_default().to_string(), strs(&c["molecules"]))).collect()
        })
        .unwrap_or_default()
}

/// Molecules in a report that trip a constraint on agent-visible flags.
fn visible_violations(report: &Value, constraints: &[(String, Vec<String>)]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let Some(mols) = report["molecules"].as_object() else { return out };
    for (name, m) in mols {
        for (kind, listed) in constraints {
            let hit = match kind.as_str() {
                "carcinogen" => m["carc_alert"].as_bool().unwrap_or(false),
                "pyrophoric" => m["pyrophoric"].as_bool().unwrap_or(false),
                "user" => listed.iter().any(|l| l == name),
                _ => false,
            };
            if hit {
                out.insert(name.clone());
            }
        }
    }
    out
}

fn objectives(report: &Value) -> [f64; 5] {
    ["carc", "pyro", "ghs_count", "smp", "rl"].map(|k| report[k].as_f64().unwrap_or(f64::INFINITY))
}

fn verifier(f: &Value) -> AgentAction {
    let constraints = kinds(f);
    let bad = visible_violations(&f["proposed"], &constraints);
    if !bad.is_empty() {
        let names: Vec<&str> = bad.iter().map(String::as_str).collect();
        return AgentAction::Reject(format!("The route uses constrained molecules: {}.", names.join(", ")));
    }
    let best = f["rejected"]
        .as_array()
        .into_iter()
        .flatten()
        .enumerate()
        .filter(|(_, r)| visible_violations(r, &constraints).is_empty())
        .map(|(i, r)| (objectives(r), i + 1))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mine = objectives(&f["proposed"]);
    match best {
        None => AgentAction::AcceptProposed("No constraint violations found.".into()),
        Some((theirs, _)) if mine.iter().zip(theirs.iter()).all(|(a, b)| a <= b) => {
            AgentAction::AcceptProposed("No constraint violations and no better rejected route.".into())
        }
        Some((_, idx)) => AgentAction::Reject(format!("Rejected route {idx} is better on at least one objective.")),
    }
}

fn named_tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| c.is_whitespace() || ",;:()[]{}`'\"".contains(c))
        .map(|t| t.trim_end_matches('.').to_ascii_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

fn regulator(f: &Value) -> AgentAction {
    if f["turn"].as_u64().unwrap_or(1) > 1 {
        return AgentAction::Finalize;
    }
    let constraints = kinds(f);
    let named = named_tokens(f["instruction"].as_str().unwrap_or_default());
    let restricted: BTreeSet<String> = strs(&f["restricted"]).into_iter().collect();
    let mut pick = Vec::new();
    if let Some(mols) = f["molecules"].as_object() {
        for (name, m) in mols {
            if !named.contains(name) || restricted.contains(name) {
                continue;
            }
            let carc = m["truth_carcinogen"].as_bool().unwrap_or(false);
            let pyro = m["truth_pyrophoric"].as_bool().unwrap_or(false);
            let violates = if constraints.is_empty() {
                carc || pyro
            } else {
                constraints.iter().any(|(kind, listed)| match kind.as_str() {
                    "carcinogen" => carc,
                    "pyrophoric" => pyro,
                    "user" => listed.contains(name),
                    _ => false,
                })
            };
            if violates {
                pick.push(name.clone());
            }
        }
    }
    if pick.is_empty() {
        AgentAction::Finalize
    } else {
        AgentAction::RestrictMolecules(pick)
    }
}

fn navigator(f: &Value) -> AgentAction {
    if f["turn"].as_u64().unwrap_or(1) > 1 {
        AgentAction::Finalize
    } else {
        AgentAction::SetValueFunction(NAVIGATOR_VF.into())
    }
}

fn coordinator(f: &Value) -> AgentAction {
    let previous = strs(&f["previous_actions"]);
    let instruction = f["instruction"].as_str().unwrap_or_default();
    let task = if instruction.trim().is_empty() { "Balance safety and cost." } else { instruction };
    if !previous.iter().any(|a| a.starts_with("Pruning(")) {
        let flagged = strs(&f["flagged"]);
        let lead = if flagged.is_empty() {
            "No molecules are flagged.".to_string()
        } else {
            format!("Flagged molecules: {}.", flagged.join(", "))
        };
        return AgentAction::Pruning(format!("{lead} {task}"));
    }
    if !previous.iter().any(|a| a.starts_with("ValueFn(")) {
        return AgentAction::ValueFn(format!("Penalize hazardous and expensive routes. {task}"));
    }
    AgentAction::ExpandDefault(COORDINATOR_DEFAULT_RUN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{parse_action, TOOL_NAMES};
    use serde_json::json;

    fn reply(role: Role, facts: Value) -> AgentAction {
        let text = RuleClient.complete(&LlmRequest { role, system: "", prompt: "", facts: &facts }).unwrap();
        parse_action(&text, &TOOL_NAMES).unwrap()
    }

    fn report(carc: f64, alert: bool) -> Value {
        json!({"carc": carc, "pyro": 0, "ghs_count": 1, "smp": 15.0, "rl": 1,
               "molecules": {"ph-cl": {"carc_alert": alert, "pyrophoric": false}}})
    }

    #[test]
    fn verifier_table() {
        let c = json!([{"type": "carcinogen"}]);
        let a = reply(Role::Verifier, json!({"constraints": c, "proposed": report(0.7, true), "rejected": []}));
        assert_eq!(a, AgentAction::Reject("The route uses constrained molecules: ph-cl.".into()));
        let a = reply(Role::Verifier, json!({"constraints": c, "proposed": report(0.3, false), "rejected": []}));
        assert!(matches!(a, AgentAction::AcceptProposed(_)));
        // the clean earlier rejection is better on carc
        let a = reply(
            Role::Verifier,
            json!({"constraints": [], "proposed": report(0.5, false), "rejected": [report(0.2, false)]}),
        );
        assert!(matches!(a, AgentAction::Reject(_)));
        // violating rejections do not count
        let a = reply(
            Role::Verifier,
            json!({"constraints": c, "proposed": report(0.5, false), "rejected": [report(0.2, true)]}),
        );
        assert!(matches!(a, AgentAction::AcceptProposed(_)));
        let u = json!([{"type": "user", "molecules": ["ph-cl"]}]);
        let a = reply(Role::Verifier, json!({"constraints": u, "proposed": report(0.3, false), "rejected": []}));
        assert!(matches!(a, AgentAction::Reject(_)));
    }

    #[test]
    fn regulator_table() {
        let mols = json!({"ph-cl": {"truth_carcinogen": true, "truth_pyrophoric": false},
                          "li-al": {"truth_carcinogen": false, "truth_pyrophoric": true}});
        let a = reply(
            Role::Regulator,
            json!({"turn": 1, "instruction": "Avoid ph-cl and li-al.", "constraints": [{"type": "carcinogen"}], "molecules": mols, "restricted": []}),
        );
        assert_eq!(a, AgentAction::RestrictMolecules(vec!["ph-cl".into()]));
        let a = reply(
            Role::Regulator,
            json!({"turn": 1, "instruction": "Avoid ph-cl, li-al", "constraints": [], "molecules": mols}),
        );
        assert_eq!(a, AgentAction::RestrictMolecules(vec!["li-al".into(), "ph-cl".into()]));
        let a = reply(Role::Regulator, json!({"turn": 2, "instruction": "ph-cl", "molecules": mols}));
        assert_eq!(a, AgentAction::Finalize);
    }

    #[test]
    fn navigator_and_coordinator_tables() {
        assert_eq!(reply(Role::Navigator, json!({"turn": 1})), AgentAction::SetValueFunction(NAVIGATOR_VF.into()));
        assert_eq!(reply(Role::Navigator, json!({"turn": 2})), AgentAction::Finalize);
        let a = reply(Role::Coordinator, json!({"previous_actions": [], "flagged": ["ph-cl"], "instruction": "x"}));
        assert_eq!(a, AgentAction::Pruning("Flagged molecules: ph-cl. x".into()));
        let a = reply(Role::Coordinator, json!({"previous_actions": ["Pruning('a')"], "instruction": "x"}));
        assert!(matches!(a, AgentAction::ValueFn(_)));
        let a = reply(Role::Coordinator, json!({"previous_actions": ["Pruning('a')", "ValueFn('b')"]}));
        assert_eq!(a, AgentAction::ExpandDefault(50));
    }

    #[test]
    fn pure_function_of_facts() {
        let f = json!({"constraints": [], "proposed": report(0.3, false), "rejected": []});
        let r = LlmRequest { role: Role::Verifier, system: "s", prompt: "p", facts: &f };
        assert_eq!(RuleClient.complete(&r), RuleClient.complete(&r));
    }
}
