use serde_json::{json, Value};

use crate::chemworld::{Molecule, World};
use crate::evalbench::{summarize, ReportOptions, RouteReport};
use crate::planner::Route;
use crate::vfdsl::RouteState;

/// A route as shown to agents: its state for value-function scoring plus a
/// JSON report built from agent-visible annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteView {
    pub id: String,
    pub target: Molecule,
    pub state: RouteState,
    pub report: Value,
}

impl RouteView {
    pub fn candidate(world: &World, id: &str, target: &Molecule, state: RouteState) -> Self {
        let summary = summarize(world, target, &state.reactions, &ReportOptions::default());
        let mut report = json!({"id": id});
        merge(&mut report, &summary);
        report["open_molecules"] = json!(state.frontier.iter().map(|m| m.to_string()).collect::<Vec<_>>());
        RouteView { id: id.to_string(), target: target.clone(), state, report }
    }

    pub fn complete(_world: &World, id: &str, route: &Route, report: &RouteReport) -> Self {
        let mut v = json!({"id": id});
        merge(&mut v, report);
        let state = RouteState { reactions: route.reactions.clone(), frontier: Vec::new() };
        RouteView { id: id.to_string(), target: route.target.clone(), state, report: v }
    }

    pub fn report_text(&self) -> String {
        self.report.to_string()
    }
}

fn merge(into: &mut Value, report: &RouteReport) {
    if let (Some(obj), Ok(Value::Object(extra))) = (into.as_object_mut(), serde_json::to_value(report)) {
        obj.extend(extra);
    }
}
