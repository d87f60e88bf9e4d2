use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use crate::agents::{AgentConfig, BackendSpec};
use crate::chemworld::World;
use crate::par::Execution;
use crate::planner::{run, ConstraintKind, PlanResult, RunEnv, SearchConfig, Task, TaskMode};

use super::{EvalError, ReportOptions, RestrictionEntry};

const BUNDLED_SCMO: &str = include_str!("../../data/scmo_manifest.json");

fn schema(path: String, message: impl Into<String>) -> EvalError {
    EvalError::SchemaViolation { path, message: message.into() }
}

/// Parses and checks a task manifest: hcmo tasks need constraints, scmo
/// tasks must have none, user constraints must list molecules and ids are
/// unique.
pub fn load_benchmark_str(text: &str) -> Result<Vec<Task>, EvalError> {
    let raw: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|e| schema("$".into(), format!("expected a list of tasks: {e}")))?;
    let mut tasks = Vec::with_capacity(raw.len());
    let mut ids = BTreeSet::new();
    for (i, v) in raw.into_iter().enumerate() {
        let at = format!("$[{i}]");
        for c in v["constraints"].as_array().into_iter().flatten() {
            if let Some(t) = c["type"].as_str() {
                super::constraints::parse_kind(t).map_err(|e| schema(format!("{at}.constraints"), e.to_string()))?;
            }
        }
        let task: Task = serde_json::from_value(v).map_err(|e| schema(at.clone(), e.to_string()))?;
        match task.mode {
            TaskMode::Hcmo if task.constraints.is_empty() => return Err(schema(at, "hcmo task without constraints")),
            TaskMode::Scmo if !task.constraints.is_empty() => return Err(schema(at, "scmo task with constraints")),
            _ => {}
        }
        if task.constraints.iter().any(|c| c.kind == ConstraintKind::User && c.molecules.is_empty()) {
            return Err(schema(at, "user constraint lists no molecules"));
        }
        if !ids.insert(task.id.clone()) {
            return Err(schema(at, format!("duplicate task id {:?}", task.id)));
        }
        tasks.push(task);
    }
    Ok(tasks)
}

pub fn load_benchmark(path: impl AsRef<Path>) -> Result<Vec<Task>, EvalError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| EvalError::Io(format!("cannot read {}: {e}", path.display())))?;
    load_benchmark_str(&text)
}

/// The bundled soft-constraint manifest.
pub fn bundled_scmo_manifest() -> Vec<Task> {
    load_benchmark_str(BUNDLED_SCMO).expect("bundled manifest is valid")
}

pub struct BenchOptions<'a> {
    pub world: &'a World,
    pub config: SearchConfig,
    pub agents: AgentConfig,
    pub backend: &'a BackendSpec,
    pub restriction_db: Option<&'a [RestrictionEntry]>,
    pub report_options: ReportOptions,
    /// Task-level parallelism.
    pub execution: Execution,
}

/// Runs every task, each with its own backend client. Results come back in
/// manifest order.
pub fn run_benchmark(tasks: &[Task], opts: &BenchOptions<'_>) -> Result<Vec<PlanResult>, EvalError> {
    opts.execution
        .map(tasks, |task| {
            let client = opts.backend.client().map_err(|e| EvalError::Backend(e.to_string()))?;
            let env = RunEnv {
                world: opts.world,
                config: opts.config.clone(),
                agents: opts.agents.clone(),
                llm: client.as_ref(),
                restriction_db: opts.restriction_db,
                report_options: opts.report_options,
            };
            Ok(run(task, &env))
        })
        .into_iter()
        .collect()
}

/// One JSON object per line, in order.
pub fn write_jsonl(results: &[PlanResult], out: &mut dyn Write) -> Result<(), EvalError> {
    for r in results {
        let line = serde_json::to_string(r).map_err(|e| EvalError::Parse(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| EvalError::Io(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_count() {
        assert_eq!(bundled_scmo_manifest().len(), 107);
    }

    #[test]
    fn schema_checks() {
        let bad_type =
            r#"[{"id": "a", "product": "p", "mode": "hcmo", "constraints": [{"type": "X"}], "instruction": ""}]"#;
        assert!(matches!(load_benchmark_str(bad_type), Err(EvalError::SchemaViolation { .. })));
        let hcmo_empty = r#"[{"id": "a", "product": "p", "mode": "hcmo", "constraints": [], "instruction": ""}]"#;
        assert!(matches!(load_benchmark_str(hcmo_empty), Err(EvalError::SchemaViolation { .. })));
        let user_empty =
            r#"[{"id": "a", "product": "p", "mode": "hcmo", "constraints": [{"type": "user"}], "instruction": ""}]"#;
        assert!(matches!(load_benchmark_str(user_empty), Err(EvalError::SchemaViolation { .. })));
        let dup = r#"[{"id": "a", "product": "p", "mode": "scmo"}, {"id": "a", "product": "q", "mode": "scmo"}]"#;
        assert!(matches!(load_benchmark_str(dup), Err(EvalError::SchemaViolation { .. })));
    }
}
