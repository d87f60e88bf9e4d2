use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::agents::{
    coordinator_delegate, navigator_session, regulator_session, render_action, verify_route, AgentAction, AgentConfig,
    AgentLog, Decision, LlmClient, RouteView, SessionContext, TranscriptEntry,
};
use crate::chemworld::World;
use crate::evalbench::{build_report, ReportOptions, RestrictionEntry, RouteReport};
use crate::vfdsl::render_vf;

use super::search::{init_search, CandidateRef, Event, EventKind, ExpansionOutcome, SearchState};
use super::{Constraint, RestrictionSpec, ReturnPolicy, Route, SearchConfig, SelectionPolicy, System, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Solved,
    FailedBudget,
    FailedExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRoute {
    pub route: Route,
    pub report: RouteReport,
    pub feedback: String,
}

/// Wall-clock data, kept apart so result comparisons can drop it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub unix_ms: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub task_id: String,
    pub product: String,
    pub system: System,
    pub status: PlanStatus,
    pub route: Option<Route>,
    pub report: Option<RouteReport>,
    pub iterations_used: usize,
    pub constraints: Vec<Constraint>,
    pub value_function: String,
    pub restrictions: RestrictionSpec,
    pub rejected_routes: Vec<RejectedRoute>,
    pub event_log: Vec<Event>,
    pub transcript: Vec<TranscriptEntry>,
    pub timestamp: Timestamp,
}

impl PlanResult {
    pub fn is_solved(&self) -> bool {
        self.status == PlanStatus::Solved
    }

    /// JSON without the timestamp, for byte-level comparisons.
    pub fn to_json_without_timestamp(&self) -> String {
        let mut v = serde_json::to_value(self).expect("plan result serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timestamp");
        }
        v.to_string()
    }
}

pub struct RunEnv<'a> {
    pub world: &'a World,
    pub config: SearchConfig,
    pub agents: AgentConfig,
    pub llm: &'a dyn LlmClient,
    pub restriction_db: Option<&'a [RestrictionEntry]>,
    pub report_options: ReportOptions,
}

impl<'a> RunEnv<'a> {
    pub fn new(world: &'a World, config: SearchConfig, llm: &'a dyn LlmClient) -> Self {
        RunEnv {
            world,
            config,
            agents: AgentConfig::default(),
            llm,
            restriction_db: None,
            report_options: ReportOptions::default(),
        }
    }
}

fn timestamp(start: Instant) -> Timestamp {
    let unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
    Timestamp { unix_ms, wall_seconds: start.elapsed().as_secs_f64() }
}

pub fn run(task: &Task, env: &RunEnv<'_>) -> PlanResult {
    let start = Instant::now();
    if let Err(e) = env.config.validate() {
        return init_failure(task, env, e.to_string(), start);
    }
    match init_search(task, env.world, &env.config, env.restriction_db) {
        Ok(state) => drive(state, task, env, start),
        Err(e) => init_failure(task, env, e.to_string(), start),
    }
}

/// Continues a prepared search, e.g. one with restrictions applied up front.
pub fn run_from(state: SearchState<'_>, task: &Task, env: &RunEnv<'_>) -> PlanResult {
    drive(state, task, env, Instant::now())
}

fn init_failure(task: &Task, env: &RunEnv<'_>, message: String, start: Instant) -> PlanResult {
    PlanResult {
        task_id: task.id.clone(),
        product: task.product.clone(),
        system: env.config.system,
        status: PlanStatus::FailedExhausted,
        route: None,
        report: None,
        iterations_used: 0,
        constraints: task.constraints.clone(),
        value_function: "Synth()".into(),
        restrictions: RestrictionSpec { depth_limit: -1, ..Default::default() },
        rejected_routes: Vec::new(),
        event_log: vec![Event {
            iteration: 0,
            kind: EventKind::Exhausted,
            detail: format!("cannot start search: {message}"),
        }],
        transcript: Vec::new(),
        timestamp: timestamp(start),
    }
}

struct Driver<'s, 'w, 'e> {
    state: SearchState<'w>,
    task: &'s Task,
    env: &'s RunEnv<'e>,
    log: AgentLog,
    previous_actions: Vec<String>,
    rejected: Vec<RejectedRoute>,
    events: Vec<Event>,
}

fn session_ctx<'a>(state: &'a SearchState<'_>, task: &'a Task, env: &'a RunEnv<'_>) -> SessionContext<'a> {
    SessionContext {
        world: env.world,
        product: &task.product,
        task_instruction: &task.instruction,
        constraints: &task.constraints,
        value_function: state.value_function(),
        restrictions: state.restrictions(),
        remaining_iterations: env.config.i_max.saturating_sub(state.iteration()),
        llm: env.llm,
        config: &env.agents,
    }
}

enum Step {
    Continue,
    Done(PlanStatus, Option<(Route, RouteReport)>),
}

impl<'s, 'w, 'e> Driver<'s, 'w, 'e> {
    fn flush(&mut self) {
        self.events.extend(self.state.take_events());
        let iteration = self.state.iteration();
        for note in self.log.notes.drain(..) {
            self.events.push(Event { iteration, kind: EventKind::Warning, detail: note });
        }
    }

    fn note(&mut self, kind: EventKind, detail: String) {
        self.flush();
        self.state.log(kind, detail);
        self.flush();
    }

    fn views(&self, candidates: &[CandidateRef]) -> Vec<RouteView> {
        candidates
            .iter()
            .filter_map(|c| {
                let st = self.state.route_state(c.index)?;
                Some(RouteView::candidate(self.env.world, &c.id, self.state.root(), st))
            })
            .collect()
    }

    fn regulate(&mut self, routes: &[RouteView], instruction: &str) {
        let delta = {
            let ctx = session_ctx(&self.state, self.task, self.env);
            regulator_session(&ctx, routes, instruction, &mut self.log)
        };
        self.note(EventKind::Regulator, format!("delta {}", serde_json::to_string(&delta).unwrap_or_default()));
        self.state.apply_restrictions(&delta);
        self.flush();
    }

    /// Consults the Coordinator until it hands control back. Returns the
    /// requested `ExpandDefault` budget and an optional `Expand` target, or
    /// `None` when the frontier emptied under new restrictions.
    fn delegate(&mut self) -> Option<(usize, Option<String>)> {
        let cap = self.env.config.max_delegations_per_iteration.max(1);
        for _ in 0..cap {
            let candidates = self.state.simulate(self.env.config.k_candidates).ok()?;
            let views = self.views(&candidates);
            let action = {
                let ctx = session_ctx(&self.state, self.task, self.env);
                coordinator_delegate(&ctx, &views, &self.previous_actions, &mut self.log)
            };
            let rendered = render_action(&action);
            self.note(EventKind::Delegate, rendered.clone());
            self.previous_actions.push(rendered);
            match action {
                AgentAction::Pruning(instruction) => self.regulate(&views, &instruction),
                AgentAction::ValueFn(instruction) => {
                    let vf = {
                        let ctx = session_ctx(&self.state, self.task, self.env);
                        navigator_session(&ctx, &views, &instruction, &mut self.log)
                    };
                    self.note(EventKind::Navigator, format!("value function {}", render_vf(&vf)));
                    self.state.set_value_function(vf);
                    self.flush();
                }
                AgentAction::ExpandDefault(n) => {
                    let remaining = self.env.config.i_max.saturating_sub(self.state.iteration()).max(1);
                    return Some((n.clamp(1, remaining), None));
                }
                AgentAction::Expand(id) => return Some((0, Some(id))),
                other => {
                    self.note(EventKind::Fallback, format!("unexpected coordinator action {}", render_action(&other)));
                    return Some((0, None));
                }
            }
        }
        self.note(EventKind::Fallback, format!("{cap} delegations without expansion; expanding argmax"));
        self.state.simulate(1).ok()?;
        Some((0, None))
    }

    fn judge(&mut self, route: Route) -> Step {
        let report = match build_report(&route, self.env.world, &self.env.report_options) {
            Ok(r) => r,
            Err(e) => {
                self.note(EventKind::Warning, format!("completed route has no report: {e}"));
                return Step::Continue;
            }
        };
        if self.env.config.effective_return_policy() == ReturnPolicy::FirstFound {
            return Step::Done(PlanStatus::Solved, Some((route, report)));
        }
        if let Some(why) =
            self.state.restrictions().route_violation(route.reactions.iter(), route.height().unwrap_or(0))
        {
            self.note(EventKind::Warning, format!("completed route dropped: {why}"));
            return Step::Continue;
        }
        let proposed = RouteView::complete(self.env.world, "proposed", &route, &report);
        let history: Vec<RouteView> = self
            .rejected
            .iter()
            .enumerate()
            .map(|(i, r)| RouteView::complete(self.env.world, &(i + 1).to_string(), &r.route, &r.report))
            .collect();
        let verdict = {
            let ctx = session_ctx(&self.state, self.task, self.env);
            verify_route(&ctx, &proposed, &history, &mut self.log)
        };
        match verdict.decision {
            Decision::AcceptProposed => {
                self.note(EventKind::Verifier, format!("accepted: {}", verdict.reason));
                Step::Done(PlanStatus::Solved, Some((route, report)))
            }
            Decision::AcceptPrevious(id) => {
                let r = self.rejected[id - 1].clone();
                let height = r.route.height().unwrap_or(0);
                if let Some(why) = self.state.restrictions().route_violation(r.route.reactions.iter(), height) {
                    self.note(EventKind::Warning, format!("rejected route {id} cannot be accepted: {why}"));
                    return Step::Continue;
                }
                self.note(EventKind::Verifier, format!("accepted rejected route {id}: {}", verdict.reason));
                Step::Done(PlanStatus::Solved, Some((r.route, r.report)))
            }
            Decision::Reject => {
                let n = self.rejected.len() + 1;
                self.note(EventKind::Verifier, format!("rejected route {n}: {}", verdict.reason));
                self.previous_actions.push(format!("Verifier rejected route {n}: {}", verdict.reason));
                self.rejected.push(RejectedRoute { route, report, feedback: verdict.reason.clone() });
                if self.env.config.system == System::Rfas {
                    self.regulate(&[proposed], &verdict.reason);
                }
                Step::Continue
            }
        }
    }

    fn iterate(&mut self, pending_default: &mut usize) -> Step {
        let config = &self.env.config;
        let mut choice = None;
        let masil_turn = config.system == System::Masil && self.state.iteration() >= config.i_init;
        if masil_turn && *pending_default == 0 {
            match self.delegate() {
                Some((n, id)) => {
                    *pending_default = n;
                    choice = id;
                }
                None => return Step::Done(PlanStatus::FailedExhausted, None),
            }
        }
        let Ok(candidates) = self.state.simulate(self.env.config.k_candidates) else {
            return Step::Done(PlanStatus::FailedExhausted, None);
        };
        let policy = if choice.is_some() { self.env.config.selection_policy } else { SelectionPolicy::Value };
        let chosen = self.state.select(&candidates, policy, choice.as_deref());
        let outcome = self.state.expand(&chosen);
        self.state.advance_iteration();
        *pending_default = pending_default.saturating_sub(1);
        self.flush();
        if let ExpansionOutcome::Completed { routes, .. } = outcome {
            for route in routes {
                if let Step::Done(status, found) = self.judge(route) {
                    return Step::Done(status, found);
                }
            }
        }
        Step::Continue
    }
}

fn drive(state: SearchState<'_>, task: &Task, env: &RunEnv<'_>, start: Instant) -> PlanResult {
    let mut d = Driver {
        state,
        task,
        env,
        log: AgentLog::default(),
        previous_actions: Vec::new(),
        rejected: Vec::new(),
        events: Vec::new(),
    };
    d.flush();
    let limit = std::time::Duration::from_secs(env.config.time_limit_seconds);
    let mut pending_default = 0usize;
    let (status, found) = loop {
        if d.state.iteration() >= env.config.i_max {
            d.note(EventKind::Budget, format!("iteration limit {} reached", env.config.i_max));
            break (PlanStatus::FailedBudget, None);
        }
        if start.elapsed() >= limit {
            d.note(EventKind::Budget, format!("time limit {}s reached", env.config.time_limit_seconds));
            break (PlanStatus::FailedBudget, None);
        }
        if let Step::Done(status, found) = d.iterate(&mut pending_default) {
            if status == PlanStatus::FailedExhausted {
                d.note(EventKind::Exhausted, "no expandable candidates remain".into());
            }
            break (status, found);
        }
    };
    d.flush();
    let (route, report) = match found {
        Some((r, rep)) => (Some(r), Some(rep)),
        None => (None, None),
    };
    PlanResult {
        task_id: task.id.clone(),
        product: task.product.clone(),
        system: env.config.system,
        status,
        route,
        report,
        iterations_used: d.state.iteration(),
        constraints: task.constraints.clone(),
        value_function: render_vf(d.state.value_function()),
        restrictions: d.state.restrictions().to_spec(),
        rejected_routes: d.rejected,
        event_log: d.events,
        transcript: d.log.transcript,
        timestamp: timestamp(start),
    }
}
