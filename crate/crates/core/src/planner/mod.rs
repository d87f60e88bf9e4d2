//! Best-first search over partial routes, restriction enforcement and the
//! plain / MASIL / RFAS / StaticReg run loops.

mod config;
mod restrictions;
mod route;
mod run;
mod search;
mod task;

pub use config::{ReturnPolicy, SearchConfig, SelectionPolicy, System};
pub use restrictions::{RestrictionDelta, RestrictionSet, RestrictionSpec};
pub use route::{route_height, Route};
pub use run::{run, run_from, PlanResult, PlanStatus, RejectedRoute, RunEnv, Timestamp};
pub use search::{
    candidate_id, init_search, CandidateRef, Event, EventKind, ExpansionOutcome, PruneSummary, SearchState,
};
pub use task::{Constraint, ConstraintKind, Task, TaskMode};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid product {0}")]
    InvalidProduct(String),
    #[error("target {0} is purchasable")]
    PurchasableTarget(String),
    #[error("unknown system {0:?}")]
    UnknownSystem(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no expandable candidates remain")]
    FrontierEmpty,
    #[error("candidate {0} is not on the frontier")]
    UnknownCandidate(String),
    #[error("route still has open molecules: {}", .0.join(", "))]
    IncompleteAssignment(Vec<String>),
}
