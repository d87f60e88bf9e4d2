//! Route reports, validity and constraint checks, Pareto analysis, the
//! StaticReg and Pareto-10 baselines, the brute-force route oracle and the
//! benchmark runner.

mod benchmark;
mod constraints;
mod feasibility;
mod ghs;
mod oracle;
mod pareto;
mod pareto10;
mod report;
mod staticreg;
mod summary;
mod validate;

pub use benchmark::{
    bundled_scmo_manifest, load_benchmark, load_benchmark_str, run_benchmark, write_jsonl, BenchOptions,
};
pub use constraints::{check_constraints, ConstraintResult, ConstraintViolation};
pub use feasibility::{feasibility_check, FeasibilityJudge, LlmFeasibilityJudge, TopKFeasibility, FEASIBILITY_TOP_K};
pub use ghs::{GhsFetcher, GHS_CODE_PATTERN};
pub use oracle::{brute_force_routes, brute_force_routes_with, filter_routes, OracleLimits, DEFAULT_NODE_CAP};
pub use pareto::{dominates, dominates_objectives, pareto_front, pareto_front_reports, Objectives};
pub use pareto10::{pareto10, Pareto10Result};
pub use report::{build_report, summarize, MoleculeReport, ReportOptions, RouteReport};
pub use staticreg::{load_restriction_db, staticreg_restrictions, RestrictionEntry};
pub use summary::{compute_summary, summary_from_counts, BenchmarkSummary};
pub use validate::{structural_problems, validate_route, InvalidReason, ValidityVerdict};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid route: {}", .0.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidRoute(Vec<InvalidReason>),
    #[error("unknown constraint type {0:?}")]
    UnknownConstraintType(String),
    #[error("malformed restriction entry {index}: {message}")]
    MalformedEntry { index: usize, message: String },
    #[error("route enumeration exceeded {0} nodes")]
    BudgetExceeded(usize),
    #[error("max_depth must be at least 1")]
    DepthTooSmall,
    #[error("compound {0} not found")]
    NotFound(String),
    #[error("http error: {0}")]
    Http(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("{0}")]
    Io(String),
    #[error("llm backend: {0}")]
    Backend(String),
}
