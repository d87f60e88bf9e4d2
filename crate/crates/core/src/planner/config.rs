use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chemworld::DEFAULT_BRANCHING;
use crate::par::Execution;

use super::PlanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Plain,
    Masil,
    Rfas,
    Staticreg,
}

impl FromStr for System {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" => Ok(System::Plain),
            "masil" => Ok(System::Masil),
            "rfas" => Ok(System::Rfas),
            "staticreg" => Ok(System::Staticreg),
            other => Err(PlanError::UnknownSystem(other.to_string())),
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::Plain => "plain",
            System::Masil => "masil",
            System::Rfas => "rfas",
            System::Staticreg => "staticreg",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionPolicy {
    Value,
    Agentic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnPolicy {
    FirstFound,
    Verified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub i_max: usize,
    pub i_init: usize,
    pub k_candidates: usize,
    pub branching: usize,
    pub time_limit_seconds: u64,
    pub system: System,
    pub selection_policy: SelectionPolicy,
    /// `None` picks the system's natural policy.
    pub return_policy: Option<ReturnPolicy>,
    /// Non-expanding delegations (Pruning/ValueFn) allowed per iteration
    /// before the planner proceeds with argmax on its own.
    pub max_delegations_per_iteration: usize,
    pub execution: Execution,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            i_max: 500,
            i_init: 20,
            k_candidates: 5,
            branching: DEFAULT_BRANCHING,
            time_limit_seconds: 7200,
            system: System::Plain,
            selection_policy: SelectionPolicy::Value,
            return_policy: None,
            max_delegations_per_iteration: 3,
            execution: Execution::default(),
        }
    }
}

impl SearchConfig {
    pub fn for_system(system: System) -> Self {
        SearchConfig { system, ..Self::default() }
    }

    pub fn effective_return_policy(&self) -> ReturnPolicy {
        self.return_policy.unwrap_or(match self.system {
            System::Plain | System::Staticreg => ReturnPolicy::FirstFound,
            System::Masil | System::Rfas => ReturnPolicy::Verified,
        })
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::InvalidConfig(m.to_string()));
        if self.i_init > self.i_max && self.system == System::Masil {
            return bad("i_init must not exceed i_max");
        }
        if self.k_candidates == 0 {
            return bad("k_candidates must be at least 1");
        }
        if self.branching == 0 {
            return bad("branching must be at least 1");
        }
        Ok(())
    }
}
