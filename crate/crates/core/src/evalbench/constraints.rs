use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chemworld::{Molecule, World};
use crate::planner::{Constraint, ConstraintKind, Route};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub kind: ConstraintKind,
    pub molecules: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintResult {
    pub violations: Vec<ConstraintViolation>,
}

impl ConstraintResult {
    pub fn satisfied(&self) -> bool {
        self.violations.is_empty()
    }
}

pub(crate) fn parse_kind(raw: &str) -> Result<ConstraintKind, EvalError> {
    match raw {
        "carcinogen" => Ok(ConstraintKind::Carcinogen),
        "pyrophoric" => Ok(ConstraintKind::Pyrophoric),
        "user" => Ok(ConstraintKind::User),
        other => Err(EvalError::UnknownConstraintType(other.to_string())),
    }
}

/// Hard-constraint check against ground-truth flags.
pub fn check_constraints(route: &Route, constraints: &[Constraint], world: &World) -> ConstraintResult {
    let molecules: BTreeSet<Molecule> = route.molecules();
    let mut violations = Vec::new();
    for c in constraints {
        let hits: Vec<String> = match c.kind {
            ConstraintKind::Carcinogen => {
                molecules.iter().filter(|m| world.profile(m).ground_truth_carcinogen).map(|m| m.to_string()).collect()
            }
            ConstraintKind::Pyrophoric => {
                molecules.iter().filter(|m| world.profile(m).ground_truth_pyrophoric).map(|m| m.to_string()).collect()
            }
            ConstraintKind::User => {
                let listed = c.listed();
                molecules.iter().map(|m| m.to_string()).filter(|m| listed.contains(m)).collect()
            }
        };
        if !hits.is_empty() {
            violations.push(ConstraintViolation { kind: c.kind, molecules: hits });
        }
    }
    ConstraintResult { violations }
}
