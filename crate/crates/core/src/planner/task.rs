use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chemworld::{ChemError, Molecule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskMode {
    Hcmo,
    Scmo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Carcinogen,
    Pyrophoric,
    User,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Carcinogen => "carcinogen",
            ConstraintKind::Pyrophoric => "pyrophoric",
            ConstraintKind::User => "user",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    #[serde(rename = "type")]
    pub kind: ConstraintKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub molecules: Vec<String>,
}

impl Constraint {
    pub fn new(kind: ConstraintKind) -> Self {
        Constraint { kind, molecules: Vec::new() }
    }

    pub fn user(molecules: &[&str]) -> Self {
        Constraint { kind: ConstraintKind::User, molecules: molecules.iter().map(|s| s.to_string()).collect() }
    }

    /// User-listed molecules in canonical form; entries that do not
    /// canonicalize are compared verbatim.
    pub fn listed(&self) -> Vec<String> {
        self.molecules.iter().map(|m| Molecule::parse(m).map(|c| c.to_string()).unwrap_or_else(|_| m.clone())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub product: String,
    pub mode: TaskMode,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub instruction: String,
}

impl Task {
    pub fn new(id: &str, product: &str) -> Self {
        Task {
            id: id.to_string(),
            product: product.to_string(),
            mode: TaskMode::Scmo,
            constraints: Vec::new(),
            instruction: String::new(),
        }
    }

    pub fn with_constraints(mut self, constraints: Vec<Constraint>) -> Self {
        self.mode = if constraints.is_empty() { TaskMode::Scmo } else { TaskMode::Hcmo };
        self.constraints = constraints;
        self
    }

    pub fn product_molecule(&self) -> Result<Molecule, ChemError> {
        Molecule::parse(&self.product)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
