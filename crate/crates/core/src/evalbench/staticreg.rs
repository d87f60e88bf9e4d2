use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chemworld::{Molecule, Pattern};
use crate::planner::RestrictionSet;

use super::EvalError;

/// One restriction-database record; `apply_when` holds product patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictionEntry {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub molecules: Vec<String>,
    #[serde(default)]
    pub specific_reactions: Vec<String>,
    #[serde(default)]
    pub reaction_templates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_limit: Option<i64>,
    #[serde(default)]
    pub rationale: String,
    pub apply_when: Vec<String>,
}

pub fn load_restriction_db(path: impl AsRef<Path>) -> Result<Vec<RestrictionEntry>, EvalError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| EvalError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| EvalError::Parse(format!("{}: {e}", path.display())))
}

fn entry_matches(index: usize, entry: &RestrictionEntry, product: &Molecule) -> Result<bool, EvalError> {
    let bad = |message: String| EvalError::MalformedEntry { index, message };
    if entry.kind != "restriction" {
        return Err(bad(format!("type must be \"restriction\", got {:?}", entry.kind)));
    }
    if entry.apply_when.is_empty() {
        return Err(bad("apply_when is empty".into()));
    }
    if entry.depth_limit.is_some_and(|d| d < -1) {
        return Err(bad("depth_limit below -1".into()));
    }
    let mut hit = false;
    for p in &entry.apply_when {
        let pat = Pattern::parse(p).map_err(|e| bad(format!("apply_when {p:?}: {e}")))?;
        hit |= !pat.matches(product).is_empty();
    }
    Ok(hit)
}

/// Union of every entry whose `apply_when` matches the product. The depth
/// limit is the most permissive one among matching entries that set it.
pub fn staticreg_restrictions(db: &[RestrictionEntry], product: &Molecule) -> Result<RestrictionSet, EvalError> {
    let mut set = RestrictionSet::default();
    let mut limits = Vec::new();
    for (index, entry) in db.iter().enumerate() {
        if !entry_matches(index, entry, product)? {
            continue;
        }
        let bad = |message: String| EvalError::MalformedEntry { index, message };
        for m in &entry.molecules {
            set.restrict_molecule(m).map_err(bad)?;
        }
        for r in &entry.specific_reactions {
            set.restrict_reaction(r).map_err(bad)?;
        }
        for t in &entry.reaction_templates {
            set.restrict_pattern(t).map_err(bad)?;
        }
        limits.extend(entry.depth_limit);
    }
    let depth = if limits.contains(&-1) { -1 } else { limits.into_iter().max().unwrap_or(-1) };
    set.set_depth_limit(depth).map_err(|message| EvalError::MalformedEntry { index: 0, message })?;
    Ok(set)
}
