use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chemworld::{Molecule, Reaction, ReactionPattern};

/// Active pruning rules. `depth_limit` of -1 means unlimited; otherwise it
/// bounds the route height (longest chain of reactions from the target).
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionSet {
    molecules: BTreeSet<Molecule>,
    specific_reactions: BTreeSet<String>,
    patterns: BTreeMap<String, ReactionPattern>,
    depth_limit: i64,
}

impl Default for RestrictionSet {
    fn default() -> Self {
        RestrictionSet {
            molecules: BTreeSet::new(),
            specific_reactions: BTreeSet::new(),
            patterns: BTreeMap::new(),
            depth_limit: -1,
        }
    }
}

/// Plain serializable form, also the shape shown to agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RestrictionSpec {
    pub molecules: Vec<String>,
    pub specific_reactions: Vec<String>,
    pub reaction_templates: Vec<String>,
    pub depth_limit: i64,
}

impl Default for RestrictionSpec {
    fn default() -> Self {
        RestrictionSet::default().to_spec()
    }
}

/// Changes requested by a regulation session. Entries are raw strings and
/// are validated when applied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RestrictionDelta {
    pub add_molecules: Vec<String>,
    pub remove_molecules: Vec<String>,
    pub add_reactions: Vec<String>,
    pub remove_reactions: Vec<String>,
    pub add_patterns: Vec<String>,
    pub remove_patterns: Vec<String>,
    pub depth_limit: Option<i64>,
}

impl RestrictionDelta {
    pub fn is_empty(&self) -> bool {
        self == &RestrictionDelta::default()
    }

    pub fn restrict_molecules(molecules: &[&str]) -> Self {
        RestrictionDelta { add_molecules: molecules.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }
}

impl RestrictionSet {
    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
            && self.specific_reactions.is_empty()
            && self.patterns.is_empty()
            && self.depth_limit < 0
    }

    pub fn molecules(&self) -> &BTreeSet<Molecule> {
        &self.molecules
    }

    pub fn specific_reactions(&self) -> &BTreeSet<String> {
        &self.specific_reactions
    }

    pub fn pattern_texts(&self) -> impl Iterator<Item = &str> {
        self.patterns.keys().map(String::as_str)
    }

    pub fn depth_limit(&self) -> i64 {
        self.depth_limit
    }

    pub fn restrict_molecule(&mut self, raw: &str) -> Result<bool, String> {
        let m = Molecule::parse(raw).map_err(|e| format!("cannot restrict molecule {raw:?}: {e}"))?;
        Ok(self.molecules.insert(m))
    }

    pub fn unrestrict_molecule(&mut self, raw: &str) -> Result<bool, String> {
        let m = Molecule::parse(raw).map_err(|e| format!("cannot unrestrict molecule {raw:?}: {e}"))?;
        Ok(self.molecules.remove(&m))
    }

    pub fn restrict_reaction(&mut self, raw: &str) -> Result<bool, String> {
        let r = Reaction::parse(raw).map_err(|e| format!("cannot restrict reaction {raw:?}: {e}"))?;
        Ok(self.specific_reactions.insert(r.canonical()))
    }

    pub fn unrestrict_reaction(&mut self, raw: &str) -> Result<bool, String> {
        let r = Reaction::parse(raw).map_err(|e| format!("cannot unrestrict reaction {raw:?}: {e}"))?;
        Ok(self.specific_reactions.remove(&r.canonical()))
    }

    pub fn restrict_pattern(&mut self, raw: &str) -> Result<bool, String> {
        let key = raw.trim().to_string();
        let p = ReactionPattern::parse(&key).map_err(|e| format!("cannot restrict template {raw:?}: {e}"))?;
        Ok(self.patterns.insert(key, p).is_none())
    }

    pub fn unrestrict_pattern(&mut self, raw: &str) -> bool {
        self.patterns.remove(raw.trim()).is_some()
    }

    pub fn set_depth_limit(&mut self, n: i64) -> Result<(), String> {
        if n < -1 {
            return Err(format!("depth limit {n} is below -1"));
        }
        self.depth_limit = n;
        Ok(())
    }

    /// Applies a delta, returning warnings for entries that were invalid or
    /// had no effect.
    pub fn apply_delta(&mut self, delta: &RestrictionDelta) -> Vec<String> {
        let mut warnings = Vec::new();
        let mut note = |r: Result<bool, String>, what: &str, raw: &str| match r {
            Ok(true) => {}
            Ok(false) => warnings.push(format!("{what} {raw:?} had no effect")),
            Err(e) => warnings.push(e),
        };
        for m in &delta.add_molecules {
            note(self.restrict_molecule(m), "restricting molecule", m);
        }
        for m in &delta.remove_molecules {
            note(self.unrestrict_molecule(m), "unrestricting molecule", m);
        }
        for r in &delta.add_reactions {
            note(self.restrict_reaction(r), "restricting reaction", r);
        }
        for r in &delta.remove_reactions {
            note(self.unrestrict_reaction(r), "unrestricting reaction", r);
        }
        for p in &delta.add_patterns {
            note(self.restrict_pattern(p), "restricting template", p);
        }
        for p in &delta.remove_patterns {
            let removed = self.unrestrict_pattern(p);
            note(Ok(removed), "unrestricting template", p);
        }
        if let Some(n) = delta.depth_limit {
            if let Err(e) = self.set_depth_limit(n) {
                warnings.push(e);
            }
        }
        warnings
    }

    /// The delta that turns `before` into `after`.
    pub fn diff(before: &RestrictionSet, after: &RestrictionSet) -> RestrictionDelta {
        let names = |s: &BTreeSet<Molecule>, o: &BTreeSet<Molecule>| -> Vec<String> {
            s.difference(o).map(|m| m.to_string()).collect()
        };
        let strs = |s: &BTreeSet<String>, o: &BTreeSet<String>| -> Vec<String> { s.difference(o).cloned().collect() };
        let before_p: BTreeSet<String> = before.patterns.keys().cloned().collect();
        let after_p: BTreeSet<String> = after.patterns.keys().cloned().collect();
        RestrictionDelta {
            add_molecules: names(&after.molecules, &before.molecules),
            remove_molecules: names(&before.molecules, &after.molecules),
            add_reactions: strs(&after.specific_reactions, &before.specific_reactions),
            remove_reactions: strs(&before.specific_reactions, &after.specific_reactions),
            add_patterns: strs(&after_p, &before_p),
            remove_patterns: strs(&before_p, &after_p),
            depth_limit: (before.depth_limit != after.depth_limit).then_some(after.depth_limit),
        }
    }

    /// Why `reaction` is banned, if it is.
    pub fn reaction_violation(&self, reaction: &Reaction) -> Option<String> {
        if let Some(m) = reaction.molecules().find(|m| self.molecules.contains(*m)) {
            return Some(format!("restricted molecule {m}"));
        }
        let canonical = reaction.canonical();
        if self.specific_reactions.contains(&canonical) {
            return Some(format!("restricted reaction {canonical}"));
        }
        self.patterns
            .iter()
            .find(|(_, p)| p.matches(reaction))
            .map(|(text, _)| format!("reaction {canonical} matches restricted template {text}"))
    }

    pub fn height_allowed(&self, height: usize) -> bool {
        self.depth_limit < 0 || height as i64 <= self.depth_limit
    }

    pub fn route_violation<'a>(
        &self,
        reactions: impl IntoIterator<Item = &'a Reaction>,
        height: usize,
    ) -> Option<String> {
        if !self.height_allowed(height) {
            return Some(format!("height {height} exceeds depth limit {}", self.depth_limit));
        }
        reactions.into_iter().find_map(|r| self.reaction_violation(r))
    }

    pub fn to_spec(&self) -> RestrictionSpec {
        RestrictionSpec {
            molecules: self.molecules.iter().map(|m| m.to_string()).collect(),
            specific_reactions: self.specific_reactions.iter().cloned().collect(),
            reaction_templates: self.patterns.keys().cloned().collect(),
            depth_limit: self.depth_limit,
        }
    }

    pub fn from_spec(spec: &RestrictionSpec) -> Result<Self, String> {
        let mut s = RestrictionSet::default();
        for m in &spec.molecules {
            s.restrict_molecule(m)?;
        }
        for r in &spec.specific_reactions {
            s.restrict_reaction(r)?;
        }
        for p in &spec.reaction_templates {
            s.restrict_pattern(p)?;
        }
        s.set_depth_limit(spec.depth_limit)?;
        Ok(s)
    }

    /// Compact JSON as shown in prompts.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).unwrap_or_else(|_| "{}".into())
    }
}
