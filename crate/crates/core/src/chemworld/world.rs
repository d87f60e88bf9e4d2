use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fingerprint, tanimoto, ChemError, Fingerprint, Molecule, Pattern, Reaction, WorldError};

pub const DEFAULT_BRANCHING: usize = 10;

const UNKNOWN_CARC_SCORE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeProfile {
    pub carc_score: f64,
    pub carc_alert: bool,
    pub ground_truth_carcinogen: bool,
    pub ground_truth_pyrophoric: bool,
    pub predicted_pyrophoric: bool,
    pub ghs_codes: BTreeSet<String>,
    pub purchasable: bool,
    pub synth_cost: f64,
    pub price: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionTemplate {
    pub id: String,
    pub product: Pattern,
    pub reactants: Vec<Pattern>,
    pub plausibility: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum ReactionSource {
    Explicit,
    Template(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredReaction {
    pub reaction: Reaction,
    pub plausibility: f64,
    pub source: ReactionSource,
}

/// Immutable chemistry universe. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct World {
    profiles: BTreeMap<Molecule, MoleculeProfile>,
    explicit: BTreeMap<Molecule, Vec<ScoredReaction>>,
    templates: Vec<ReactionTemplate>,
    building_blocks: BTreeMap<Molecule, f64>,
    pyrophoric_refs: Vec<Molecule>,
    ref_fingerprints: Vec<Fingerprint>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorld {
    #[serde(default)]
    molecules: BTreeMap<String, RawMolecule>,
    #[serde(default)]
    building_blocks: BTreeMap<String, Option<f64>>,
    #[serde(default)]
    reactions: Vec<RawReaction>,
    #[serde(default)]
    templates: Vec<RawTemplate>,
    #[serde(default)]
    pyrophoric_refs: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMolecule {
    carc_score: Option<f64>,
    #[serde(default)]
    carc_alert: bool,
    #[serde(default)]
    truth_carcinogen: bool,
    #[serde(default)]
    truth_pyrophoric: bool,
    #[serde(default)]
    ghs: Vec<String>,
    synth_cost: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReaction {
    product: String,
    reactants: Vec<String>,
    plausibility: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    id: String,
    product: String,
    reactants: Vec<String>,
    plausibility: f64,
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> WorldError {
    WorldError::SchemaViolation { path: path.into(), message: message.into() }
}

fn canon(path: &str, raw: &str) -> Result<Molecule, WorldError> {
    Molecule::parse(raw).map_err(|e| violation(path, e.to_string()))
}

fn is_ghs_code(code: &str) -> bool {
    code.len() == 4 && code.starts_with('H') && code[1..].chars().all(|c| c.is_ascii_digit())
}

fn check_plausibility(path: &str, p: f64) -> Result<(), WorldError> {
    if p.is_finite() && p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(violation(path, format!("plausibility {p} outside (0, 1]")))
    }
}

impl World {
    pub fn from_json_str(text: &str) -> Result<Self, WorldError> {
        let raw: RawWorld = serde_json::from_str(text).map_err(|e| WorldError::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawWorld) -> Result<Self, WorldError> {
        let mut building_blocks = BTreeMap::new();
        for (name, price) in &raw.building_blocks {
            let path = format!("building_blocks.{name}");
            let mol = canon(&path, name)?;
            let price = price.ok_or_else(|| violation(&path, "missing price"))?;
            if !price.is_finite() || price < 0.0 {
                return Err(violation(&path, format!("price {price} is not a finite nonnegative number")));
            }
            building_blocks.insert(mol, price);
        }

        let mut refs = Vec::new();
        for (i, name) in raw.pyrophoric_refs.iter().enumerate() {
            refs.push(canon(&format!("pyrophoric_refs[{i}]"), name)?);
        }
        let ref_fingerprints = refs.iter().map(fingerprint).collect();

        let mut world = World {
            profiles: BTreeMap::new(),
            explicit: BTreeMap::new(),
            templates: Vec::new(),
            building_blocks,
            pyrophoric_refs: refs,
            ref_fingerprints,
        };

        for (name, m) in &raw.molecules {
            let path = format!("molecules.{name}");
            let mol = canon(&path, name)?;
            let carc_score = m.carc_score.unwrap_or(UNKNOWN_CARC_SCORE);
            if !(0.0..=1.0).contains(&carc_score) {
                return Err(violation(format!("{path}.carc_score"), format!("{carc_score} outside [0, 1]")));
            }
            if let Some(bad) = m.ghs.iter().find(|c| !is_ghs_code(c)) {
                return Err(violation(format!("{path}.ghs"), format!("{bad:?} is not an H-code")));
            }
            let synth_cost = m.synth_cost.unwrap_or(mol.token_count() as f64);
            if !synth_cost.is_finite() || synth_cost < 0.0 {
                return Err(violation(format!("{path}.synth_cost"), "must be finite and nonnegative"));
            }
            let mut profile = world.default_profile(&mol);
            profile.carc_score = carc_score;
            profile.carc_alert = m.carc_alert;
            profile.ground_truth_carcinogen = m.truth_carcinogen;
            profile.ground_truth_pyrophoric = m.truth_pyrophoric;
            profile.ghs_codes = m.ghs.iter().cloned().collect();
            profile.synth_cost = synth_cost;
            world.profiles.insert(mol, profile);
        }

        for (i, r) in raw.reactions.iter().enumerate() {
            let path = format!("reactions[{i}]");
            let product = canon(&format!("{path}.product"), &r.product)?;
            let reactants = r
                .reactants
                .iter()
                .enumerate()
                .map(|(j, s)| canon(&format!("{path}.reactants[{j}]"), s))
                .collect::<Result<Vec<_>, _>>()?;
            check_plausibility(&format!("{path}.plausibility"), r.plausibility)?;
            let reaction = Reaction::new(reactants, product.clone()).map_err(|e| violation(&path, e.to_string()))?;
            if reaction.is_self_loop() {
                return Err(violation(&path, "product appears among its own reactants"));
            }
            world.explicit.entry(product).or_default().push(ScoredReaction {
                reaction,
                plausibility: r.plausibility,
                source: ReactionSource::Explicit,
            });
        }

        for (i, t) in raw.templates.iter().enumerate() {
            let path = format!("templates[{i}]");
            let pat = |p: &str, s: &str| Pattern::parse(s).map_err(|e| violation(p, e.to_string()));
            let product = pat(&format!("{path}.product"), &t.product)?;
            let reactants = t
                .reactants
                .iter()
                .enumerate()
                .map(|(j, s)| pat(&format!("{path}.reactants[{j}]"), s))
                .collect::<Result<Vec<_>, _>>()?;
            if reactants.is_empty() {
                return Err(violation(&path, ChemError::NoReactants.to_string()));
            }
            if product.has_wildcard() || reactants.iter().any(Pattern::has_wildcard) {
                return Err(violation(&path, "templates may not use the anonymous wildcard"));
            }
            for (j, rp) in reactants.iter().enumerate() {
                if let Some(v) = rp.variable() {
                    if product.variable() != Some(v) {
                        return Err(violation(
                            format!("{path}.reactants[{j}]"),
                            format!("variable ${v} does not appear in the product pattern"),
                        ));
                    }
                }
            }
            check_plausibility(&format!("{path}.plausibility"), t.plausibility)?;
            world.templates.push(ReactionTemplate {
                id: t.id.clone(),
                product,
                reactants,
                plausibility: t.plausibility,
            });
        }
        Ok(world)
    }

    fn default_profile(&self, mol: &Molecule) -> MoleculeProfile {
        let price = self.building_blocks.get(mol).copied();
        MoleculeProfile {
            carc_score: UNKNOWN_CARC_SCORE,
            carc_alert: false,
            ground_truth_carcinogen: false,
            ground_truth_pyrophoric: false,
            predicted_pyrophoric: self.predict_pyrophoric(mol),
            ghs_codes: BTreeSet::new(),
            purchasable: price.is_some(),
            synth_cost: mol.token_count() as f64,
            price,
        }
    }

    /// True iff some reference fingerprint is identical in Tanimoto terms.
    pub fn predict_pyrophoric(&self, mol: &Molecule) -> bool {
        let fp = fingerprint(mol);
        self.ref_fingerprints.iter().any(|r| tanimoto(&fp, r).map(|s| s == 1.0).unwrap_or(false))
    }

    pub fn profile(&self, mol: &Molecule) -> MoleculeProfile {
        match self.profiles.get(mol) {
            Some(p) => p.clone(),
            None => self.default_profile(mol),
        }
    }

    pub fn is_purchasable(&self, mol: &Molecule) -> bool {
        self.building_blocks.contains_key(mol)
    }

    pub fn price(&self, mol: &Molecule) -> Option<f64> {
        self.building_blocks.get(mol).copied()
    }

    pub fn synth_cost(&self, mol: &Molecule) -> f64 {
        self.profiles.get(mol).map(|p| p.synth_cost).unwrap_or(mol.token_count() as f64)
    }

    pub fn molecules(&self) -> impl Iterator<Item = &Molecule> {
        self.profiles.keys()
    }

    /// Every molecule the file mentions: profiles, catalog, reactions, refs.
    pub fn all_named_molecules(&self) -> BTreeSet<Molecule> {
        let mut out: BTreeSet<Molecule> = self.profiles.keys().cloned().collect();
        out.extend(self.building_blocks.keys().cloned());
        out.extend(self.pyrophoric_refs.iter().cloned());
        for list in self.explicit.values() {
            for sr in list {
                out.extend(sr.reaction.molecules().cloned());
            }
        }
        out
    }

    pub fn building_blocks(&self) -> &BTreeMap<Molecule, f64> {
        &self.building_blocks
    }

    pub fn templates(&self) -> &[ReactionTemplate] {
        &self.templates
    }

    pub fn pyrophoric_refs(&self) -> &[Molecule] {
        &self.pyrophoric_refs
    }

    pub fn explicit_reactions(&self) -> impl Iterator<Item = &ScoredReaction> {
        self.explicit.values().flatten()
    }

    pub fn molecule_count(&self) -> usize {
        self.profiles.len()
    }

    pub fn reaction_count(&self) -> usize {
        self.explicit.values().map(Vec::len).sum()
    }

    pub fn template_count(&self) -> usize {
        self.templates.len()
    }
}

pub fn load_world(path: impl AsRef<Path>) -> Result<World, WorldError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| WorldError::Io { path: path.display().to_string(), source })?;
    World::from_json_str(&text)
}

pub fn annotate(world: &World, molecule: &Molecule) -> MoleculeProfile {
    world.profile(molecule)
}

/// Candidate reactions producing `molecule`: explicit entries plus template
/// instantiations, deduplicated (max plausibility wins), sorted by
/// plausibility descending then canonical string, truncated to `branching`.
pub fn expand_retro(world: &World, molecule: &Molecule, branching: usize) -> Vec<ScoredReaction> {
    let mut by_key: BTreeMap<String, ScoredReaction> = BTreeMap::new();
    let mut offer = |sr: ScoredReaction| {
        let key = sr.reaction.canonical();
        match by_key.get(&key) {
            Some(prev) if prev.plausibility >= sr.plausibility => {}
            _ => {
                by_key.insert(key, sr);
            }
        }
    };
    if let Some(list) = world.explicit.get(molecule) {
        list.iter().cloned().for_each(&mut offer);
    }
    for t in &world.templates {
        for binding in t.product.matches(molecule) {
            let reactants: Option<Vec<Molecule>> = t.reactants.iter().map(|p| p.instantiate(&binding)).collect();
            let Some(reactants) = reactants else { continue };
            let Ok(reaction) = Reaction::new(reactants, molecule.clone()) else { continue };
            if reaction.is_self_loop() {
                continue;
            }
            offer(ScoredReaction {
                reaction,
                plausibility: t.plausibility,
                source: ReactionSource::Template(t.id.clone()),
            });
        }
    }
    let mut out: Vec<(String, ScoredReaction)> = by_key.into_iter().collect();
    out.sort_by(|(ka, a), (kb, b)| b.plausibility.total_cmp(&a.plausibility).then_with(|| ka.cmp(kb)));
    out.into_iter().take(branching).map(|(_, sr)| sr).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = include_str!("../../data/tiny.world.json");

    fn m(s: &str) -> Molecule {
        Molecule::parse(s).unwrap()
    }

    fn tiny() -> World {
        World::from_json_str(TINY).unwrap()
    }

    #[test]
    fn tiny_counts() {
        let w = tiny();
        assert_eq!((w.molecule_count(), w.reaction_count(), w.template_count()), (6, 2, 1));
    }

    #[test]
    fn explicit_lookup() {
        let got = expand_retro(&tiny(), &m("ac-ester"), DEFAULT_BRANCHING);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].reaction.canonical(), "ac-acid.me-oh>>ac-ester");
        assert_eq!(got[0].plausibility, 0.9);
    }

    #[test]
    fn template_instantiation() {
        let got = expand_retro(&tiny(), &m("ph-ester"), DEFAULT_BRANCHING);
        let names: Vec<String> = got.iter().map(|s| s.reaction.canonical()).collect();
        assert_eq!(names, vec!["me-oh.ph-acid>>ph-ester"]);
        assert_eq!(got[0].source, ReactionSource::Template("ester-from-acid".into()));
        assert!(expand_retro(&tiny(), &m("zz-qq"), DEFAULT_BRANCHING).is_empty());
    }

    #[test]
    fn dedup_keeps_max_and_truncates() {
        let text = r#"{
          "molecules": {}, "building_blocks": {"a": 1, "b": 1},
          "reactions": [
            {"product": "x-y", "reactants": ["x-z"], "plausibility": 0.2},
            {"product": "x-y", "reactants": ["a"], "plausibility": 0.5},
            {"product": "x-y", "reactants": ["b"], "plausibility": 0.5}
          ],
          "templates": [{"id": "t", "product": "$X-y", "reactants": ["$X-z"], "plausibility": 0.7}],
          "pyrophoric_refs": []
        }"#;
        let w = World::from_json_str(text).unwrap();
        let got: Vec<(String, f64)> =
            expand_retro(&w, &m("x-y"), 10).into_iter().map(|s| (s.reaction.canonical(), s.plausibility)).collect();
        assert_eq!(got, vec![("x-z>>x-y".into(), 0.7), ("a>>x-y".into(), 0.5), ("b>>x-y".into(), 0.5)]);
        assert_eq!(expand_retro(&w, &m("x-y"), 2).len(), 2);
    }

    #[test]
    fn template_self_loop_dropped() {
        let text = r#"{"templates": [{"id": "t", "product": "$X", "reactants": ["$X", "h"], "plausibility": 0.5}]}"#;
        let w = World::from_json_str(text).unwrap();
        assert!(expand_retro(&w, &m("q"), 10).is_empty());
    }

    #[test]
    fn annotations() {
        let w = tiny();
        let ph = annotate(&w, &m("ph-cl"));
        assert!(ph.carc_alert);
        assert_eq!(ph.ghs_codes.iter().cloned().collect::<Vec<_>>(), vec!["H351"]);
        assert!(annotate(&w, &m("li-al")).predicted_pyrophoric);
        let unknown = annotate(&w, &m("zz-qq"));
        assert_eq!(unknown.carc_score, 0.5);
        assert_eq!(unknown.synth_cost, 2.0);
        assert!(!unknown.purchasable && !unknown.carc_alert && unknown.ghs_codes.is_empty());
        assert!(!unknown.ground_truth_carcinogen && !unknown.ground_truth_pyrophoric);
        assert_eq!(annotate(&w, &m("me-oh")).price, Some(5.0));
    }

    #[test]
    fn load_errors() {
        assert!(matches!(World::from_json_str(""), Err(WorldError::Parse(_))));
        let missing = r#"{"building_blocks": {"a": null}}"#;
        match World::from_json_str(missing) {
            Err(WorldError::SchemaViolation { path, .. }) => assert_eq!(path, "building_blocks.a"),
            other => panic!("expected schema violation, got {other:?}"),
        }
        let self_loop = r#"{"reactions": [{"product": "a", "reactants": ["a", "b"], "plausibility": 0.5}]}"#;
        assert!(matches!(World::from_json_str(self_loop), Err(WorldError::SchemaViolation { .. })));
        let free_var = r#"{"templates": [{"id": "t", "product": "x", "reactants": ["$X"], "plausibility": 0.5}]}"#;
        assert!(matches!(World::from_json_str(free_var), Err(WorldError::SchemaViolation { .. })));
        let bad_p = r#"{"reactions": [{"product": "a", "reactants": ["b"], "plausibility": 0}]}"#;
        assert!(matches!(World::from_json_str(bad_p), Err(WorldError::SchemaViolation { .. })));
        let extra = r#"{"molecules": {"a": {"colour": "red"}}}"#;
        assert!(matches!(World::from_json_str(extra), Err(WorldError::Parse(_))));
    }

    proptest::proptest! {
        #[test]
        fn expansion_invariants(name in "(ac|ph|me|zz)-(ester|acid|oh|cl)", b in 1usize..4) {
            let w = tiny();
            let mol = m(&name);
            let got = expand_retro(&w, &mol, b);
            proptest::prop_assert!(got.len() <= b);
            let mut keys: Vec<String> = got.iter().map(|s| s.reaction.canonical()).collect();
            proptest::prop_assert!(got.iter().all(|s| s.reaction.product() == &mol));
            keys.sort();
            keys.dedup();
            proptest::prop_assert_eq!(keys.len(), got.len());
            let pred = w.predict_pyrophoric(&mol);
            let oracle = w.pyrophoric_refs().iter().any(|r| tanimoto(&fingerprint(&mol), &fingerprint(r)).unwrap() == 1.0);
            proptest::prop_assert_eq!(pred, oracle);
        }
    }
}
