use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chemworld::{Molecule, Reaction};

/// A synthesis route: reactions listed root first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub target: Molecule,
    pub reactions: Vec<Reaction>,
}

impl Route {
    pub fn new(target: Molecule, reactions: Vec<Reaction>) -> Self {
        Route { target, reactions }
    }

    /// Order-independent identity: sorted canonical reaction strings.
    pub fn key(&self) -> Vec<String> {
        let mut k: Vec<String> = self.reactions.iter().map(Reaction::canonical).collect();
        k.sort();
        k
    }

    pub fn molecules(&self) -> BTreeSet<Molecule> {
        let mut out: BTreeSet<Molecule> = self.reactions.iter().flat_map(|r| r.molecules().cloned()).collect();
        out.insert(self.target.clone());
        out
    }

    pub fn contains(&self, molecule: &Molecule) -> bool {
        self.reactions.iter().any(|r| r.molecules().any(|m| m == molecule))
    }

    /// Reactants never produced within the route, deduplicated.
    pub fn starting_materials(&self) -> BTreeSet<Molecule> {
        let produced: BTreeSet<&Molecule> = self.reactions.iter().map(Reaction::product).collect();
        self.reactions.iter().flat_map(|r| r.reactants().iter()).filter(|m| !produced.contains(m)).cloned().collect()
    }

    /// Longest reaction chain below the target; `None` on a cycle.
    pub fn height(&self) -> Option<usize> {
        route_height(&self.target, &self.reactions)
    }
}

/// Longest chain of reactions from `target` to a leaf, following the first
/// producer of each molecule. Returns `None` if that walk meets a cycle.
pub fn route_height(target: &Molecule, reactions: &[Reaction]) -> Option<usize> {
    let mut producer: BTreeMap<&Molecule, &Reaction> = BTreeMap::new();
    for r in reactions {
        producer.entry(r.product()).or_insert(r);
    }
    let mut memo: BTreeMap<&Molecule, usize> = BTreeMap::new();
    let mut on_path: BTreeSet<&Molecule> = BTreeSet::new();
    fn walk<'a>(
        m: &'a Molecule,
        producer: &BTreeMap<&'a Molecule, &'a Reaction>,
        memo: &mut BTreeMap<&'a Molecule, usize>,
        on_path: &mut BTreeSet<&'a Molecule>,
    ) -> Option<usize> {
        if let Some(&h) = memo.get(m) {
            return Some(h);
        }
        let Some(r) = producer.get(m) else {
            return Some(0);
        };
        if !on_path.insert(m) {
            return None;
        }
        let mut best = 0;
        for c in r.reactants() {
            best = best.max(walk(c, producer, memo, on_path)?);
        }
        on_path.remove(m);
        memo.insert(m, best + 1);
        Some(best + 1)
    }
    walk(target, &producer, &mut memo, &mut on_path)
}
