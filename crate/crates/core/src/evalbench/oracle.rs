//! Exhaustive route enumeration used as a reference for the planner.
//!
//! The search is a plain assignment DFS, independent of the planner's
//! frontier: it always resolves the lexicographically smallest unsolved
//! molecule and tries every top-`branching` reaction for it.

use std::collections::{BTreeMap, BTreeSet};

use crate::chemworld::{expand_retro, Molecule, Reaction, World, DEFAULT_BRANCHING};
use crate::planner::{RestrictionSet, Route};

use super::EvalError;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub branching: usize,
    pub node_cap: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { branching: DEFAULT_BRANCHING, node_cap: DEFAULT_NODE_CAP }
    }
}

struct Search<'w> {
    world: &'w World,
    target: Molecule,
    max_depth: usize,
    limits: OracleLimits,
    nodes: usize,
    found: BTreeMap<Vec<String>, Route>,
    cache: BTreeMap<Molecule, Vec<Reaction>>,
}

impl Search<'_> {
    fn options(&mut self, m: &Molecule) -> Vec<Reaction> {
        if let Some(v) = self.cache.get(m) {
            return v.clone();
        }
        let v: Vec<Reaction> =
            expand_retro(self.world, m, self.limits.branching).into_iter().map(|s| s.reaction).collect();
        self.cache.insert(m.clone(), v.clone());
        v
    }

    /// Lower bound on the final height: unsolved molecules need at least one
    /// more reaction.
    fn height_bound(&self, produced: &BTreeMap<Molecule, Reaction>, open: &BTreeSet<Molecule>) -> usize {
        fn h(m: &Molecule, produced: &BTreeMap<Molecule, Reaction>, open: &BTreeSet<Molecule>) -> usize {
            if let Some(r) = produced.get(m) {
                1 + r.reactants().iter().map(|c| h(c, produced, open)).max().unwrap_or(0)
            } else if open.contains(m) {
                1
            } else {
                0
            }
        }
        h(&self.target, produced, open)
    }

    fn reaches(produced: &BTreeMap<Molecule, Reaction>, from: &Molecule, goal: &Molecule) -> bool {
        if from == goal {
            return true;
        }
        produced.get(from).is_some_and(|r| r.reactants().iter().any(|c| Self::reaches(produced, c, goal)))
    }

    fn dfs(
        &mut self,
        produced: &mut BTreeMap<Molecule, Reaction>,
        open: &mut BTreeSet<Molecule>,
    ) -> Result<(), EvalError> {
        let Some(m) = open.iter().next().cloned() else {
            self.record(produced);
            return Ok(());
        };
        for r in self.options(&m) {
            if r.reactants().iter().any(|c| Self::reaches(produced, c, &m)) {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.limits.node_cap {
                return Err(EvalError::BudgetExceeded(self.limits.node_cap));
            }
            open.remove(&m);
            produced.insert(m.clone(), r.clone());
            let added: Vec<Molecule> = r
                .reactants()
                .iter()
                .filter(|c| !produced.contains_key(*c) && !open.contains(*c) && !self.world.is_purchasable(c))
                .cloned()
                .collect();
            open.extend(added.iter().cloned());
            if self.height_bound(produced, open) <= self.max_depth {
                self.dfs(produced, open)?;
            }
            for a in &added {
                open.remove(a);
            }
            produced.remove(&m);
            open.insert(m.clone());
        }
        Ok(())
    }

    fn record(&mut self, produced: &BTreeMap<Molecule, Reaction>) {
        // root-first order: breadth-first from the target
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::from([self.target.clone()]);
        let mut seen = BTreeSet::new();
        while let Some(m) = queue.pop_front() {
            if !seen.insert(m.clone()) {
                continue;
            }
            if let Some(r) = produced.get(&m) {
                order.push(r.clone());
                queue.extend(r.reactants().iter().cloned());
            }
        }
        let route = Route::new(self.target.clone(), order);
        self.found.insert(route.key(), route);
    }
}

/// Every route of height at most `max_depth`, ordered by reaction key.
pub fn brute_force_routes(world: &World, product: &Molecule, max_depth: usize) -> Result<Vec<Route>, EvalError> {
    brute_force_routes_with(world, product, max_depth, OracleLimits::default())
}

pub fn brute_force_routes_with(
    world: &World,
    product: &Molecule,
    max_depth: usize,
    limits: OracleLimits,
) -> Result<Vec<Route>, EvalError> {
    if max_depth == 0 {
        return Err(EvalError::DepthTooSmall);
    }
    if world.is_purchasable(product) {
        return Ok(Vec::new());
    }
    let mut s = Search {
        world,
        target: product.clone(),
        max_depth,
        limits,
        nodes: 0,
        found: BTreeMap::new(),
        cache: BTreeMap::new(),
    };
    let mut open = BTreeSet::from([product.clone()]);
    s.dfs(&mut BTreeMap::new(), &mut open)?;
    Ok(s.found.into_values().collect())
}

/// Routes surviving a restriction set.
pub fn filter_routes<'a>(routes: &'a [Route], restrictions: &RestrictionSet) -> Vec<&'a Route> {
    routes
        .iter()
        .filter(|r| restrictions.route_violation(r.reactions.iter(), r.height().unwrap_or(usize::MAX)).is_none())
        .collect()
}
