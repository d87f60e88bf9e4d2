use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::chemworld::{expand_retro, Molecule, Reaction, World};
use crate::evalbench::{staticreg_restrictions, RestrictionEntry};
use crate::vfdsl::{default_vf, evaluate_vf, render_vf, Expr, RouteState};

use super::route::route_height;
use super::{PlanError, RestrictionDelta, RestrictionSet, Route, SearchConfig, SelectionPolicy, System, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Init,
    Expand,
    Complete,
    DeadEnd,
    Delegate,
    Navigator,
    Regulator,
    Verifier,
    Restrict,
    ValueFunction,
    Fallback,
    Warning,
    Budget,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub iteration: usize,
    pub kind: EventKind,
    pub detail: String,
}

/// A partial route: the reactions chosen so far (root first) and the
/// molecules still waiting for a producer. Every molecule is produced at
/// most once.
#[derive(Debug, Clone)]
struct Candidate {
    reactions: Vec<usize>,
    open: Vec<Molecule>,
    produced: BTreeMap<Molecule, usize>,
    key: Vec<usize>,
    height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRef {
    pub id: String,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpansionOutcome {
    Extended(usize),
    DeadEnd,
    /// At least one child closed every leaf. `extended` counts the open
    /// children that joined the frontier alongside.
    Completed {
        routes: Vec<Route>,
        extended: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PruneSummary {
    pub pruned: usize,
    pub warnings: Vec<String>,
}

pub fn candidate_id(index: usize) -> String {
    format!("c{index}")
}

type RankKey = (Reverse<OrderedFloat<f64>>, usize);

pub struct SearchState<'w> {
    world: &'w World,
    root: Molecule,
    config: SearchConfig,
    arena: Vec<Reaction>,
    arena_ids: HashMap<Reaction, usize>,
    live: BTreeMap<usize, Candidate>,
    scores: BTreeMap<usize, f64>,
    ranking: BTreeSet<RankKey>,
    seen: HashSet<Vec<usize>>,
    vf: Expr,
    restrictions: RestrictionSet,
    iteration: usize,
    next_index: usize,
    events: Vec<Event>,
}

pub fn init_search<'w>(
    task: &Task,
    world: &'w World,
    config: &SearchConfig,
    restriction_db: Option<&[RestrictionEntry]>,
) -> Result<SearchState<'w>, PlanError> {
    let root = task.product_molecule().map_err(|e| PlanError::InvalidProduct(format!("{}: {e}", task.product)))?;
    if world.is_purchasable(&root) {
        return Err(PlanError::PurchasableTarget(root.to_string()));
    }
    let mut state = SearchState {
        world,
        root: root.clone(),
        config: config.clone(),
        arena: Vec::new(),
        arena_ids: HashMap::new(),
        live: BTreeMap::new(),
        scores: BTreeMap::new(),
        ranking: BTreeSet::new(),
        seen: HashSet::new(),
        vf: default_vf(),
        restrictions: RestrictionSet::default(),
        iteration: 0,
        next_index: 0,
        events: Vec::new(),
    };
    if config.system == System::Staticreg {
        match restriction_db {
            Some(db) => {
                state.restrictions =
                    staticreg_restrictions(db, &root).map_err(|e| PlanError::InvalidConfig(e.to_string()))?;
                let detail = format!("static restrictions {}", state.restrictions.to_json());
                state.log(EventKind::Restrict, detail);
            }
            None => state.log(EventKind::Warning, "staticreg without a restriction database".into()),
        }
    }
    let start = Candidate {
        reactions: Vec::new(),
        open: vec![root.clone()],
        produced: BTreeMap::new(),
        key: Vec::new(),
        height: 0,
    };
    state.seen.insert(Vec::new());
    state.insert(start);
    state.log(EventKind::Init, format!("target {root}, value function {}", render_vf(&state.vf)));
    Ok(state)
}

impl<'w> SearchState<'w> {
    pub fn world(&self) -> &'w World {
        self.world
    }

    pub fn root(&self) -> &Molecule {
        &self.root
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub(crate) fn advance_iteration(&mut self) {
        self.iteration += 1;
    }

    pub fn value_function(&self) -> &Expr {
        &self.vf
    }

    pub fn restrictions(&self) -> &RestrictionSet {
        &self.restrictions
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub(crate) fn take_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    pub fn frontier_len(&self) -> usize {
        self.live.len()
    }

    pub fn log(&mut self, kind: EventKind, detail: String) {
        self.events.push(Event { iteration: self.iteration, kind, detail });
    }

    fn reactions_of(&self, c: &Candidate) -> Vec<Reaction> {
        c.reactions.iter().map(|&i| self.arena[i].clone()).collect()
    }

    fn route_state_of(&self, c: &Candidate) -> RouteState {
        RouteState { reactions: self.reactions_of(c), frontier: c.open.clone() }
    }

    fn score(world: &World, vf: &Expr, state: &RouteState) -> f64 {
        match evaluate_vf(vf, state, world) {
            Ok(v) if !v.is_nan() => v,
            _ => f64::NEG_INFINITY,
        }
    }

    fn insert(&mut self, c: Candidate) -> usize {
        let value = Self::score(self.world, &self.vf, &self.route_state_of(&c));
        if value == f64::NEG_INFINITY {
            self.log(
                EventKind::Warning,
                format!("{} scored -inf under the current value function", candidate_id(self.next_index)),
            );
        }
        let index = self.next_index;
        self.next_index += 1;
        self.scores.insert(index, value);
        self.ranking.insert((Reverse(OrderedFloat(value)), index));
        self.live.insert(index, c);
        index
    }

    fn remove(&mut self, index: usize) -> Option<Candidate> {
        let c = self.live.remove(&index)?;
        if let Some(v) = self.scores.remove(&index) {
            self.ranking.remove(&(Reverse(OrderedFloat(v)), index));
        }
        Some(c)
    }

    fn intern(&mut self, r: Reaction) -> usize {
        if let Some(&i) = self.arena_ids.get(&r) {
            return i;
        }
        let i = self.arena.len();
        self.arena_ids.insert(r.clone(), i);
        self.arena.push(r);
        i
    }

    /// The `k` best live candidates under the current value function, ties
    /// going to the older candidate.
    pub fn simulate(&self, k: usize) -> Result<Vec<CandidateRef>, PlanError> {
        if self.ranking.is_empty() {
            return Err(PlanError::FrontierEmpty);
        }
        Ok(self
            .ranking
            .iter()
            .take(k.max(1))
            .map(|(Reverse(v), index)| CandidateRef { id: candidate_id(*index), index: *index, value: v.0 })
            .collect())
    }

    pub fn select(
        &mut self,
        candidates: &[CandidateRef],
        policy: SelectionPolicy,
        choice: Option<&str>,
    ) -> CandidateRef {
        let argmax = candidates[0].clone();
        match (policy, choice) {
            (_, None) | (SelectionPolicy::Value, _) => {
                if let Some(id) = choice {
                    self.log(
                        EventKind::Fallback,
                        format!("Expand({id}) ignored under the value policy; expanding {}", argmax.id),
                    );
                }
                argmax
            }
            (SelectionPolicy::Agentic, Some(id)) => {
                let wanted = id.trim();
                let hit = candidates.iter().find(|c| c.id == wanted || c.index.to_string() == wanted).cloned();
                match hit {
                    Some(c) => c,
                    None => {
                        self.log(EventKind::Fallback, format!("unknown candidate {wanted:?}; expanding {}", argmax.id));
                        argmax
                    }
                }
            }
        }
    }

    pub fn route_state(&self, index: usize) -> Option<RouteState> {
        self.live.get(&index).map(|c| self.route_state_of(c))
    }

    pub fn candidate_height(&self, index: usize) -> Option<usize> {
        self.live.get(&index).map(|c| c.height)
    }

    /// Route for a candidate whose leaves are all purchasable.
    pub fn extract_route(&self, index: usize) -> Result<Route, PlanError> {
        let c = self.live.get(&index).ok_or(PlanError::UnknownCandidate(candidate_id(index)))?;
        if !c.open.is_empty() {
            return Err(PlanError::IncompleteAssignment(c.open.iter().map(|m| m.to_string()).collect()));
        }
        Ok(Route::new(self.root.clone(), self.reactions_of(c)))
    }

    /// True if adding `m <- reactants` would close a cycle: some reactant is
    /// `m` itself or already (transitively) produces `m`.
    fn creates_cycle(&self, c: &Candidate, m: &Molecule, reaction: &Reaction) -> bool {
        let mut stack: Vec<&Molecule> = reaction.reactants().iter().collect();
        let mut visited: BTreeSet<&Molecule> = BTreeSet::new();
        while let Some(x) = stack.pop() {
            if x == m {
                return true;
            }
            if !visited.insert(x) {
                continue;
            }
            if let Some(&ri) = c.produced.get(x) {
                stack.extend(self.arena[ri].reactants().iter());
            }
        }
        false
    }

    /// Expands the hardest open molecule (largest synth cost, leftmost on
    /// ties) of the selected candidate.
    pub fn expand(&mut self, chosen: &CandidateRef) -> ExpansionOutcome {
        let Some(cand) = self.remove(chosen.index) else {
            self.log(EventKind::Warning, format!("{} is no longer on the frontier", chosen.id));
            return ExpansionOutcome::DeadEnd;
        };
        let mut target: Option<(&Molecule, f64)> = None;
        for m in &cand.open {
            let cost = self.world.synth_cost(m);
            if target.is_none_or(|(_, best)| cost > best) {
                target = Some((m, cost));
            }
        }
        let Some((m, _)) = target else {
            return ExpansionOutcome::DeadEnd;
        };
        let m = m.clone();
        let children = expand_retro(self.world, &m, self.config.branching);
        let mut completed = Vec::new();
        let mut extended = 0;
        let mut filtered = 0;
        for sr in children {
            let r = sr.reaction;
            if self.restrictions.reaction_violation(&r).is_some() {
                filtered += 1;
                continue;
            }
            if self.creates_cycle(&cand, &m, &r) {
                continue;
            }
            let ri = self.intern(r.clone());
            let mut child = cand.clone();
            child.reactions.push(ri);
            child.produced.insert(m.clone(), ri);
            let pos = child.open.iter().position(|x| x == &m).expect("expanded molecule is open");
            child.open.remove(pos);
            for reactant in r.reactants() {
                let known = child.produced.contains_key(reactant) || child.open.contains(reactant);
                if !known && !self.world.is_purchasable(reactant) {
                    child.open.push(reactant.clone());
                }
            }
            let reactions = self.reactions_of(&child);
            let Some(height) = route_height(&self.root, &reactions) else {
                continue;
            };
            if !self.restrictions.height_allowed(height) {
                filtered += 1;
                continue;
            }
            child.height = height;
            child.key = child.reactions.clone();
            child.key.sort_unstable();
            if !self.seen.insert(child.key.clone()) {
                continue;
            }
            if child.open.is_empty() {
                completed.push(Route::new(self.root.clone(), reactions));
            } else {
                self.insert(child);
                extended += 1;
            }
        }
        let detail =
            format!("{} at {m}: {extended} open, {} complete, {filtered} restricted", chosen.id, completed.len());
        if !completed.is_empty() {
            self.log(EventKind::Complete, detail);
            ExpansionOutcome::Completed { routes: completed, extended }
        } else if extended > 0 {
            self.log(EventKind::Expand, detail);
            ExpansionOutcome::Extended(extended)
        } else {
            self.log(EventKind::DeadEnd, detail);
            ExpansionOutcome::DeadEnd
        }
    }

    /// Updates the restriction set and drops every live candidate that now
    /// violates it. Dropped candidates may be derived again later.
    pub fn apply_restrictions(&mut self, delta: &RestrictionDelta) -> PruneSummary {
        let warnings = self.restrictions.apply_delta(delta);
        for w in &warnings {
            self.log(EventKind::Warning, w.clone());
        }
        let doomed: Vec<usize> = self
            .live
            .iter()
            .filter(|(_, c)| {
                let reactions = c.reactions.iter().map(|&i| &self.arena[i]);
                self.restrictions.route_violation(reactions, c.height).is_some()
            })
            .map(|(&i, _)| i)
            .collect();
        for i in &doomed {
            if let Some(c) = self.remove(*i) {
                self.seen.remove(&c.key);
            }
        }
        let detail = format!("restrictions now {}; pruned {}", self.restrictions.to_json(), doomed.len());
        self.log(EventKind::Restrict, detail);
        PruneSummary { pruned: doomed.len(), warnings }
    }

    /// Replaces the value function and rescores the whole frontier.
    pub fn set_value_function(&mut self, vf: Expr) {
        self.vf = vf;
        let indices: Vec<usize> = self.live.keys().copied().collect();
        let states: Vec<RouteState> = indices.iter().map(|i| self.route_state_of(&self.live[i])).collect();
        let (world, vf) = (self.world, &self.vf);
        let values = self.config.execution.map(&states, |s| Self::score(world, vf, s));
        self.scores.clear();
        self.ranking.clear();
        let mut neg_inf = 0;
        for (i, v) in indices.into_iter().zip(values) {
            if v == f64::NEG_INFINITY {
                neg_inf += 1;
            }
            self.scores.insert(i, v);
            self.ranking.insert((Reverse(OrderedFloat(v)), i));
        }
        self.log(EventKind::ValueFunction, format!("value function set to {}", render_vf(&self.vf)));
        if neg_inf > 0 {
            self.log(EventKind::Warning, format!("{neg_inf} candidates scored -inf under the new value function"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vfdsl::parse_vf;

    fn tiny() -> World {
        World::from_json_str(include_str!("../../data/tiny.world.json")).unwrap()
    }

    #[test]
    fn init_and_purchasable_target() {
        let w = tiny();
        let s = init_search(&Task::new("t", "ac-ester"), &w, &SearchConfig::default(), None).unwrap();
        assert_eq!(s.iteration(), 0);
        assert_eq!(render_vf(s.value_function()), "Synth()");
        assert!(matches!(
            init_search(&Task::new("t", "me-oh"), &w, &SearchConfig::default(), None),
            Err(PlanError::PurchasableTarget(_))
        ));
    }

    #[test]
    fn one_step_completion() {
        let w = tiny();
        let mut s = init_search(&Task::new("t", "ac-ester"), &w, &SearchConfig::default(), None).unwrap();
        let c = s.simulate(5).unwrap();
        assert_eq!(c.len(), 1);
        match s.expand(&c[0]) {
            ExpansionOutcome::Completed { routes, extended } => {
                assert_eq!(extended, 0);
                assert_eq!(routes.len(), 1);
                assert_eq!(routes[0].reactions.len(), 1);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(s.simulate(5), Err(PlanError::FrontierEmpty)));
    }

    #[test]
    fn two_level_route_root_first() {
        let w = tiny();
        let mut s = init_search(&Task::new("t", "ph-ester"), &w, &SearchConfig::default(), None).unwrap();
        let c = s.simulate(1).unwrap();
        assert_eq!(s.expand(&c[0]), ExpansionOutcome::Extended(1));
        let c = s.simulate(1).unwrap();
        assert!(matches!(s.extract_route(c[0].index), Err(PlanError::IncompleteAssignment(_))));
        let ExpansionOutcome::Completed { routes, .. } = s.expand(&c[0]) else { panic!() };
        let names: Vec<String> = routes[0].reactions.iter().map(|r| r.canonical()).collect();
        assert_eq!(names, vec!["me-oh.ph-acid>>ph-ester", "li-al.ph-cl>>ph-acid"]);
    }

    #[test]
    fn restricted_children_dead_end() {
        let w = tiny();
        let mut s = init_search(&Task::new("t", "ac-ester"), &w, &SearchConfig::default(), None).unwrap();
        let summary = s.apply_restrictions(&RestrictionDelta::restrict_molecules(&["me-oh"]));
        assert_eq!(summary.pruned, 0);
        let c = s.simulate(5).unwrap();
        assert_eq!(s.expand(&c[0]), ExpansionOutcome::DeadEnd);
    }

    #[test]
    fn depth_limit_prunes_children() {
        let w = tiny();
        let mut s = init_search(&Task::new("t", "ph-ester"), &w, &SearchConfig::default(), None).unwrap();
        let c = s.simulate(1).unwrap();
        s.expand(&c[0]);
        s.apply_restrictions(&RestrictionDelta { depth_limit: Some(1), ..Default::default() });
        let c = s.simulate(1).unwrap();
        assert_eq!(s.expand(&c[0]), ExpansionOutcome::DeadEnd);
    }

    #[test]
    fn pruning_and_clearing_depth() {
        let w = tiny();
        let mut s = init_search(&Task::new("t", "ph-ester"), &w, &SearchConfig::default(), None).unwrap();
        let c = s.simulate(1).unwrap();
        s.expand(&c[0]);
        assert_eq!(s.apply_restrictions(&RestrictionDelta::restrict_molecules(&["zz"])).pruned, 0);
        assert_eq!(s.apply_restrictions(&RestrictionDelta { depth_limit: Some(2), ..Default::default() }).pruned, 0);
        assert_eq!(s.apply_restrictions(&RestrictionDelta { depth_limit: Some(-1), ..Default::default() }).pruned, 0);
        assert_eq!(s.restrictions().depth_limit(), -1);
        assert_eq!(s.apply_restrictions(&RestrictionDelta::restrict_molecules(&["me-oh"])).pruned, 1);
        assert!(matches!(s.simulate(1), Err(PlanError::FrontierEmpty)));
    }

    #[test]
    fn selection_policies() {
        let w = tiny();
        let mut s = init_search(&Task::new("t", "ac-ester"), &w, &SearchConfig::default(), None).unwrap();
        let c = vec![
            CandidateRef { id: "c1".into(), index: 1, value: -1.0 },
            CandidateRef { id: "c3".into(), index: 3, value: -3.0 },
        ];
        assert_eq!(s.select(&c, SelectionPolicy::Value, None).id, "c1");
        assert_eq!(s.select(&c, SelectionPolicy::Agentic, Some("c3")).id, "c3");
        let before = s.events().len();
        assert_eq!(s.select(&c, SelectionPolicy::Agentic, Some("c99")).id, "c1");
        assert_eq!(s.events()[before].kind, EventKind::Fallback);
    }

    #[test]
    fn rescoring_orders_frontier() {
        let w = World::from_json_str(include_str!("../../tests/fixtures/three_routes.world.json")).unwrap();
        let mut s = init_search(&Task::new("t", "pr-amide"), &w, &SearchConfig::default(), None).unwrap();
        let c = s.simulate(5).unwrap();
        s.expand(&c[0]);
        s.set_value_function(parse_vf("Depth()").unwrap());
        let ranked = s.simulate(10).unwrap();
        for pair in ranked.windows(2) {
            assert!(pair[0].value > pair[1].value || (pair[0].value == pair[1].value && pair[0].index < pair[1].index));
        }
    }
}
