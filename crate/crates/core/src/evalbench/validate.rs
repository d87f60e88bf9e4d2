use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chemworld::{Molecule, Reaction, World};
use crate::planner::Route;

use super::feasibility::feasibility_check;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "detail")]
pub enum InvalidReason {
    EmptyRoute,
    MissingTarget,
    DuplicateProducer(String),
    UnpurchasableLeaf(String),
    NotConsumed(String),
    Cycle(String),
    Infeasible(String),
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::EmptyRoute => write!(f, "route has no reactions"),
            InvalidReason::MissingTarget => write!(f, "no reaction produces the target"),
            InvalidReason::DuplicateProducer(m) => write!(f, "{m} is produced more than once"),
            InvalidReason::UnpurchasableLeaf(m) => write!(f, "leaf {m} is not purchasable"),
            InvalidReason::NotConsumed(m) => write!(f, "intermediate {m} is never consumed"),
            InvalidReason::Cycle(m) => write!(f, "cycle through {m}"),
            InvalidReason::Infeasible(r) => write!(f, "reaction {r} fails the feasibility check"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub reasons: Vec<InvalidReason>,
}

impl ValidityVerdict {
    pub fn is_valid(&self) -> bool {
        self.reasons.is_empty()
    }
}

/// Everything wrong with the route's shape, ignoring feasibility.
pub fn structural_problems(route: &Route, world: &World) -> Vec<InvalidReason> {
    if route.reactions.is_empty() {
        return vec![InvalidReason::EmptyRoute];
    }
    let mut out = Vec::new();
    let mut producer: BTreeMap<&Molecule, &Reaction> = BTreeMap::new();
    for r in &route.reactions {
        if producer.insert(r.product(), r).is_some() {
            let reason = InvalidReason::DuplicateProducer(r.product().to_string());
            if !out.contains(&reason) {
                out.push(reason);
            }
        }
    }
    if !producer.contains_key(&route.target) {
        out.push(InvalidReason::MissingTarget);
    }
    let consumed: BTreeSet<&Molecule> = route.reactions.iter().flat_map(|r| r.reactants()).collect();
    for m in producer.keys() {
        if **m != route.target && !consumed.contains(m) {
            out.push(InvalidReason::NotConsumed(m.to_string()));
        }
    }
    for m in &consumed {
        if !producer.contains_key(m) && !world.is_purchasable(m) {
            out.push(InvalidReason::UnpurchasableLeaf(m.to_string()));
        }
    }
    if let Some(m) = find_cycle(&producer) {
        out.push(InvalidReason::Cycle(m.to_string()));
    }
    out
}

fn find_cycle<'a>(producer: &BTreeMap<&'a Molecule, &'a Reaction>) -> Option<&'a Molecule> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        m: &'a Molecule,
        producer: &BTreeMap<&'a Molecule, &'a Reaction>,
        marks: &mut BTreeMap<&'a Molecule, Mark>,
    ) -> Option<&'a Molecule> {
        match marks.get(m) {
            Some(Mark::Active) => return Some(m),
            Some(Mark::Done) => return None,
            None => {}
        }
        let r = producer.get(m)?;
        marks.insert(m, Mark::Active);
        for c in r.reactants() {
            if let Some(hit) = visit(c, producer, marks) {
                return Some(hit);
            }
        }
        marks.insert(m, Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    producer.keys().find_map(|m| visit(m, producer, &mut marks))
}

/// Valid iff structurally sound and every reaction is feasible.
pub fn validate_route(route: &Route, world: &World) -> ValidityVerdict {
    let mut reasons = structural_problems(route, world);
    for r in &route.reactions {
        if !feasibility_check(r, world) {
            reasons.push(InvalidReason::Infeasible(r.canonical()));
        }
    }
    ValidityVerdict { reasons }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> World {
        World::from_json_str(include_str!("../../data/tiny.world.json")).unwrap()
    }

    fn route(target: &str, rs: &[&str]) -> Route {
        Route::new(Molecule::parse(target).unwrap(), rs.iter().map(|r| Reaction::parse(r).unwrap()).collect())
    }

    fn reasons(target: &str, rs: &[&str]) -> Vec<InvalidReason> {
        validate_route(&route(target, rs), &tiny()).reasons
    }

    #[test]
    fn valid_routes() {
        assert!(reasons("ac-ester", &["ac-acid.me-oh>>ac-ester"]).is_empty());
        assert!(reasons("ph-ester", &["me-oh.ph-acid>>ph-ester", "li-al.ph-cl>>ph-acid"]).is_empty());
    }

    #[test]
    fn invalid_routes() {
        assert_eq!(reasons("ac-ester", &[]), vec![InvalidReason::EmptyRoute]);
        assert_eq!(
            reasons("ph-ester", &["me-oh.ph-acid>>ph-ester"]),
            vec![InvalidReason::UnpurchasableLeaf("ph-acid".into())]
        );
        let dup = reasons("ph-ester", &["me-oh.ph-acid>>ph-ester", "li-al.ph-cl>>ph-acid", "me-oh>>ph-acid"]);
        assert!(dup.contains(&InvalidReason::DuplicateProducer("ph-acid".into())));
        assert!(reasons("ac-ester", &["me-oh>>ac-acid"]).contains(&InvalidReason::MissingTarget));
        assert!(reasons("ac-ester", &["ac-acid.me-oh>>ac-ester", "li-al>>ph-cl"])
            .contains(&InvalidReason::NotConsumed("ph-cl".into())));
        assert!(reasons("ac-ester", &["ac-acid.me-oh>>ac-ester", "ac-ester>>ac-acid"])
            .iter()
            .any(|r| matches!(r, InvalidReason::Cycle(_))));
        assert_eq!(
            reasons("ac-ester", &["li-al.me-oh>>ac-ester"]),
            vec![InvalidReason::Infeasible("li-al.me-oh>>ac-ester".into())]
        );
    }
}
