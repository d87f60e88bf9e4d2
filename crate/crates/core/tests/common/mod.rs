#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use mmorf::agents::AgentAction;
use mmorf::chemworld::{load_world, Molecule, World};
use mmorf::evalbench::{brute_force_routes, filter_routes};
use mmorf::planner::{RestrictionDelta, RestrictionSet, Route, Task};
use mmorf::vfdsl::{BinOp, Component, Expr};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn world(name: &str) -> World {
    let path = if name == "tiny" {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/tiny.world.json")
    } else {
        fixture(&format!("{name}.world.json"))
    };
    load_world(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn tasks(name: &str) -> Vec<Task> {
    let text = std::fs::read_to_string(fixture(&format!("{name}.tasks.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Every (world, target) pair the oracle suites run over.
pub fn fixture_targets() -> Vec<(&'static str, World, Vec<Task>)> {
    let mut out = Vec::new();
    let inline = |world: &'static str, products: &[&str]| {
        let ts = products.iter().enumerate().map(|(i, p)| Task::new(&format!("{world}-{}", i + 1), p)).collect();
        (world, self::world(world), ts)
    };
    out.push(inline("tiny", &["ac-ester", "ph-acid", "bz-ester"]));
    out.push(inline("three_routes", &["pr-amide"]));
    out.push(inline("case", &["bz-amide"]));
    for lab in ["lab_a", "lab_b"] {
        out.push((lab, world(lab), tasks(lab)));
    }
    out
}

pub fn min_rl(routes: &[Route]) -> Option<usize> {
    routes.iter().map(|r| r.reactions.len()).min()
}

pub fn oracle(world: &World, product: &str, depth: usize) -> Vec<Route> {
    brute_force_routes(world, &Molecule::parse(product).unwrap(), depth).unwrap()
}

pub fn filtered_keys(routes: &[Route], restrictions: &RestrictionSet) -> BTreeSet<Vec<String>> {
    filter_routes(routes, restrictions).into_iter().map(Route::key).collect()
}

fn height(route: &Route) -> usize {
    fn h(m: &str, route: &Route) -> usize {
        match route.reactions.iter().find(|r| r.product().as_str() == m) {
            None => 0,
            Some(r) => 1 + r.reactants().iter().map(|x| h(x.as_str(), route)).max().unwrap_or(0),
        }
    }
    h(route.target.as_str(), route)
}

/// Routes allowed under `delta`, decided from first principles rather than
/// through the planner's restriction code. Patterns are `*-suffix` only.
pub fn allowed_keys(routes: &[Route], delta: &RestrictionDelta) -> BTreeSet<Vec<String>> {
    let banned_molecule = |m: &str| {
        delta.add_molecules.iter().any(|b| b == m)
            || delta.add_patterns.iter().any(|p| {
                let suffix = p.strip_prefix("*-").expect("only *-suffix patterns are generated");
                let tokens: Vec<&str> = m.split('-').collect();
                tokens.len() >= 2 && tokens.last() == Some(&suffix)
            })
    };
    let limit = delta.depth_limit.unwrap_or(-1);
    routes
        .iter()
        .filter(|r| {
            let molecules_ok = r.reactions.iter().all(|x| {
                let names = x.reactants().iter().chain(std::iter::once(x.product()));
                names.into_iter().all(|m| !banned_molecule(m.as_str()))
            });
            let reactions_ok = r.reactions.iter().all(|x| {
                let mut rs: Vec<&str> = x.reactants().iter().map(|m| m.as_str()).collect();
                rs.sort();
                let text = format!("{}>>{}", rs.join("."), x.product());
                !delta.add_reactions.contains(&text)
            });
            molecules_ok && reactions_ok && (limit < 0 || height(r) as i64 <= limit)
        })
        .map(Route::key)
        .collect()
}

/// A random restriction delta drawn from what the oracle routes actually use.
pub fn random_restrictions(rng: &mut impl Rng, routes: &[Route], target: &str) -> RestrictionDelta {
    let mut mols: Vec<String> = routes
        .iter()
        .flat_map(|r| r.molecules())
        .map(|m| m.to_string())
        .filter(|m| m != target)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    mols.sort();
    let reactions: Vec<String> = routes
        .iter()
        .flat_map(|r| r.reactions.iter().map(|x| x.canonical()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut delta = RestrictionDelta::default();
    for _ in 0..rng.random_range(0..=3) {
        if let Some(m) = mols.choose(rng) {
            delta.add_molecules.push(m.clone());
        }
    }
    for _ in 0..rng.random_range(0..=2) {
        if let Some(r) = reactions.choose(rng) {
            delta.add_reactions.push(r.clone());
        }
    }
    if rng.random_bool(0.3) {
        let suffix =
            ["ol", "one", "ine", "ide", "ate", "ane", "ene", "yne", "al", "ium", "cl", "acid"].choose(rng).unwrap();
        delta.add_patterns.push(format!("*-{suffix}"));
    }
    if rng.random_bool(0.4) {
        delta.depth_limit = Some(*[-1i64, 1, 2, 3, 4].choose(rng).unwrap());
    }
    delta.add_molecules.sort();
    delta.add_molecules.dedup();
    delta.add_reactions.sort();
    delta.add_reactions.dedup();
    delta
}

fn leaf() -> impl Strategy<Value = Expr> {
    let mol = "[a-z]{1,3}(-[a-z]{1,3}){0,2}".prop_map(|s| Molecule::parse(&s).unwrap());
    let comps = prop_oneof![
        Just(Component::Synth),
        Just(Component::Depth),
        Just(Component::BBPrice),
        Just(Component::FastCarc),
        Just(Component::Pyro),
        proptest::collection::vec("H[0-9]{3}", 1..4).prop_map(Component::Ghs),
        proptest::collection::vec(mol.clone(), 1..3).prop_map(Component::MaxSim),
        proptest::collection::vec(mol, 1..3).prop_map(Component::MinSim),
    ];
    prop_oneof![
        (-100_000i64..100_000, 0u32..5).prop_map(|(n, s)| Expr::Num(n as f64 / 10f64.powi(s as i32))),
        comps.prop_map(Expr::Call),
    ]
}

pub fn arb_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(6, 48, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)];
        (inner.clone(), op, inner).prop_map(|(l, op, r)| Expr::bin(l, op, r))
    })
}

/// Free text as an agent might write it, quotes and newlines included.
fn text() -> impl Strategy<Value = String> {
    "[ -~\n]{1,40}".prop_filter("non-blank", |s| !s.trim().is_empty())
}

fn names() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec("[a-z]{1,4}(-[a-z0-9]{1,4}){0,3}", 1..4)
}

pub fn arb_action() -> impl Strategy<Value = AgentAction> {
    use AgentAction::*;
    prop_oneof![
        text().prop_map(SetValueFunction),
        Just(Finalize),
        names().prop_map(RestrictMolecules),
        names().prop_map(RestrictSpecificReactions),
        names().prop_map(RestrictReactionTemplates),
        (-1i64..10).prop_map(DepthLimit),
        names().prop_map(UnrestrictMolecules),
        text().prop_map(UnrestrictSpecificReaction),
        text().prop_map(UnrestrictReactionTemplate),
        text().prop_map(AcceptProposed),
        text().prop_map(Reject),
        (1usize..20, text()).prop_map(|(i, s)| AcceptPrevious(i, s)),
        text().prop_map(Pruning),
        text().prop_map(ValueFn),
        (1usize..200).prop_map(ExpandDefault),
        "c[0-9]{1,3}".prop_map(Expand),
    ]
}

/// Reference Pareto front: every point no other point dominates.
pub fn pairwise_front(points: &[[f64; 5]]) -> Vec<usize> {
    let dominates =
        |a: &[f64; 5], b: &[f64; 5]| a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y);
    (0..points.len()).filter(|&i| !(0..points.len()).any(|j| dominates(&points[j], &points[i]))).collect()
}
