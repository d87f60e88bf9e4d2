use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chemworld::{annotate, Molecule, Reaction, World};
use crate::planner::Route;

use super::validate::structural_problems;
use super::EvalError;

/// Agent-visible view of one molecule: predicted flags only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeReport {
    pub carc_score: f64,
    pub carc_alert: bool,
    pub pyrophoric: bool,
    pub ghs: Vec<String>,
    pub purchasable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub target: String,
    pub reactions: Vec<String>,
    pub carc: f64,
    pub carc_alert: bool,
    pub pyro: u8,
    pub ghs_count: usize,
    pub ghs_codes: BTreeSet<String>,
    pub smp: f64,
    pub rl: usize,
    pub molecules: BTreeMap<String, MoleculeReport>,
}

impl RouteReport {
    /// `(carc, pyro, ghs_count, smp, rl)`, all minimized.
    pub fn objectives(&self) -> [f64; 5] {
        [self.carc, self.pyro as f64, self.ghs_count as f64, self.smp, self.rl as f64]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Price a starting material once per consuming reaction instead of
    /// once per route.
    pub smp_per_occurrence: bool,
}

/// Metrics over any reaction set, complete or not. SMP covers purchasable
/// reactants that no reaction in the set produces.
pub fn summarize(world: &World, target: &Molecule, reactions: &[Reaction], opts: &ReportOptions) -> RouteReport {
    let produced: BTreeSet<&Molecule> = reactions.iter().map(Reaction::product).collect();
    let mut all: BTreeSet<&Molecule> = BTreeSet::new();
    all.insert(target);
    for r in reactions {
        all.extend(r.molecules());
    }
    let mut molecules = BTreeMap::new();
    let mut ghs_codes = BTreeSet::new();
    let (mut carc, mut carc_alert, mut pyro) = (0.0f64, false, false);
    for m in &all {
        let p = annotate(world, m);
        carc = carc.max(p.carc_score);
        carc_alert |= p.carc_alert;
        pyro |= p.predicted_pyrophoric;
        ghs_codes.extend(p.ghs_codes.iter().cloned());
        molecules.insert(
            m.to_string(),
            MoleculeReport {
                carc_score: p.carc_score,
                carc_alert: p.carc_alert,
                pyrophoric: p.predicted_pyrophoric,
                ghs: p.ghs_codes.into_iter().collect(),
                purchasable: p.purchasable,
                price: p.price,
            },
        );
    }
    let leaf_price = |m: &Molecule| if produced.contains(m) { None } else { world.price(m) };
    let smp = if opts.smp_per_occurrence {
        reactions.iter().flat_map(|r| r.reactants()).filter_map(leaf_price).sum()
    } else {
        let leaves: BTreeSet<&Molecule> = reactions.iter().flat_map(|r| r.reactants()).collect();
        leaves.into_iter().filter_map(leaf_price).sum()
    };
    RouteReport {
        target: target.to_string(),
        reactions: reactions.iter().map(Reaction::canonical).collect(),
        carc,
        carc_alert,
        pyro: pyro as u8,
        ghs_count: ghs_codes.len(),
        ghs_codes,
        smp,
        rl: reactions.len(),
        molecules,
    }
}

/// Report for a structurally sound complete route. Feasibility is judged
/// separately by [`super::validate_route`].
pub fn build_report(route: &Route, world: &World, opts: &ReportOptions) -> Result<RouteReport, EvalError> {
    let problems = structural_problems(route, world);
    if !problems.is_empty() {
        return Err(EvalError::InvalidRoute(problems));
    }
    Ok(summarize(world, &route.target, &route.reactions, opts))
}
