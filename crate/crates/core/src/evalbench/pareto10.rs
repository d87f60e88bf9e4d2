use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chemworld::World;
use crate::planner::{init_search, ExpansionOutcome, Route, SearchConfig, Task};

use super::{build_report, pareto_front_reports, ReportOptions, RouteReport};

const ROUTE_TARGET: usize = 10;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pareto10Result {
    pub routes: Vec<Route>,
    pub reports: Vec<RouteReport>,
    /// Indices into `routes` of the non-dominated reports.
    pub front: Vec<usize>,
    /// Componentwise mean of the front's objectives.
    pub averages: Option<[f64; 5]>,
}

/// Collects the first ten distinct routes the single-objective planner
/// completes, then keeps their Pareto front.
pub fn pareto10(task: &Task, world: &World, config: &SearchConfig, opts: &ReportOptions) -> Pareto10Result {
    let mut out = Pareto10Result::default();
    let Ok(mut state) = init_search(task, world, config, None) else {
        return out;
    };
    let mut keys = BTreeSet::new();
    while state.iteration() < config.i_max && out.routes.len() < ROUTE_TARGET {
        let Ok(top) = state.simulate(1) else { break };
        let outcome = state.expand(&top[0]);
        state.advance_iteration();
        if let ExpansionOutcome::Completed { routes, .. } = outcome {
            for route in routes {
                if out.routes.len() == ROUTE_TARGET || !keys.insert(route.key()) {
                    continue;
                }
                if let Ok(rep) = build_report(&route, world, opts) {
                    out.routes.push(route);
                    out.reports.push(rep);
                }
            }
        }
    }
    out.front = pareto_front_reports(&out.reports);
    if !out.front.is_empty() {
        let n = out.front.len() as f64;
        let mut sums = [0.0; 5];
        for &i in &out.front {
            for (s, v) in sums.iter_mut().zip(out.reports[i].objectives()) {
                *s += v;
            }
        }
        out.averages = Some(sums.map(|s| s / n));
    }
    out
}
