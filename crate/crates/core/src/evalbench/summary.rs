use serde::{Deserialize, Serialize};

use crate::chemworld::World;
use crate::planner::PlanResult;

use super::{build_report, check_constraints, validate_route, ReportOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub n_tasks: usize,
    pub present: usize,
    pub valid: usize,
    pub success: usize,
    pub pr: f64,
    pub vr: f64,
    pub sr: f64,
    pub p_minus_s: f64,
    pub avg_carc: Option<f64>,
    pub avg_pyro: Option<f64>,
    pub avg_ghs: Option<f64>,
    pub avg_smp: Option<f64>,
    pub avg_rl: Option<f64>,
}

fn pct(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * count as f64 / n as f64
    }
}

/// Rates from raw counts; P-S uses the counts rather than rounded rates.
pub fn summary_from_counts(n_tasks: usize, present: usize, valid: usize, success: usize) -> BenchmarkSummary {
    BenchmarkSummary {
        n_tasks,
        present,
        valid,
        success,
        pr: pct(present, n_tasks),
        vr: pct(valid, n_tasks),
        sr: pct(success, n_tasks),
        p_minus_s: pct(present.saturating_sub(success), n_tasks),
        avg_carc: None,
        avg_pyro: None,
        avg_ghs: None,
        avg_smp: None,
        avg_rl: None,
    }
}

/// PR / VR / SR over plan results, with objective averages over the valid
/// routes.
pub fn compute_summary(results: &[PlanResult], world: &World, opts: &ReportOptions) -> BenchmarkSummary {
    let (mut present, mut valid, mut success) = (0, 0, 0);
    let mut sums = [0.0f64; 5];
    for r in results {
        let Some(route) = r.route.as_ref().filter(|rt| !rt.reactions.is_empty()) else { continue };
        present += 1;
        if !validate_route(route, world).is_valid() {
            continue;
        }
        valid += 1;
        if check_constraints(route, &r.constraints, world).satisfied() {
            success += 1;
        }
        if let Ok(rep) = build_report(route, world, opts) {
            for (s, v) in sums.iter_mut().zip(rep.objectives()) {
                *s += v;
            }
        }
    }
    let mut s = summary_from_counts(results.len(), present, valid, success);
    if valid > 0 {
        let avg = sums.map(|x| Some(x / valid as f64));
        [s.avg_carc, s.avg_pyro, s.avg_ghs, s.avg_smp, s.avg_rl] = avg;
    }
    s
}
