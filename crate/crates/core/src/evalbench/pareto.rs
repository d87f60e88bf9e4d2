use std::cmp::Ordering;

use super::RouteReport;

pub type Objectives = [f64; 5];

/// `a` is no worse everywhere and strictly better somewhere (minimizing).
pub fn dominates_objectives(a: &Objectives, b: &Objectives) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

pub fn dominates(a: &RouteReport, b: &RouteReport) -> bool {
    dominates_objectives(&a.objectives(), &b.objectives())
}

fn lex(a: &Objectives, b: &Objectives) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Indices (ascending) of the non-dominated entries; duplicates survive
/// together.
///
/// Sorting lexicographically means every dominator of an entry comes before
/// it, and by transitivity some dominator is itself on the front, so each
/// entry only needs checking against the front built so far.
pub fn pareto_front(points: &[Objectives]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| lex(&points[i], &points[j]).then(i.cmp(&j)));
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        if !front.iter().any(|&f| dominates_objectives(&points[f], &points[i])) {
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

pub fn pareto_front_reports(reports: &[RouteReport]) -> Vec<usize> {
    let points: Vec<Objectives> = reports.iter().map(RouteReport::objectives).collect();
    pareto_front(&points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_cases() {
        let a = [0.3, 0.0, 1.0, 15.0, 1.0];
        assert!(!dominates_objectives(&a, &a));
        assert!(dominates_objectives(&a, &[0.3, 0.0, 2.0, 15.0, 1.0]));
        let c = [0.2, 0.0, 3.0, 15.0, 1.0];
        assert!(!dominates_objectives(&c, &a) && !dominates_objectives(&a, &c));
    }

    #[test]
    fn fronts() {
        assert_eq!(pareto_front(&[[1.0; 5]]), vec![0]);
        assert_eq!(pareto_front(&[[3.0; 5], [2.0; 5], [1.0; 5]]), vec![2]);
        assert_eq!(pareto_front(&[[1.0; 5], [1.0; 5]]), vec![0, 1]);
        assert!(pareto_front(&[]).is_empty());
    }
}
