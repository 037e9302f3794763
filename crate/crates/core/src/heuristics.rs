//! Greedy seat-by-seat allocation and the LP-relaxation heuristic.

use crate::error::Result;
use crate::flow::solve_relaxed;
use crate::matching::{da_student_optimal, f_of_t};
use crate::model::{CapacityAllocation, Instance, Matching};

#[derive(Debug, Clone)]
pub struct HeuristicResult {
    pub matching: Matching,
    pub allocation: CapacityAllocation,
    /// `f(t)` after each committed seat, starting with `f(0)`.
    pub trajectory: Vec<f64>,
}

/// Adds seats one at a time to the school with the lowest resulting `f`.
///
/// Ties go to the lowest school id. Stops early once no single seat strictly lowers `f`.
pub fn greedy(inst: &Instance, budget: usize) -> HeuristicResult {
    let m = inst.n_schools();
    let mut t = CapacityAllocation::zero(m);
    let mut current = f_of_t(inst, &t);
    let mut trajectory = vec![current];
    for _ in 0..budget {
        let mut best: Option<(f64, usize)> = None;
        for c in 0..m {
            if t.t[c] >= inst.max_extra(c, budget) {
                continue;
            }
            let v = f_of_t(inst, &t.plus_one(c));
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, c));
            }
        }
        match best {
            Some((v, c)) if v < current => {
                t = t.plus_one(c);
                current = v;
                trajectory.push(v);
            }
            _ => break,
        }
    }
    HeuristicResult { matching: da_student_optimal(inst, &t), allocation: t, trajectory }
}

/// Allocation from the stability-free min-cost assignment, then DA.
pub fn lph(inst: &Instance, budget: usize) -> Result<(HeuristicResult, f64)> {
    let relaxed = solve_relaxed(inst, budget)?;
    let t = relaxed.t;
    let matching = da_student_optimal(inst, &t);
    let f = f_of_t(inst, &t);
    Ok((HeuristicResult { matching, allocation: t, trajectory: vec![f] }, relaxed.objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matching::{is_stable, objective_value};

    #[test]
    fn zero_budget_is_plain_da() {
        let inst = fixtures::linearization_gap();
        let zero = CapacityAllocation::zero(4);
        let g = greedy(&inst, 0);
        let (l, _) = lph(&inst, 0).unwrap();
        assert_eq!(g.matching, da_student_optimal(&inst, &zero));
        assert_eq!(l.matching, da_student_optimal(&inst, &zero));
    }

    #[test]
    fn one_seat_greedy_finds_five() {
        let inst = fixtures::one_seat();
        let g = greedy(&inst, 1);
        assert_eq!(objective_value(&inst, &g.matching), 5.0);
        assert_eq!(g.allocation.t, vec![1, 0, 0]);
        assert!(is_stable(&inst, &g.allocation, &g.matching));
    }

    #[test]
    fn lph_bound_is_below_its_value() {
        let inst = fixtures::one_seat();
        let (l, bound) = lph(&inst, 1).unwrap();
        assert!(bound <= objective_value(&inst, &l.matching));
        assert!(l.allocation.total() <= 1);
    }
}
