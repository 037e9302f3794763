//! Brute force: every allocation, every stable matching.

use crate::error::{Error, Result};
use crate::matching::{da_student_optimal, is_stable, objective_value};
use crate::model::{CapacityAllocation, Instance, Matching};

pub const MAX_ALLOCATIONS: u128 = 1_000_000;

/// Number of allocations [`enumerate_allocations`] yields, saturating.
pub fn count_allocations(inst: &Instance, budget: usize) -> u128 {
    // ways[b] = allocations of the schools seen so far using exactly b seats
    let mut ways = vec![0u128; budget + 1];
    ways[0] = 1;
    for c in 0..inst.n_schools() {
        let cap = inst.max_extra(c, budget);
        let mut next = vec![0u128; budget + 1];
        for (b, &w) in ways.iter().enumerate() {
            for k in 0..=cap.min(budget - b) {
                next[b + k] = next[b + k].saturating_add(w);
            }
        }
        ways = next;
    }
    ways.iter().fold(0u128, |a, &w| a.saturating_add(w))
}

/// Allocations with `Σt ≤ budget` and `t_c ≤ b_c`, in lexicographic order.
pub fn enumerate_allocations(inst: &Instance, budget: usize) -> impl Iterator<Item = CapacityAllocation> + '_ {
    let m = inst.n_schools();
    let caps: Vec<usize> = (0..m).map(|c| inst.max_extra(c, budget)).collect();
    let mut next = Some(vec![0usize; m]);
    std::iter::from_fn(move || {
        let cur = next.take()?;
        // odometer on the last coordinate that can still grow
        let mut succ = cur.clone();
        let mut used: usize = succ.iter().sum();
        let mut i = m;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if succ[i] < caps[i] && used < budget {
                succ[i] += 1;
                next = Some(succ);
                break;
            }
            used -= succ[i];
            succ[i] = 0;
        }
        Some(CapacityAllocation::new(cur))
    })
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub matching: Matching,
    pub allocation: CapacityAllocation,
    pub objective: f64,
}

/// `min_t f(t)` by sweeping every allocation; ties go to the lexicographically smallest `t`.
pub fn solve_exhaustive(inst: &Instance, budget: usize) -> Result<OracleResult> {
    let count = count_allocations(inst, budget);
    if count > MAX_ALLOCATIONS {
        return Err(Error::TooLarge(format!("{count} allocations exceed the oracle limit {MAX_ALLOCATIONS}")));
    }
    let mut best: Option<OracleResult> = None;
    for t in enumerate_allocations(inst, budget) {
        let mu = da_student_optimal(inst, &t);
        let objective = objective_value(inst, &mu);
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(OracleResult { matching: mu, allocation: t, objective });
        }
    }
    Ok(best.expect("the zero allocation is always feasible"))
}

/// True when no student's penalty undercuts their last listed school, so
/// that extra seats never raise `f`.
pub fn penalties_rank_outside_last(inst: &Instance) -> bool {
    (0..inst.n_students()).all(|s| inst.penalty(s) >= inst.prefs(s).len() as f64)
}

/// Evaluations of `f` allowed in [`solve_pruned`].
pub const MAX_EVALUATIONS: usize = 20_000_000;

/// `min_t f(t)` by depth-first search over schools with monotone bounds.
///
/// Needs [`penalties_rank_outside_last`]: then a seat added anywhere makes
/// every student weakly better off, `f` is non-increasing, and giving each
/// undecided school all remaining seats at once bounds every completion from
/// below. The witness is the first optimum found; it uses the whole budget
/// where bounds allow.
pub fn solve_pruned(inst: &Instance, budget: usize) -> Result<(OracleResult, usize)> {
    if !penalties_rank_outside_last(inst) {
        return Err(Error::InvalidArgument(
            "pruned search needs every penalty to be at least the student's list length".into(),
        ));
    }
    let m = inst.n_schools();
    let mut start = crate::heuristics::greedy(inst, budget);
    if let Ok((l, _)) = crate::heuristics::lph(inst, budget) {
        if objective_value(inst, &l.matching) < objective_value(inst, &start.matching) {
            start = l;
        }
    }
    // branch first on the schools the heuristic fed, so strong bounds come early
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&c| std::cmp::Reverse(start.allocation.t[c]));
    let mut best = OracleResult {
        objective: objective_value(inst, &start.matching),
        matching: start.matching,
        allocation: start.allocation,
    };
    let mut search = Pruned { inst, budget, order, evaluations: 0, t: vec![0; m] };
    search.descend(0, budget, &mut best)?;
    Ok((best, search.evaluations))
}

struct Pruned<'a> {
    inst: &'a Instance,
    budget: usize,
    order: Vec<usize>,
    evaluations: usize,
    t: Vec<usize>,
}

impl Pruned<'_> {
    fn evaluate(&mut self, t: Vec<usize>) -> Result<(Matching, CapacityAllocation, f64)> {
        self.evaluations += 1;
        if self.evaluations > MAX_EVALUATIONS {
            return Err(Error::TooLarge(format!("pruned search passed {MAX_EVALUATIONS} evaluations")));
        }
        let t = CapacityAllocation::new(t);
        let mu = da_student_optimal(self.inst, &t);
        let v = objective_value(self.inst, &mu);
        Ok((mu, t, v))
    }

    fn descend(&mut self, i: usize, left: usize, best: &mut OracleResult) -> Result<()> {
        let m = self.t.len();
        let c = self.order[i];
        let cap = self.inst.max_extra(c, self.budget).min(left);
        if i + 1 == m {
            let mut t = self.t.clone();
            t[c] = cap;
            let (mu, t, v) = self.evaluate(t)?;
            if v < best.objective {
                *best = OracleResult { matching: mu, allocation: t, objective: v };
            }
            return Ok(());
        }
        for k in (0..=cap).rev() {
            self.t[c] = k;
            let mut relaxed = self.t.clone();
            for &j in &self.order[i + 1..] {
                relaxed[j] = self.inst.max_extra(j, self.budget).min(left - k);
            }
            let (mu, relaxed, bound) = self.evaluate(relaxed)?;
            if bound >= best.objective {
                continue;
            }
            if i + 2 == m {
                // one school left: the bound is that completion itself
                *best = OracleResult { matching: mu, allocation: relaxed, objective: bound };
            } else {
                self.descend(i + 1, left - k, best)?;
            }
        }
        self.t[c] = 0;
        Ok(())
    }
}

/// The sweep when it fits under [`MAX_ALLOCATIONS`], else the pruned search.
/// The flag says which one ran.
pub fn solve_exact(inst: &Instance, budget: usize) -> Result<(OracleResult, bool)> {
    if count_allocations(inst, budget) <= MAX_ALLOCATIONS {
        return Ok((solve_exhaustive(inst, budget)?, true));
    }
    Ok((solve_pruned(inst, budget)?.0, false))
}

/// Every stable matching of the market with capacities `q + t`.
pub fn stable_set_bruteforce(inst: &Instance, t: &CapacityAllocation) -> Result<Vec<Matching>> {
    let (n, m) = (inst.n_students(), inst.n_schools());
    if n > 8 || m > 3 {
        return Err(Error::TooLarge(format!("brute-force stable set needs n ≤ 8 and m ≤ 3, got {n} and {m}")));
    }
    let mut out = Vec::new();
    let mut assign = vec![None; n];
    let mut loads = vec![0usize; m];
    fill(inst, t, 0, &mut assign, &mut loads, &mut out);
    Ok(out)
}

fn fill(
    inst: &Instance,
    t: &CapacityAllocation,
    s: usize,
    assign: &mut Vec<Option<usize>>,
    loads: &mut Vec<usize>,
    out: &mut Vec<Matching>,
) {
    if s == assign.len() {
        let mu = Matching::new(assign.clone());
        if is_stable(inst, t, &mu) {
            out.push(mu);
        }
        return;
    }
    assign[s] = None;
    fill(inst, t, s + 1, assign, loads, out);
    for &c in inst.prefs(s) {
        if loads[c] < t.capacity(inst, c) {
            loads[c] += 1;
            assign[s] = Some(c);
            fill(inst, t, s + 1, assign, loads, out);
            loads[c] -= 1;
        }
    }
    assign[s] = None;
}

/// Smallest and largest matched count among allocations attaining the optimum.
pub fn cardinality_extremes(inst: &Instance, budget: usize) -> Result<(usize, usize)> {
    let best = solve_exhaustive(inst, budget)?;
    let mut lo = usize::MAX;
    let mut hi = 0;
    for t in enumerate_allocations(inst, budget) {
        let mu = da_student_optimal(inst, &t);
        if (objective_value(inst, &mu) - best.objective).abs() <= 1e-9 {
            lo = lo.min(mu.cardinality());
            hi = hi.max(mu.cardinality());
        }
    }
    Ok((lo, hi))
}

/// Largest DA cardinality over every feasible allocation.
pub fn max_da_cardinality(inst: &Instance, budget: usize) -> Result<usize> {
    let count = count_allocations(inst, budget);
    if count > MAX_ALLOCATIONS {
        return Err(Error::TooLarge(format!("{count} allocations exceed the oracle limit {MAX_ALLOCATIONS}")));
    }
    Ok(enumerate_allocations(inst, budget).map(|t| da_student_optimal(inst, &t).cardinality()).max().unwrap_or(0))
}
