//! Deferred acceptance, stability checks and the value function `f(t)`.

use std::collections::BinaryHeap;
use std::fmt;

use crate::model::{CapacityAllocation, FractionalAssignment, Instance, Matching};

/// Mass below this is treated as zero when reading fractional assignments.
pub const MASS_TOL: f64 = 1e-7;

/// One step of a deferred-acceptance run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DaEvent {
    Propose { round: usize, student: usize, school: usize },
    Accept { round: usize, student: usize, school: usize },
    Reject { round: usize, student: usize, school: usize },
    Exhausted { round: usize, student: usize },
}

impl fmt::Display for DaEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DaEvent::Propose { round, student, school } => write!(f, "{round} propose s{student} c{school}"),
            DaEvent::Accept { round, student, school } => write!(f, "{round} accept s{student} c{school}"),
            DaEvent::Reject { round, student, school } => write!(f, "{round} reject s{student} c{school}"),
            DaEvent::Exhausted { round, student } => write!(f, "{round} exhausted s{student}"),
        }
    }
}

/// Output of an instrumented run.
#[derive(Debug, Clone)]
pub struct DaRun {
    pub matching: Matching,
    pub proposals: usize,
    pub events: Vec<DaEvent>,
}

impl DaRun {
    /// Line-oriented trace, one event per line.
    pub fn trace(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

/// Student-optimal stable matching of the market with capacities `q + t`.
pub fn da_student_optimal(inst: &Instance, t: &CapacityAllocation) -> Matching {
    run_student_proposing(inst, t, false).matching
}

/// Like [`da_student_optimal`] but records every proposal and decision.
pub fn da_student_optimal_traced(inst: &Instance, t: &CapacityAllocation) -> DaRun {
    run_student_proposing(inst, t, true)
}

fn run_student_proposing(inst: &Instance, t: &CapacityAllocation, record: bool) -> DaRun {
    let n = inst.n_students();
    let m = inst.n_schools();
    let mut next = vec![0usize; n];
    let mut assign: Vec<Option<usize>> = vec![None; n];
    // max-heap on priority rank: the top is the worst admitted student
    let mut held: Vec<BinaryHeap<(usize, usize)>> = (0..m).map(|_| BinaryHeap::new()).collect();
    let mut events = Vec::new();
    let mut proposals = 0;

    let mut free: Vec<usize> = (0..n).collect();
    let mut round = 0;
    while !free.is_empty() {
        round += 1;
        let mut rejected = Vec::new();
        for &s in &free {
            let list = inst.prefs(s);
            if next[s] >= list.len() {
                if record {
                    events.push(DaEvent::Exhausted { round, student: s });
                }
                continue;
            }
            let c = list[next[s]];
            next[s] += 1;
            proposals += 1;
            if record {
                events.push(DaEvent::Propose { round, student: s, school: c });
            }
            let cap = t.capacity(inst, c);
            let key = inst.priority_rank(c, s).expect("applicant is ranked");
            if cap == 0 {
                if record {
                    events.push(DaEvent::Reject { round, student: s, school: c });
                }
                rejected.push(s);
                continue;
            }
            held[c].push((key, s));
            assign[s] = Some(c);
            if held[c].len() > cap {
                let (_, out) = held[c].pop().expect("non-empty");
                assign[out] = None;
                rejected.push(out);
                if record {
                    if out != s {
                        events.push(DaEvent::Accept { round, student: s, school: c });
                    }
                    events.push(DaEvent::Reject { round, student: out, school: c });
                }
            } else if record {
                events.push(DaEvent::Accept { round, student: s, school: c });
            }
        }
        rejected.sort_unstable();
        free = rejected;
    }

    DaRun { matching: Matching::new(assign), proposals, events }
}

/// School-optimal stable matching of the market with capacities `q + t`.
pub fn da_school_optimal(inst: &Instance, t: &CapacityAllocation) -> Matching {
    let n = inst.n_students();
    let m = inst.n_schools();
    let mut next = vec![0usize; m];
    let mut load = vec![0usize; m];
    let mut assign: Vec<Option<usize>> = vec![None; n];

    loop {
        let mut changed = false;
        for c in 0..m {
            let cap = t.capacity(inst, c);
            let list = inst.applicants(c);
            while load[c] < cap && next[c] < list.len() {
                let s = list[next[c]];
                next[c] += 1;
                changed = true;
                if inst.student_prefers(s, Some(c), assign[s]) {
                    if let Some(old) = assign[s] {
                        load[old] -= 1;
                    }
                    assign[s] = Some(c);
                    load[c] += 1;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Matching::new(assign)
}

/// Sum of ranks of assigned students plus penalties of unassigned ones.
pub fn objective_value(inst: &Instance, mu: &Matching) -> f64 {
    mu.assign.iter().enumerate().map(|(s, &a)| inst.cost(s, a)).sum()
}

/// Best objective among stable matchings of the market with capacities `q + t`.
pub fn f_of_t(inst: &Instance, t: &CapacityAllocation) -> f64 {
    objective_value(inst, &da_student_optimal(inst, t))
}

/// All blocking pairs of `mu` under capacities `q + t`.
pub fn blocking_pairs(inst: &Instance, t: &CapacityAllocation, mu: &Matching) -> Vec<(usize, usize)> {
    let m = inst.n_schools();
    let mut load = vec![0usize; m];
    let mut worst: Vec<usize> = vec![0; m];
    for (s, a) in mu.assign.iter().enumerate() {
        if let Some(c) = *a {
            load[c] += 1;
            let r = inst.priority_rank(c, s).unwrap_or(usize::MAX);
            worst[c] = worst[c].max(r);
        }
    }
    let mut out = Vec::new();
    for s in 0..inst.n_students() {
        for &c in inst.prefs(s) {
            if Some(c) == mu.assign[s] {
                break;
            }
            let r = inst.priority_rank(c, s).expect("applicant is ranked");
            if load[c] < t.capacity(inst, c) || r < worst[c] {
                out.push((s, c));
            }
        }
    }
    out
}

pub fn is_stable(inst: &Instance, t: &CapacityAllocation, mu: &Matching) -> bool {
    blocking_pairs(inst, t, mu).is_empty()
}

/// Fractional blocking pairs of `x` under capacities `q + t`.
///
/// `(s, c)` blocks when `s` has positive mass on something worse than `c`
/// and `c` is either under-subscribed or holds positive mass of a student it
/// ranks below `s`.
pub fn fractional_blocking_pairs(
    inst: &Instance,
    t: &CapacityAllocation,
    x: &FractionalAssignment,
) -> Vec<(usize, usize)> {
    let m = inst.n_schools();
    let mut full = vec![false; m];
    let mut worst = vec![0usize; m];
    for c in 0..m {
        full[c] = x.column_sum(inst, c) >= t.capacity(inst, c) as f64 - MASS_TOL;
        for &s in inst.applicants(c) {
            if x.get(inst, s, Some(c)) > MASS_TOL {
                worst[c] = worst[c].max(inst.priority_rank(c, s).expect("ranked"));
            }
        }
    }
    let mut out = Vec::new();
    for s in 0..inst.n_students() {
        let row = &x.rows[s];
        // position of the worst outcome with positive mass (list length = outside option)
        let Some(last) = (0..row.len()).rev().find(|&i| row[i] > MASS_TOL) else {
            continue;
        };
        for (i, &c) in inst.prefs(s).iter().enumerate() {
            if i >= last {
                break;
            }
            let r = inst.priority_rank(c, s).expect("ranked");
            if !full[c] || r < worst[c] {
                out.push((s, c));
            }
        }
    }
    out
}
