//! Generalized combs and their separation.
//!
//! For school `c` at expansion `k`, a comb with base `b` is the shaft (all
//! pairs `(s', c)` with `s'` ranked at or above `b` by `c`) together with
//! `q_c + k` teeth, one of them based at `b`. A tooth based at `s'` adds the
//! pairs of `s'` with schools they prefer to `c`. Stable points put mass at
//! least `q_c + k` on every comb of the expansion their school received.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::matching::MASS_TOL;
use crate::model::{CapacityAllocation, FractionalAssignment, Instance, Matching};

/// A comb is reported as violated when its value falls this far below `q_c + k`.
pub const SEPARATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Comb {
    pub school: usize,
    pub k: usize,
    pub base: usize,
    /// Students whose teeth are used, in the school's priority order; includes `base`.
    pub teeth: Vec<usize>,
}

impl Comb {
    /// Checks base eligibility and that every tooth lies in the shaft.
    pub fn check(&self, inst: &Instance) -> Result<()> {
        let c = self.school;
        let size = inst.capacity(c) + self.k;
        let base_rank = inst
            .priority_rank(c, self.base)
            .ok_or_else(|| Error::InvalidArgument(format!("comb base {} did not apply to {c}", self.base)))?;
        if base_rank < size {
            return Err(Error::InvalidArgument(format!(
                "comb base {} has priority {base_rank} at school {c}, needs at least {size}",
                self.base
            )));
        }
        if self.teeth.len() != size || !self.teeth.contains(&self.base) {
            return Err(Error::InvalidArgument(format!("comb at school {c} needs {size} teeth including its base")));
        }
        for &s in &self.teeth {
            match inst.priority_rank(c, s) {
                Some(r) if r <= base_rank => {}
                _ => {
                    return Err(Error::InvalidArgument(format!("tooth {s} of comb at school {c} is outside the shaft")))
                }
            }
        }
        Ok(())
    }

    /// Distinct `(student, school)` pairs covered by the comb.
    pub fn pairs(&self, inst: &Instance) -> Vec<(usize, usize)> {
        let c = self.school;
        let base_rank = inst.priority_rank(c, self.base).expect("base applied");
        let mut out: Vec<(usize, usize)> = inst.applicants(c)[..base_rank].iter().map(|&s| (s, c)).collect();
        for &s in &self.teeth {
            let r = inst.rank(s, c).expect("tooth applied");
            out.extend(inst.prefs(s)[..r - 1].iter().map(|&c2| (s, c2)));
        }
        out
    }
}

/// Mass of `s` on schools it prefers to `c`, plus `x_{s,c}` when `include_base`.
pub fn tooth_value(inst: &Instance, x: &FractionalAssignment, s: usize, c: usize, include_base: bool) -> f64 {
    let r = inst.rank(s, c).expect("pair outside the feasible set");
    let row = &x.rows[s];
    let above: f64 = row[..r - 1].iter().sum();
    if include_base {
        above + row[r - 1]
    } else {
        above
    }
}

/// Total mass on the union of the comb's pairs.
pub fn comb_value(inst: &Instance, x: &FractionalAssignment, comb: &Comb) -> f64 {
    comb.pairs(inst).iter().map(|&(s, c)| x.get(inst, s, Some(c))).sum()
}

/// Schools fully subscribed in both `x` and `mu` that hold mass of a student `mu` sends elsewhere.
pub fn block_set(inst: &Instance, x: &FractionalAssignment, t: &CapacityAllocation, mu: &Matching) -> Vec<usize> {
    block_set_counted(inst, x, t, mu).0
}

fn block_set_counted(
    inst: &Instance,
    x: &FractionalAssignment,
    t: &CapacityAllocation,
    mu: &Matching,
) -> (Vec<usize>, u64) {
    let m = inst.n_schools();
    let loads = mu.loads(m);
    let mut ops = inst.n_students() as u64;
    let mut out = Vec::new();
    for c in 0..m {
        let cap = t.capacity(inst, c);
        let mut sum = 0.0;
        let mut exceeding = false;
        for &s in inst.applicants(c) {
            ops += 1;
            let v = x.get(inst, s, Some(c));
            sum += v;
            if v > MASS_TOL && mu.assign[s] != Some(c) {
                exceeding = true;
            }
        }
        if loads[c] == cap && (sum - cap as f64).abs() <= SEPARATION_TOL && exceeding {
            out.push(c);
        }
    }
    (out, ops)
}

/// Heap key: tooth value, then the earlier-ranked student counts as larger.
#[derive(Debug, Clone, Copy)]
struct Key {
    v: f64,
    pos: usize,
    s: usize,
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.v.total_cmp(&other.v).then_with(|| other.pos.cmp(&self.pos))
    }
}

fn log2_ceil(k: usize) -> u64 {
    (usize::BITS - k.max(1).leading_zeros()) as u64
}

/// Minimum-value comb of school `c` at expansion `k`, scanning bases down to `last`.
///
/// Value of the comb based at `b` is `shaft(b) + v_b` plus the `K − 1`
/// smallest tooth values above `b`, kept in a bounded max-heap.
fn scan_school(
    inst: &Instance,
    x: &FractionalAssignment,
    c: usize,
    k: usize,
    last: usize,
    stop_at: Option<usize>,
    ops: &mut u64,
) -> Option<(f64, usize, Vec<usize>)> {
    let size = inst.capacity(c) + k;
    if size == 0 {
        return None;
    }
    let keep = size - 1;
    let step = log2_ceil(keep) + 1;
    let prio = inst.applicants(c);
    let mut heap: BinaryHeap<Key> = BinaryHeap::with_capacity(keep + 1);
    let mut heap_sum = 0.0;
    let mut shaft = 0.0;
    let mut best: Option<(f64, usize)> = None;
    for (i, &s) in prio.iter().enumerate().take(last + 1) {
        *ops += 1;
        shaft += x.get(inst, s, Some(c));
        let v = tooth_value(inst, x, s, c, false);
        if i + 1 >= size && heap.len() == keep {
            if stop_at == Some(i) {
                let mut teeth: Vec<Key> = heap.into_vec();
                teeth.push(Key { v, pos: i, s });
                teeth.sort_by_key(|t| t.pos);
                let value = shaft + v + heap_sum;
                return Some((value, s, teeth.into_iter().map(|t| t.s).collect()));
            }
            let value = shaft + v + heap_sum;
            if best.is_none_or(|(b, _)| value < b - 1e-12) {
                best = Some((value, i));
            }
        }
        if keep > 0 {
            let key = Key { v, pos: i, s };
            if heap.len() < keep {
                heap.push(key);
                heap_sum += v;
                *ops += step;
            } else if key < *heap.peek().expect("full heap") {
                let out = heap.pop().expect("full heap");
                heap_sum += v - out.v;
                heap.push(key);
                *ops += 2 * step;
            }
        }
    }
    let (value, i) = best?;
    if stop_at.is_some() {
        return None;
    }
    // second pass rebuilds the teeth of the winning base
    let mut dummy = 0;
    scan_school(inst, x, c, k, last, Some(i), &mut dummy).map(|(_, b, teeth)| (value, b, teeth))
}

/// True when every student's penalty exceeds the rank of each school they list.
///
/// Moving mass from the outside option to any listed school then lowers the
/// objective, so a main-program optimum never leaves a wanted seat empty and
/// violated combs can only sit at full schools.
pub fn penalties_dominate(inst: &Instance) -> bool {
    (0..inst.n_students()).all(|s| inst.penalty(s) > inst.prefs(s).len() as f64)
}

/// Most violated comb per blocking school.
///
/// `mu` must be the student-optimal stable matching under `t`. With
/// [`penalties_dominate`], only schools in [`block_set`] are scanned.
/// Otherwise every school is scanned over its whole priority list. A school
/// contributes its minimum-value comb at expansion `t_c` when that value is
/// below `q_c + t_c`.
pub fn separate(inst: &Instance, x: &FractionalAssignment, t: &CapacityAllocation, mu: &Matching) -> Vec<Comb> {
    separate_counted(inst, x, t, mu).0
}

/// [`separate`] plus an operation count (one per student visited, plus heap work).
pub fn separate_counted(
    inst: &Instance,
    x: &FractionalAssignment,
    t: &CapacityAllocation,
    mu: &Matching,
) -> (Vec<Comb>, u64) {
    if !penalties_dominate(inst) {
        let mut ops = 0;
        let all: Vec<usize> = (0..inst.n_schools()).collect();
        return (separate_at(inst, x, t, &all, true, &mut ops), ops);
    }
    let (block, mut ops) = block_set_counted(inst, x, t, mu);
    let cuts = separate_at(inst, x, t, &block, false, &mut ops);
    (cuts, ops)
}

/// Most violated comb at every school, scanning whole priority lists.
pub fn separate_all(inst: &Instance, x: &FractionalAssignment, t: &CapacityAllocation) -> Vec<Comb> {
    let all: Vec<usize> = (0..inst.n_schools()).collect();
    separate_at(inst, x, t, &all, true, &mut 0)
}

/// Most violated comb at every school whose column is full in `x`, block or not.
pub fn separate_full(inst: &Instance, x: &FractionalAssignment, t: &CapacityAllocation) -> Vec<Comb> {
    let full: Vec<usize> = (0..inst.n_schools())
        .filter(|&c| (x.column_sum(inst, c) - t.capacity(inst, c) as f64).abs() <= SEPARATION_TOL)
        .collect();
    separate_at(inst, x, t, &full, false, &mut 0)
}

fn separate_at(
    inst: &Instance,
    x: &FractionalAssignment,
    t: &CapacityAllocation,
    schools: &[usize],
    to_end: bool,
    ops: &mut u64,
) -> Vec<Comb> {
    let mut out = Vec::new();
    for &c in schools {
        let prio = inst.applicants(c);
        // past the last student with mass the shaft holds the whole column
        let last = if to_end {
            prio.len().checked_sub(1)
        } else {
            prio.iter().rposition(|&s| x.get(inst, s, Some(c)) > MASS_TOL)
        };
        let Some(last) = last else { continue };
        let k = t.t[c];
        if let Some((value, base, teeth)) = scan_school(inst, x, c, k, last, None, ops) {
            if value < (inst.capacity(c) + k) as f64 - SEPARATION_TOL {
                out.push(Comb { school: c, k, base, teeth });
            }
        }
    }
    out
}

/// Every comb of school `c` at expansion `k`. Exponential; refuses more than `limit` combs.
pub fn enumerate_combs(inst: &Instance, c: usize, k: usize, limit: usize) -> Result<Vec<Comb>> {
    let size = inst.capacity(c) + k;
    let prio = inst.applicants(c);
    let mut out = Vec::new();
    if size == 0 {
        return Ok(out);
    }
    for (i, &base) in prio.iter().enumerate() {
        if i + 1 < size {
            continue;
        }
        let mut chosen = Vec::with_capacity(size - 1);
        let mut err = None;
        choose(&prio[..i], size - 1, 0, &mut chosen, &mut |set| {
            if out.len() >= limit {
                err = Some(Error::TooLarge(format!("more than {limit} combs at school {c}")));
                return;
            }
            let mut teeth = set.to_vec();
            teeth.push(base);
            out.push(Comb { school: c, k, base, teeth });
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(out)
}

fn choose(pool: &[usize], r: usize, from: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if chosen.len() == r {
        f(chosen);
        return;
    }
    for i in from..pool.len() {
        if pool.len() - i < r - chosen.len() {
            break;
        }
        chosen.push(pool[i]);
        choose(pool, r, i + 1, chosen, f);
        chosen.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matching::da_student_optimal;

    #[test]
    fn single_cut_comb_at_first_school() {
        let (inst, x, t) = fixtures::single_cut_point();
        let mu = da_student_optimal(&inst, &t);
        assert_eq!(block_set(&inst, &x, &t, &mu), vec![0]);
        assert_eq!(tooth_value(&inst, &x, 1, 0, false), 0.0);
        let cuts = separate(&inst, &x, &t, &mu);
        assert_eq!(cuts, vec![Comb { school: 0, k: 0, base: 1, teeth: vec![1] }]);
        assert_eq!(comb_value(&inst, &x, &cuts[0]), 0.0);
        cuts[0].check(&inst).unwrap();
    }

    #[test]
    fn zero_comb_has_value_zero() {
        let (inst, x, t) = fixtures::zero_comb_point();
        let mu = da_student_optimal(&inst, &t);
        let cuts = separate(&inst, &x, &t, &mu);
        assert_eq!(cuts, vec![Comb { school: 5, k: 0, base: 1, teeth: vec![0, 1] }]);
        assert_eq!(comb_value(&inst, &x, &cuts[0]), 0.0);
    }

    #[test]
    fn unstable_optimum_fully_subscribed_sets_differ() {
        let (inst, x, t) = fixtures::unstable_optimum_point();
        let mu = da_student_optimal(&inst, &t);
        let full_x: Vec<usize> = (0..4).filter(|&c| x.column_sum(&inst, c) >= 1.0).collect();
        let loads = mu.loads(4);
        let full_mu: Vec<usize> = (0..4).filter(|&c| loads[c] >= 1).collect();
        assert!(full_x.iter().any(|c| !full_mu.contains(c)));
        assert!(full_mu.iter().any(|c| !full_x.contains(c)));
    }

    #[test]
    fn stable_point_has_no_cut() {
        let inst = fixtures::one_seat();
        let t = CapacityAllocation::new(vec![1, 0, 0]);
        let mu = da_student_optimal(&inst, &t);
        let x = FractionalAssignment::from_matching(&inst, &mu);
        assert!(block_set(&inst, &x, &t, &mu).is_empty());
        assert!(separate(&inst, &x, &t, &mu).is_empty());
    }

    #[test]
    fn enumeration_counts() {
        let inst = fixtures::zero_comb();
        // school 0 has capacity 2 and 8 applicants: bases at ranks 2..=8, one extra tooth above
        let combs = enumerate_combs(&inst, 0, 0, 1000).unwrap();
        assert_eq!(combs.len(), (1..8).sum::<usize>());
        assert!(combs.iter().all(|c| c.check(&inst).is_ok()));
        assert!(enumerate_combs(&inst, 0, 3, 10).is_err());
    }

    #[test]
    fn pairs_are_distinct() {
        let inst = fixtures::zero_comb();
        for comb in enumerate_combs(&inst, 5, 1, 10_000).unwrap() {
            let mut p = comb.pairs(&inst);
            let len = p.len();
            p.sort_unstable();
            p.dedup();
            assert_eq!(p.len(), len);
        }
    }
}
