//! Mathematical programs over an [`Instance`].
//!
//! Two compact linearizations of the quadratic stability row
//! `(t_c + q_c)(1 − Σ_{c'⪰_s c} x_{s,c'}) ≤ Σ_{s'≻_c s} x_{s',c}`, and the
//! unary-expansion main program whose stability rows are comb cuts.

use std::collections::BTreeSet;

use crate::combs::{penalties_dominate, Comb};
use crate::error::{Error, Result};
use crate::lp::{Model, Relation, VarId};
use crate::matching::da_student_optimal;
use crate::model::{CapacityAllocation, FractionalAssignment, Instance};

/// Variable handles of a built model. Unused families are left empty.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    /// `x[s][i]` for the `i`-th listed school of `s`; the last entry is the outside option.
    pub x: Vec<Vec<VarId>>,
    pub t: Vec<VarId>,
    /// `y[c][k]`, one per expansion `k = 0..=B`.
    pub y: Vec<Vec<VarId>>,
    /// `alpha[s][i]` stands for `t_c · Σ_{c'⪰_s c} x_{s,c'}` with `c` the `i`-th school of `s`.
    pub alpha: Vec<Vec<VarId>>,
    /// `beta[s][i][j]` stands for `t_c · x_{s,c'}` with `c, c'` the `i`-th and `j`-th schools, `j ≤ i`.
    pub beta: Vec<Vec<Vec<VarId>>>,
}

impl VarMap {
    pub fn assignment(&self, inst: &Instance, values: &[f64]) -> FractionalAssignment {
        let mut x = FractionalAssignment::zeros(inst);
        for (s, row) in self.x.iter().enumerate() {
            for (i, &j) in row.iter().enumerate() {
                x.rows[s][i] = values[j];
            }
        }
        x
    }

    /// Reads `t` directly or through the unary expansion, rounding to integers.
    pub fn allocation(&self, values: &[f64]) -> CapacityAllocation {
        if !self.t.is_empty() {
            return CapacityAllocation::new(self.t.iter().map(|&j| values[j].round().max(0.0) as usize).collect());
        }
        CapacityAllocation::new(
            self.y
                .iter()
                .map(|ys| {
                    let t: f64 = ys.iter().enumerate().map(|(k, &j)| k as f64 * values[j]).sum();
                    t.round().max(0.0) as usize
                })
                .collect(),
        )
    }
}

/// Assignment variables, objective and the assignment equalities.
fn add_assignment(inst: &Instance, model: &mut Model, binary: bool) -> Vec<Vec<VarId>> {
    let mut x = Vec::with_capacity(inst.n_students());
    for s in 0..inst.n_students() {
        let mut row: Vec<VarId> = inst
            .prefs(s)
            .iter()
            .enumerate()
            .map(|(i, &c)| model.add_var(format!("x_{s}_{c}"), 0.0, 1.0, binary, (i + 1) as f64))
            .collect();
        row.push(model.add_var(format!("x_{s}_none"), 0.0, 1.0, binary, inst.penalty(s)));
        model.add_constraint(format!("assign_{s}"), row.iter().map(|&j| (j, 1.0)).collect(), Relation::Eq, 1.0);
        x.push(row);
    }
    x
}

/// Terms `Σ_s x_{s,c}` for every school.
fn column_terms(inst: &Instance, x: &[Vec<VarId>]) -> Vec<Vec<(VarId, f64)>> {
    (0..inst.n_schools())
        .map(|c| {
            inst.applicants(c).iter().map(|&s| (x[s][inst.rank(s, c).expect("applicant listed") - 1], 1.0)).collect()
        })
        .collect()
}

/// `x`, integer `t` and the capacity and budget rows.
fn add_pz(inst: &Instance, model: &mut Model, budget: usize) -> (Vec<Vec<VarId>>, Vec<VarId>) {
    let x = add_assignment(inst, model, true);
    let t: Vec<VarId> = (0..inst.n_schools())
        .map(|c| model.add_var(format!("t_{c}"), 0.0, inst.max_extra(c, budget) as f64, true, 0.0))
        .collect();
    for (c, mut terms) in column_terms(inst, &x).into_iter().enumerate() {
        terms.push((t[c], -1.0));
        model.add_constraint(format!("cap_{c}"), terms, Relation::Le, inst.capacity(c) as f64);
    }
    model.add_constraint("budget", t.iter().map(|&j| (j, 1.0)).collect(), Relation::Le, budget as f64);
    (x, t)
}

/// `Σ_{s'≻_c s} x_{s',c}` moved to the left-hand side.
fn higher_priority_terms(inst: &Instance, x: &[Vec<VarId>], s: usize, c: usize) -> Vec<(VarId, f64)> {
    let pos = inst.priority_rank(c, s).expect("pair listed");
    inst.applicants(c)[..pos - 1]
        .iter()
        .map(|&s2| (x[s2][inst.rank(s2, c).expect("applicant listed") - 1], -1.0))
        .collect()
}

/// Aggregated linearization with one `α_{s,c}` per feasible pair.
pub fn build_agg_lin(inst: &Instance, budget: usize) -> (Model, VarMap) {
    let mut model = Model::new();
    let (x, t) = add_pz(inst, &mut model, budget);
    let big = budget as f64;
    let mut alpha = Vec::with_capacity(inst.n_students());
    for s in 0..inst.n_students() {
        let mut row = Vec::with_capacity(inst.prefs(s).len());
        for (i, &c) in inst.prefs(s).iter().enumerate() {
            let a = model.add_var(format!("a_{s}_{c}"), 0.0, f64::INFINITY, false, 0.0);
            let q = inst.capacity(c) as f64;
            let mut stab = vec![(t[c], 1.0), (a, -1.0)];
            stab.extend(x[s][..=i].iter().map(|&j| (j, -q)));
            stab.extend(higher_priority_terms(inst, &x, s, c));
            model.add_constraint(format!("stab_{s}_{c}"), stab, Relation::Le, -q);

            let mut env = vec![(a, -1.0), (t[c], 1.0)];
            env.extend(x[s][..=i].iter().map(|&j| (j, big)));
            model.add_constraint(format!("mc_lo_{s}_{c}"), env, Relation::Le, big);
            model.add_constraint(format!("mc_t_{s}_{c}"), vec![(a, 1.0), (t[c], -1.0)], Relation::Le, 0.0);
            let mut up = vec![(a, 1.0)];
            up.extend(x[s][..=i].iter().map(|&j| (j, -big)));
            model.add_constraint(format!("mc_x_{s}_{c}"), up, Relation::Le, 0.0);
            row.push(a);
        }
        alpha.push(row);
    }
    (model, VarMap { x, t, alpha, ..Default::default() })
}

/// Non-aggregated linearization with one `β_{s,c,c'}` per `c' ⪰_s c`.
pub fn build_nonagg_lin(inst: &Instance, budget: usize) -> (Model, VarMap) {
    let mut model = Model::new();
    let (x, t) = add_pz(inst, &mut model, budget);
    let big = budget as f64;
    let mut beta = Vec::with_capacity(inst.n_students());
    for s in 0..inst.n_students() {
        let prefs = inst.prefs(s);
        let mut per_school = Vec::with_capacity(prefs.len());
        for (i, &c) in prefs.iter().enumerate() {
            let q = inst.capacity(c) as f64;
            let mut stab = vec![(t[c], 1.0)];
            let mut bs = Vec::with_capacity(i + 1);
            for (j, &c2) in prefs[..=i].iter().enumerate() {
                let b = model.add_var(format!("b_{s}_{c}_{c2}"), 0.0, f64::INFINITY, false, 0.0);
                let xj = x[s][j];
                model.add_constraint(
                    format!("mc_lo_{s}_{c}_{c2}"),
                    vec![(b, -1.0), (t[c], 1.0), (xj, big)],
                    Relation::Le,
                    big,
                );
                model.add_constraint(format!("mc_t_{s}_{c}_{c2}"), vec![(b, 1.0), (t[c], -1.0)], Relation::Le, 0.0);
                model.add_constraint(format!("mc_x_{s}_{c}_{c2}"), vec![(b, 1.0), (xj, -big)], Relation::Le, 0.0);
                stab.push((b, -1.0));
                stab.push((xj, -q));
                bs.push(b);
            }
            stab.extend(higher_priority_terms(inst, &x, s, c));
            model.add_constraint(format!("stab_{s}_{c}"), stab, Relation::Le, -q);
            per_school.push(bs);
        }
        beta.push(per_school);
    }
    (model, VarMap { x, t, beta, ..Default::default() })
}

/// Clears integrality; bounds are kept.
pub fn relax(model: &Model) -> Model {
    model.relax()
}

/// Main program of the cutting-plane method: continuous `x`, binary unary
/// expansion `y`, and one row `Σ_{pairs of C} x − k·y_c^k ≥ q_c` per comb.
pub fn build_bbcap_main(inst: &Instance, budget: usize, pool: &BTreeSet<Comb>) -> Result<(Model, VarMap)> {
    for comb in pool {
        if comb.k > budget {
            return Err(Error::InvalidArgument(format!(
                "comb at school {} has expansion {} above the budget {budget}",
                comb.school, comb.k
            )));
        }
        comb.check(inst)?;
    }
    let mut model = Model::new();
    let x = add_assignment(inst, &mut model, false);
    let mut y = Vec::with_capacity(inst.n_schools());
    let mut budget_row = Vec::new();
    for (c, mut cap) in column_terms(inst, &x).into_iter().enumerate() {
        let allowed = inst.max_extra(c, budget);
        let ys: Vec<VarId> = (0..=budget)
            .map(|k| model.add_var(format!("y_{c}_{k}"), 0.0, if k <= allowed { 1.0 } else { 0.0 }, true, 0.0))
            .collect();
        model.add_constraint(format!("unary_{c}"), ys.iter().map(|&j| (j, 1.0)).collect(), Relation::Eq, 1.0);
        for (k, &j) in ys.iter().enumerate().skip(1) {
            cap.push((j, -(k as f64)));
            budget_row.push((j, k as f64));
        }
        model.add_constraint(format!("cap_{c}"), cap, Relation::Le, inst.capacity(c) as f64);
        y.push(ys);
    }
    model.add_constraint("budget", budget_row, Relation::Le, budget as f64);
    for (i, comb) in pool.iter().enumerate() {
        let mut terms: Vec<(VarId, f64)> =
            comb.pairs(inst).into_iter().map(|(s, c)| (x[s][inst.rank(s, c).expect("pair listed") - 1], 1.0)).collect();
        if comb.k > 0 {
            terms.push((y[comb.school][comb.k], -(comb.k as f64)));
        }
        model.add_constraint(format!("comb_{i}"), terms, Relation::Ge, inst.capacity(comb.school) as f64);
    }
    if !penalties_dominate(inst) {
        add_open_school_rows(inst, &mut model, budget, &x, &y);
    }
    Ok((model, VarMap { x, y, ..Default::default() }))
}

/// A school whose seats outnumber its applicants has no comb. Once `t_c`
/// makes it so, stability asks every applicant to get `c` or better.
/// The objective enforces this by itself when penalties dominate.
fn add_open_school_rows(inst: &Instance, model: &mut Model, budget: usize, x: &[Vec<VarId>], y: &[Vec<VarId>]) {
    for c in 0..inst.n_schools() {
        let applicants = inst.applicants(c);
        let open: Vec<usize> =
            (0..=inst.max_extra(c, budget)).filter(|&k| inst.capacity(c) + k >= applicants.len()).collect();
        if open.is_empty() {
            continue;
        }
        for &s in applicants {
            let r = inst.rank(s, c).expect("applicant listed");
            let mut terms: Vec<(VarId, f64)> = x[s][..r].iter().map(|&j| (j, 1.0)).collect();
            terms.extend(open.iter().map(|&k| (y[c][k], -1.0)));
            model.add_constraint(format!("open_{c}_{s}"), terms, Relation::Ge, 0.0);
        }
    }
}

/// Combs read off the student-optimal matching without extra seats: for each
/// full school, the base is its last admitted student and the teeth are all admitted.
pub fn initial_cut_pool(inst: &Instance) -> BTreeSet<Comb> {
    let m = inst.n_schools();
    let mu = da_student_optimal(inst, &CapacityAllocation::zero(m));
    let mut pool = BTreeSet::new();
    for c in 0..m {
        let q = inst.capacity(c);
        let teeth: Vec<usize> = inst.applicants(c).iter().copied().filter(|&s| mu.assign[s] == Some(c)).collect();
        if q == 0 || teeth.len() != q {
            continue;
        }
        pool.insert(Comb { school: c, k: 0, base: *teeth.last().expect("q > 0"), teeth });
    }
    pool
}
