//! Bounded-variable primal simplex on a dense tableau.
//!
//! Columns are shifted so every variable lives in `[0, u]`. Each row gets a
//! slack (`≤`: `+s`, `≥`: `−s`) and is negated when its shifted rhs is
//! negative. The starting basis per row is a `+1` slack if there is one, else
//! a structural column that appears in no other row, else an artificial.
//! Phase 1 drives the artificials to zero, phase 2 optimizes the objective.
//! Pricing is Dantzig's rule; after a run of degenerate pivots it falls back
//! to Bland's rule until the objective moves again.

use crate::error::{Error, Result};
use crate::lp::model::{Model, Relation};

/// Numerical tolerances shared by the LP and MIP engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Primal feasibility of rows and bounds.
    pub feas: f64,
    /// Distance to the nearest integer accepted as integral.
    pub int: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { feas: 1e-7, int: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Variable values (meaningful when optimal).
    pub values: Vec<f64>,
    pub objective: f64,
    /// Row duals in the model's own orientation.
    pub duals: Vec<f64>,
    /// Reduced costs of the structural variables (zero for basic ones).
    pub reduced_costs: Vec<f64>,
    /// Lagrangian bound built from the duals; equals `objective` at optimality.
    pub dual_bound: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn status_only(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        let objective = match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
        LpSolution {
            status,
            values: vec![0.0; n],
            objective,
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            dual_bound: objective,
            iterations,
        }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-12;
const COST_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Basic,
    Lower,
    Upper,
}

#[derive(Clone)]
struct Tableau {
    rows: usize,
    cols: usize,
    n_struct: usize,
    first_art: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<Pos>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    rhs: Vec<f64>,
    init_col: Vec<usize>,
    init_coef: Vec<f64>,
    row_sign: Vec<f64>,
    allowed: Vec<bool>,
    nz: Vec<usize>,
    iterations: usize,
    /// Structural columns of the sign-adjusted rows, for moving bounds later.
    orig_cols: Vec<Vec<(usize, f64)>>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

/// Solves the LP relaxation of `model` (integrality is ignored).
pub fn solve_lp(model: &Model) -> Result<LpSolution> {
    model.validate()?;
    let lb: Vec<f64> = model.vars.iter().map(|v| v.lb).collect();
    let ub: Vec<f64> = model.vars.iter().map(|v| v.ub).collect();
    solve_with_bounds(model, &lb, &ub, &Tolerances::default())
}

/// Solves `model` with its variable bounds replaced by `lb`/`ub`.
pub fn solve_with_bounds(model: &Model, lb: &[f64], ub: &[f64], tol: &Tolerances) -> Result<LpSolution> {
    solve_cold(model, lb, ub, tol).map(|(sol, _)| sol)
}

/// Cold solve that also hands back the optimal tableau.
fn solve_cold(model: &Model, lb: &[f64], ub: &[f64], tol: &Tolerances) -> Result<(LpSolution, Option<Tableau>)> {
    let n = model.n_vars();
    let m = model.n_cons();
    if lb.iter().zip(ub).any(|(l, u)| *l > *u + tol.feas) {
        return Ok((LpSolution::status_only(LpStatus::Infeasible, n, m, 0), None));
    }

    let mut tab = Tableau::build(model, lb, ub);
    let limit = 50 * (tab.rows + tab.cols) + 1000;

    if tab.first_art < tab.cols {
        let mut c1 = vec![0.0; tab.cols];
        for c in c1.iter_mut().skip(tab.first_art) {
            *c = 1.0;
        }
        tab.set_cost(c1);
        match tab.run(limit)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => return Err(Error::Solver("phase 1 reported unbounded".into())),
        }
        let infeas: f64 = (0..tab.rows).filter(|&i| tab.basis[i] >= tab.first_art).map(|i| tab.beta[i]).sum();
        let scale = 1.0 + tab.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeas > tol.feas * scale {
            return Ok((LpSolution::status_only(LpStatus::Infeasible, n, m, tab.iterations), None));
        }
        tab.expel_artificials();
    }

    let mut c2 = vec![0.0; tab.cols];
    c2[..n].copy_from_slice(&model.obj);
    tab.set_cost(c2);
    match tab.run(limit)? {
        Outcome::Optimal => {}
        Outcome::Unbounded => return Ok((LpSolution::status_only(LpStatus::Unbounded, n, m, tab.iterations), None)),
    }
    tab.refresh_beta();
    let sol = tab.extract(model, lb);
    Ok((sol, Some(tab)))
}

/// Result of re-solving a stored tableau under tighter bounds.
pub(crate) enum WarmOutcome {
    Solved(LpSolution),
    /// The dual bound passed the cutoff before primal feasibility was reached.
    Cutoff {
        iterations: usize,
    },
}

/// An optimal tableau that later solves may start from, as long as they only
/// tighten variable bounds. Re-optimization runs the dual simplex.
#[derive(Clone)]
pub(crate) struct WarmStart {
    tab: Tableau,
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl WarmStart {
    /// Cold solve; keeps the tableau when the LP is optimal.
    pub(crate) fn root(
        model: &Model,
        lb: &[f64],
        ub: &[f64],
        tol: &Tolerances,
    ) -> Result<(LpSolution, Option<WarmStart>)> {
        let (sol, tab) = solve_cold(model, lb, ub, tol)?;
        let ws = tab.map(|tab| WarmStart { tab, lb: lb.to_vec(), ub: ub.to_vec() });
        Ok((sol, ws))
    }

    /// Re-solves under `lb`/`ub`, which must lie within the stored bounds.
    ///
    /// Stops early once the dual bound exceeds `cutoff`. Returns `None` when the
    /// warm path cannot be used (loosened bounds, numerical trouble); the
    /// caller then solves cold.
    pub(crate) fn resolve(
        &mut self,
        model: &Model,
        lb: &[f64],
        ub: &[f64],
        tol: &Tolerances,
        cutoff: f64,
    ) -> Option<WarmOutcome> {
        let n = model.n_vars();
        let start_iterations = self.tab.iterations;
        let tab = &mut self.tab;
        for j in 0..n {
            if lb[j] == self.lb[j] && ub[j] == self.ub[j] {
                continue;
            }
            if lb[j] < self.lb[j] || ub[j] > self.ub[j] {
                return None;
            }
            if lb[j] > ub[j] + tol.feas {
                let sol = LpSolution::status_only(LpStatus::Infeasible, n, model.n_cons(), 0);
                return Some(WarmOutcome::Solved(sol));
            }
            let delta = lb[j] - self.lb[j];
            if delta != 0.0 {
                for &(k, a) in &tab.orig_cols[j] {
                    tab.rhs[k] -= delta * a;
                }
            }
            tab.upper[j] = (ub[j] - lb[j]).max(0.0);
            if tab.pos[j] == Pos::Upper && tab.upper[j] == 0.0 {
                tab.pos[j] = Pos::Lower;
            }
            self.lb[j] = lb[j];
            self.ub[j] = ub[j];
        }
        tab.refresh_beta();
        let limit = 50 * (tab.rows + tab.cols) + 1000;
        match tab.dual_run(
            limit,
            tol.feas,
            cutoff - model.obj_const - lb.iter().zip(&model.obj).map(|(l, c)| l * c).sum::<f64>(),
        ) {
            DualOutcome::Feasible => {}
            DualOutcome::Infeasible => {
                let sol =
                    LpSolution::status_only(LpStatus::Infeasible, n, model.n_cons(), tab.iterations - start_iterations);
                return Some(WarmOutcome::Solved(sol));
            }
            DualOutcome::Cutoff => {
                return Some(WarmOutcome::Cutoff { iterations: tab.iterations - start_iterations });
            }
            DualOutcome::Stalled => return None,
        }
        // clean up drift in the reduced costs, then finish with the primal method
        let cost = tab.cost.clone();
        tab.set_cost(cost);
        match tab.run(limit) {
            Ok(Outcome::Optimal) => {}
            _ => return None,
        }
        tab.refresh_beta();
        if (0..tab.rows).any(|i| {
            let u = tab.upper[tab.basis[i]];
            tab.beta[i] < -10.0 * tol.feas || tab.beta[i] > u + 10.0 * tol.feas
        }) {
            return None;
        }
        let mut sol = tab.extract(model, lb);
        sol.iterations = tab.iterations - start_iterations;
        Some(WarmOutcome::Solved(sol))
    }
}

enum DualOutcome {
    Feasible,
    Infeasible,
    Cutoff,
    Stalled,
}

impl Tableau {
    fn build(model: &Model, lb: &[f64], ub: &[f64]) -> Tableau {
        let n = model.n_vars();
        let rows = model.n_cons();

        // merged, shifted rows
        let mut coefs: Vec<Vec<(usize, f64)>> = Vec::with_capacity(rows);
        let mut rhs = Vec::with_capacity(rows);
        let mut count = vec![0usize; n];
        let mut dense = vec![0.0; n];
        for c in &model.cons {
            let mut touched = Vec::with_capacity(c.terms.len());
            for &(j, a) in &c.terms {
                if dense[j] == 0.0 {
                    touched.push(j);
                }
                dense[j] += a;
            }
            let mut row = Vec::with_capacity(touched.len());
            let mut b = c.rhs;
            for j in touched {
                let a = dense[j];
                dense[j] = 0.0;
                if a != 0.0 {
                    b -= a * lb[j];
                    row.push((j, a));
                    count[j] += 1;
                }
            }
            coefs.push(row);
            rhs.push(b);
        }

        let n_slack = model.cons.iter().filter(|c| c.rel != Relation::Eq).count();
        let mut upper: Vec<f64> = (0..n).map(|j| ub[j] - lb[j]).collect();
        upper.extend(std::iter::repeat_n(f64::INFINITY, n_slack));

        // starting basis
        let mut row_sign = vec![1.0; rows];
        let mut slack_col = vec![usize::MAX; rows];
        let mut slack_coef = vec![0.0; rows];
        let mut init_col = vec![usize::MAX; rows];
        let mut init_coef = vec![1.0; rows];
        let mut used = vec![false; n];
        let mut next_slack = n;
        let mut n_art = 0;
        let mut needs_art = vec![false; rows];
        for i in 0..rows {
            if rhs[i] < 0.0 {
                row_sign[i] = -1.0;
                rhs[i] = -rhs[i];
            }
            let rel = model.cons[i].rel;
            if rel != Relation::Eq {
                slack_col[i] = next_slack;
                slack_coef[i] = row_sign[i] * if rel == Relation::Le { 1.0 } else { -1.0 };
                next_slack += 1;
            }
            if slack_coef[i] > 0.0 {
                init_col[i] = slack_col[i];
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for &(j, a) in &coefs[i] {
                let a = a * row_sign[i];
                if count[j] == 1 && !used[j] && a > 0.0 && rhs[i] / a <= upper[j] + 1e-12 {
                    let better = match best {
                        None => true,
                        Some((k, ak)) => model.obj[j] / a < model.obj[k] / ak,
                    };
                    if better {
                        best = Some((j, a));
                    }
                }
            }
            if let Some((j, a)) = best {
                used[j] = true;
                init_col[i] = j;
                init_coef[i] = a;
            } else {
                needs_art[i] = true;
                n_art += 1;
            }
        }
        let mut orig_cols = vec![Vec::new(); n];
        for (i, row) in coefs.iter().enumerate() {
            for &(j, a) in row {
                orig_cols[j].push((i, a * row_sign[i]));
            }
        }
        let first_art = n + n_slack;
        let cols = first_art + n_art;
        upper.extend(std::iter::repeat_n(f64::INFINITY, n_art));

        let mut t = vec![0.0; rows * cols];
        let mut next_art = first_art;
        for i in 0..rows {
            if needs_art[i] {
                init_col[i] = next_art;
                next_art += 1;
            }
            let row = &mut t[i * cols..(i + 1) * cols];
            let inv = row_sign[i] / init_coef[i];
            for &(j, a) in &coefs[i] {
                row[j] = a * inv;
            }
            if slack_col[i] != usize::MAX {
                row[slack_col[i]] = slack_coef[i] / init_coef[i];
            }
            if needs_art[i] {
                row[init_col[i]] = 1.0;
            }
        }

        let mut pos = vec![Pos::Lower; cols];
        let mut beta = vec![0.0; rows];
        for i in 0..rows {
            pos[init_col[i]] = Pos::Basic;
            beta[i] = rhs[i] / init_coef[i];
        }

        Tableau {
            rows,
            cols,
            n_struct: n,
            first_art,
            t,
            beta,
            basis: init_col.clone(),
            pos,
            upper,
            cost: vec![0.0; cols],
            d: vec![0.0; cols],
            rhs,
            init_col,
            init_coef,
            row_sign,
            allowed: vec![true; cols],
            nz: Vec::with_capacity(cols),
            iterations: 0,
            orig_cols,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.cols..(i + 1) * self.cols]
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        self.d.clone_from(&cost);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let (d, t) = (&mut self.d, &self.t);
                for (dj, tij) in d.iter_mut().zip(&t[i * self.cols..(i + 1) * self.cols]) {
                    *dj -= cb * tij;
                }
            }
        }
        for i in 0..self.rows {
            self.d[self.basis[i]] = 0.0;
        }
        self.cost = cost;
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.cols {
            if !self.allowed[j] {
                continue;
            }
            let dir = match self.pos[j] {
                Pos::Basic => continue,
                Pos::Lower if self.d[j] < -COST_TOL && self.upper[j] > 0.0 => 1.0,
                Pos::Upper if self.d[j] > COST_TOL => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = self.d[j].abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn run(&mut self, limit: usize) -> Result<Outcome> {
        let mut degenerate = 0usize;
        loop {
            if self.iterations > limit {
                return Err(Error::Solver(format!("simplex iteration limit {limit} exceeded")));
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let Some((q, dir)) = self.choose_entering(bland) else {
                return Ok(Outcome::Optimal);
            };
            self.iterations += 1;

            // two-pass ratio test: bounds relaxed by HARRIS_TOL find the step,
            // then the largest pivot within that step leaves
            let mut theta_max = self.upper[q];
            for i in 0..self.rows {
                let alpha = self.t[i * self.cols + q] * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let ratio = if alpha > 0.0 {
                    (self.beta[i].max(0.0) + HARRIS_TOL) / alpha
                } else {
                    let u = self.upper[b];
                    if !u.is_finite() {
                        continue;
                    }
                    ((u - self.beta[i]).max(0.0) + HARRIS_TOL) / -alpha
                };
                theta_max = theta_max.min(ratio);
            }
            let mut theta = self.upper[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0;
            if theta_max < self.upper[q] {
                for i in 0..self.rows {
                    let alpha = self.t[i * self.cols + q] * dir;
                    if alpha.abs() <= PIVOT_TOL {
                        continue;
                    }
                    let b = self.basis[i];
                    let (ratio, to_upper) = if alpha > 0.0 {
                        (self.beta[i].max(0.0) / alpha, false)
                    } else {
                        let u = self.upper[b];
                        if !u.is_finite() {
                            continue;
                        }
                        ((u - self.beta[i]).max(0.0) / -alpha, true)
                    };
                    if ratio > theta_max {
                        continue;
                    }
                    let take = match leave {
                        None => true,
                        Some((r, _)) => {
                            if bland {
                                b < self.basis[r]
                            } else {
                                alpha.abs() > leave_alpha
                            }
                        }
                    };
                    if take {
                        theta = ratio;
                        leave = Some((i, to_upper));
                        leave_alpha = alpha.abs();
                    }
                }
            }
            if leave.is_none() && !theta.is_finite() {
                return Ok(Outcome::Unbounded);
            }
            if theta > 1e-12 {
                degenerate = 0;
            } else {
                degenerate += 1;
            }

            // move basic values along the edge
            if theta != 0.0 {
                for i in 0..self.rows {
                    let a = self.t[i * self.cols + q];
                    if a != 0.0 {
                        self.beta[i] -= dir * theta * a;
                    }
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.pos[q] = if dir > 0.0 { Pos::Upper } else { Pos::Lower };
                }
                Some((r, to_upper)) => {
                    let entering_value = if dir > 0.0 { theta } else { self.upper[q] - theta };
                    let out = self.basis[r];
                    self.pivot(r, q);
                    self.beta[r] = entering_value;
                    self.pos[out] = if to_upper { Pos::Upper } else { Pos::Lower };
                    if out >= self.first_art && self.cost[out] == 0.0 {
                        // artificials never come back once they leave in phase 2
                        self.allowed[out] = false;
                    }
                }
            }
        }
    }

    /// Shifted objective `Σ c_j x_j` of the current basic solution.
    fn shifted_objective(&self) -> f64 {
        let mut z = 0.0;
        for j in 0..self.cols {
            if self.pos[j] == Pos::Upper {
                z += self.cost[j] * self.upper[j];
            }
        }
        for i in 0..self.rows {
            z += self.cost[self.basis[i]] * self.beta[i];
        }
        z
    }

    /// Dual simplex from a dual-feasible basis until the basic values fit their bounds.
    fn dual_run(&mut self, limit: usize, feas: f64, cutoff: f64) -> DualOutcome {
        let start = self.iterations;
        loop {
            let mut leave = None;
            let mut worst = feas;
            for i in 0..self.rows {
                let b = self.beta[i];
                let u = self.upper[self.basis[i]];
                let v = if b < 0.0 { -b } else { b - u };
                if v > worst {
                    worst = v;
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return DualOutcome::Feasible;
            };
            if self.iterations - start > limit {
                return DualOutcome::Stalled;
            }
            self.iterations += 1;
            let to_lower = self.beta[r] < 0.0;
            let row = self.row(r);
            let mut enter: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0;
            for j in 0..self.cols {
                if !self.allowed[j] || self.upper[j] == 0.0 {
                    continue;
                }
                let a = row[j];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let ok = match self.pos[j] {
                    Pos::Basic => false,
                    Pos::Lower => (a < 0.0) == to_lower,
                    Pos::Upper => (a > 0.0) == to_lower,
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                if ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && a.abs() > best_alpha) {
                    best_ratio = ratio;
                    best_alpha = a.abs();
                    enter = Some(j);
                }
            }
            let Some(q) = enter else {
                return DualOutcome::Infeasible;
            };
            let out = self.basis[r];
            let target = if to_lower { 0.0 } else { self.upper[out] };
            let step = (self.beta[r] - target) / self.t[r * self.cols + q];
            for i in 0..self.rows {
                let a = self.t[i * self.cols + q];
                if a != 0.0 {
                    self.beta[i] -= a * step;
                }
            }
            let entering_value = if self.pos[q] == Pos::Upper { self.upper[q] } else { 0.0 } + step;
            self.pivot(r, q);
            self.beta[r] = entering_value;
            self.pos[out] = if to_lower { Pos::Lower } else { Pos::Upper };
            let z = self.shifted_objective();
            if z > cutoff {
                return DualOutcome::Cutoff;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + q];
        self.nz.clear();
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            let inv = 1.0 / piv;
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        self.nz.push(j);
                    }
                }
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        let update = |row: &mut [f64], nz: &[usize]| {
            let f = row[q];
            if f != 0.0 {
                for &j in nz {
                    let v = row[j] - f * prow[j];
                    row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
                }
                row[q] = 0.0;
            }
        };
        for row in before.chunks_exact_mut(cols) {
            update(row, &self.nz);
        }
        for row in after.chunks_exact_mut(cols) {
            update(row, &self.nz);
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in &self.nz {
                self.d[j] -= f * prow[j];
            }
            self.d[q] = 0.0;
        }
        self.pos[q] = Pos::Basic;
        self.basis[r] = q;
    }

    /// Pivots zero-level artificials out of the basis where possible and
    /// fixes every artificial at zero.
    fn expel_artificials(&mut self) {
        for r in 0..self.rows {
            if self.basis[r] < self.first_art {
                continue;
            }
            let row = self.row(r);
            let mut best = None;
            let mut best_abs = 1e-7;
            for j in 0..self.first_art {
                if self.pos[j] != Pos::Basic && row[j].abs() > best_abs {
                    best_abs = row[j].abs();
                    best = Some(j);
                }
            }
            if let Some(q) = best {
                let value = if self.pos[q] == Pos::Upper { self.upper[q] } else { 0.0 };
                let out = self.basis[r];
                self.pivot(r, q);
                self.beta[r] = value;
                self.pos[out] = Pos::Lower;
            }
        }
        for j in self.first_art..self.cols {
            self.upper[j] = 0.0;
            if self.pos[j] != Pos::Basic {
                self.allowed[j] = false;
            }
        }
    }

    /// Recomputes basic values from the original right-hand side.
    fn refresh_beta(&mut self) {
        let mut beta = vec![0.0; self.rows];
        for k in 0..self.rows {
            let w = self.rhs[k] / self.init_coef[k];
            if w == 0.0 {
                continue;
            }
            let col = self.init_col[k];
            for (i, b) in beta.iter_mut().enumerate() {
                *b += w * self.t[i * self.cols + col];
            }
        }
        for j in 0..self.cols {
            if self.pos[j] == Pos::Upper {
                let u = self.upper[j];
                for (i, b) in beta.iter_mut().enumerate() {
                    *b -= u * self.t[i * self.cols + j];
                }
            }
        }
        self.beta = beta;
    }

    fn extract(&self, model: &Model, lb: &[f64]) -> LpSolution {
        let n = self.n_struct;
        let mut shifted = vec![0.0; self.cols];
        for j in 0..self.cols {
            if self.pos[j] == Pos::Upper {
                shifted[j] = self.upper[j];
            }
        }
        for i in 0..self.rows {
            shifted[self.basis[i]] = self.beta[i];
        }
        let mut values = vec![0.0; n];
        for j in 0..n {
            let mut v = lb[j] + shifted[j];
            let hi = lb[j] + self.upper[j];
            if (v - lb[j]).abs() < 1e-11 {
                v = lb[j];
            } else if hi.is_finite() && (v - hi).abs() < 1e-11 {
                v = hi;
            }
            values[j] = v;
        }
        let objective = model.objective(&values);

        // duals of the sign-adjusted rows, then back to the model orientation
        let mut duals = vec![0.0; self.rows];
        let mut bound = model.obj_const;
        for j in 0..n {
            bound += model.obj[j] * lb[j];
        }
        for k in 0..self.rows {
            let col = self.init_col[k];
            let y = (self.cost[col] - self.d[col]) / self.init_coef[k];
            bound += y * self.rhs[k];
            duals[k] = y * self.row_sign[k];
        }
        for j in 0..self.cols {
            let dj = self.d[j];
            if dj < 0.0 {
                let u = self.upper[j];
                if u.is_finite() {
                    bound += dj * u;
                } else if dj < -COST_TOL {
                    bound = f64::NEG_INFINITY;
                }
            }
        }

        let reduced_costs = (0..n).map(|j| if self.pos[j] == Pos::Basic { 0.0 } else { self.d[j] }).collect();
        LpSolution {
            status: LpStatus::Optimal,
            values,
            objective,
            duals,
            reduced_costs,
            dual_bound: bound,
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::model::Relation::*;

    fn solve(m: &Model) -> LpSolution {
        solve_lp(m).unwrap()
    }

    #[test]
    fn single_lower_bound_row() {
        let mut m = Model::new();
        let x = m.add_var("x", 0.0, 10.0, false, 1.0);
        m.add_constraint("r", vec![(x, 1.0)], Ge, 2.0);
        let s = solve(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
        assert!((s.dual_bound - 2.0).abs() < 1e-9);
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut m = Model::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, false, -3.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, false, -5.0);
        m.add_constraint("a", vec![(x, 1.0)], Le, 4.0);
        m.add_constraint("b", vec![(y, 2.0)], Le, 12.0);
        m.add_constraint("c", vec![(x, 3.0), (y, 2.0)], Le, 18.0);
        let s = solve(&m);
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.values[0] - 2.0).abs() < 1e-9 && (s.values[1] - 6.0).abs() < 1e-9);
        assert!((s.dual_bound - s.objective).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut m = Model::new();
        let x = m.add_var("x", 0.0, 1.0, false, 1.0);
        m.add_constraint("r", vec![(x, 1.0)], Ge, 2.0);
        assert_eq!(solve(&m).status, LpStatus::Infeasible);

        let mut m = Model::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, false, -1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, false, 0.0);
        m.add_constraint("r", vec![(x, 1.0), (y, -1.0)], Le, 1.0);
        assert_eq!(solve(&m).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_and_shifted_bounds() {
        // min x - y, x + y = 5, x in [1, 4], y in [2, 3]
        let mut m = Model::new();
        let x = m.add_var("x", 1.0, 4.0, false, 1.0);
        let y = m.add_var("y", 2.0, 3.0, false, -1.0);
        m.add_constraint("e", vec![(x, 1.0), (y, 1.0)], Eq, 5.0);
        let s = solve(&m);
        assert!((s.objective + 1.0).abs() < 1e-9, "{}", s.objective);
        assert!((s.dual_bound - s.objective).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut m = Model::new();
        let x = m.add_var("x", 0.0, 10.0, false, 1.0);
        let y = m.add_var("y", 0.0, 10.0, false, 2.0);
        m.add_constraint("e1", vec![(x, 1.0), (y, 1.0)], Eq, 3.0);
        m.add_constraint("e2", vec![(x, 2.0), (y, 2.0)], Eq, 6.0);
        let s = solve(&m);
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert!(m.max_violation(&s.values) < 1e-9);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, cycles under naive Dantzig pricing
        let mut m = Model::new();
        let x: Vec<usize> = (0..4).map(|i| m.add_var(format!("x{i}"), 0.0, f64::INFINITY, false, 0.0)).collect();
        m.obj = vec![-0.75, 150.0, -0.02, 6.0];
        m.add_constraint("a", vec![(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)], Le, 0.0);
        m.add_constraint("b", vec![(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)], Le, 0.0);
        m.add_constraint("c", vec![(x[2], 1.0)], Le, 1.0);
        let s = solve(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9, "{}", s.objective);
    }
}
