//! Market instances, capacity allocations and (fractional) matchings.
//!
//! Students and schools are dense 0-based ids. Ranks are 1-based positions in
//! a preference or priority list; the outside option is implicit after the
//! last listed school.

use std::fmt;

use crate::error::{Error, Result};

/// How unassignment penalties are derived for an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltySpec {
    /// `|C| + 1` for every student.
    Access,
    /// `|≻_s| + 1`, one more than the student's list length.
    Improve,
    /// `|S| · (1 − ξ)` with `ξ` the longest list length; negative whenever `ξ > 1`.
    MinCardinality,
    /// The same value for everybody.
    Constant(f64),
    /// Explicit per-student values.
    Values(Vec<f64>),
}

impl PenaltySpec {
    pub fn parse_mode(mode: &str) -> Result<Self> {
        match mode {
            "access" => Ok(PenaltySpec::Access),
            "improve" => Ok(PenaltySpec::Improve),
            "min_cardinality" | "min-cardinality" => Ok(PenaltySpec::MinCardinality),
            other => {
                if let Some(v) = other.strip_prefix("constant:") {
                    let v: f64 =
                        v.parse().map_err(|_| Error::InvalidArgument(format!("bad constant penalty '{other}'")))?;
                    Ok(PenaltySpec::Constant(v))
                } else {
                    Err(Error::InvalidArgument(format!(
                        "unknown penalty mode '{other}' (expected access, improve, min_cardinality or constant:<v>)"
                    )))
                }
            }
        }
    }
}

/// Resolves a penalty specification against the shape of a market.
pub(crate) fn resolve_penalties(prefs: &[Vec<usize>], n_schools: usize, spec: &PenaltySpec) -> Result<Vec<f64>> {
    let n = prefs.len();
    let values = match spec {
        PenaltySpec::Access => vec![(n_schools + 1) as f64; n],
        PenaltySpec::Improve => prefs.iter().map(|p| (p.len() + 1) as f64).collect(),
        PenaltySpec::MinCardinality => {
            let xi = prefs.iter().map(Vec::len).max().unwrap_or(0) as f64;
            vec![n as f64 * (1.0 - xi); n]
        }
        PenaltySpec::Constant(v) => vec![*v; n],
        PenaltySpec::Values(v) => {
            if v.len() != n {
                return Err(Error::InvalidInstance(format!("{} penalty values for {} students", v.len(), n)));
            }
            v.clone()
        }
    };
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInstance(format!("non-finite penalty {bad}")));
    }
    Ok(values)
}

/// Penalty values `mode` would assign to the students of `inst`.
pub fn penalty_preset(inst: &Instance, mode: &PenaltySpec) -> Result<Vec<f64>> {
    resolve_penalties(inst.all_prefs(), inst.n_schools(), mode)
}

/// A school-choice market with an extra-seat budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    prefs: Vec<Vec<usize>>,
    priorities: Vec<Vec<usize>>,
    capacities: Vec<usize>,
    budget: usize,
    penalty_spec: PenaltySpec,
    penalties: Vec<f64>,
    bounds: Vec<Option<usize>>,
    // pref_pos[s * m + c] = 1-based rank of c for s, 0 if unlisted
    pref_pos: Vec<u32>,
    // prio_pos[c * n + s] = 1-based rank of s at c, 0 if s did not apply
    prio_pos: Vec<u32>,
}

impl Instance {
    /// Builds and validates an instance.
    ///
    /// `bounds` may be empty (no per-school limits) or hold one entry per school.
    pub fn new(
        prefs: Vec<Vec<usize>>,
        priorities: Vec<Vec<usize>>,
        capacities: Vec<usize>,
        budget: usize,
        penalty_spec: PenaltySpec,
        bounds: Vec<Option<usize>>,
    ) -> Result<Self> {
        let n = prefs.len();
        let m = priorities.len();
        if n == 0 {
            return Err(Error::InvalidInstance("no students".into()));
        }
        if capacities.len() != m {
            return Err(Error::InvalidInstance(format!("{} capacities for {} schools", capacities.len(), m)));
        }
        let bounds = if bounds.is_empty() { vec![None; m] } else { bounds };
        if bounds.len() != m {
            return Err(Error::InvalidInstance(format!("{} bounds for {} schools", bounds.len(), m)));
        }

        let mut pref_pos = vec![0u32; n * m];
        for (s, list) in prefs.iter().enumerate() {
            for (i, &c) in list.iter().enumerate() {
                if c >= m {
                    return Err(Error::InvalidInstance(format!("student {s} lists unknown school {c}")));
                }
                if pref_pos[s * m + c] != 0 {
                    return Err(Error::InvalidInstance(format!("duplicate pref: student {s} lists school {c} twice")));
                }
                pref_pos[s * m + c] = (i + 1) as u32;
            }
        }

        let mut prio_pos = vec![0u32; m * n];
        for (c, list) in priorities.iter().enumerate() {
            for (i, &s) in list.iter().enumerate() {
                if s >= n {
                    return Err(Error::InvalidInstance(format!("school {c} ranks unknown student {s}")));
                }
                if prio_pos[c * n + s] != 0 {
                    return Err(Error::InvalidInstance(format!(
                        "duplicate priority: school {c} ranks student {s} twice"
                    )));
                }
                if pref_pos[s * m + c] == 0 {
                    return Err(Error::InvalidInstance(format!(
                        "school {c} ranks student {s} who did not apply to it"
                    )));
                }
                prio_pos[c * n + s] = (i + 1) as u32;
            }
        }
        for s in 0..n {
            for c in 0..m {
                if pref_pos[s * m + c] != 0 && prio_pos[c * n + s] == 0 {
                    return Err(Error::InvalidInstance(format!(
                        "unranked applicant: student {s} applies to school {c} which does not rank them"
                    )));
                }
            }
        }

        let penalties = resolve_penalties(&prefs, m, &penalty_spec)?;
        Ok(Instance { prefs, priorities, capacities, budget, penalty_spec, penalties, bounds, pref_pos, prio_pos })
    }

    pub fn n_students(&self) -> usize {
        self.prefs.len()
    }

    pub fn n_schools(&self) -> usize {
        self.priorities.len()
    }

    pub fn prefs(&self, s: usize) -> &[usize] {
        &self.prefs[s]
    }

    pub fn all_prefs(&self) -> &[Vec<usize>] {
        &self.prefs
    }

    /// Students that applied to `c`, best priority first.
    pub fn applicants(&self, c: usize) -> &[usize] {
        &self.priorities[c]
    }

    pub fn capacity(&self, c: usize) -> usize {
        self.capacities[c]
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn penalty(&self, s: usize) -> f64 {
        self.penalties[s]
    }

    pub fn penalties(&self) -> &[f64] {
        &self.penalties
    }

    pub fn penalty_spec(&self) -> &PenaltySpec {
        &self.penalty_spec
    }

    pub fn bound(&self, c: usize) -> Option<usize> {
        self.bounds[c]
    }

    pub fn bounds(&self) -> &[Option<usize>] {
        &self.bounds
    }

    /// Largest number of extra seats school `c` may receive under `budget`.
    pub fn max_extra(&self, c: usize, budget: usize) -> usize {
        self.bounds[c].map_or(budget, |b| b.min(budget))
    }

    /// 1-based rank of `c` in the list of `s`, `None` if unlisted.
    pub fn rank(&self, s: usize, c: usize) -> Option<usize> {
        match self.pref_pos[s * self.n_schools() + c] {
            0 => None,
            r => Some(r as usize),
        }
    }

    /// 1-based priority position of `s` at `c`, `None` if `s` did not apply.
    pub fn priority_rank(&self, c: usize, s: usize) -> Option<usize> {
        match self.prio_pos[c * self.n_students() + s] {
            0 => None,
            r => Some(r as usize),
        }
    }

    pub fn is_feasible_pair(&self, s: usize, c: usize) -> bool {
        self.pref_pos[s * self.n_schools() + c] != 0
    }

    /// Does `s` strictly prefer `a` to `b`? `None` stands for being unassigned.
    pub fn student_prefers(&self, s: usize, a: Option<usize>, b: Option<usize>) -> bool {
        let key = |x: Option<usize>| x.and_then(|c| self.rank(s, c)).unwrap_or(usize::MAX);
        key(a) < key(b)
    }

    /// Does school `c` rank `a` strictly above `b`?
    pub fn school_prefers(&self, c: usize, a: usize, b: usize) -> bool {
        let key = |s: usize| self.priority_rank(c, s).unwrap_or(usize::MAX);
        key(a) < key(b)
    }

    /// Cost of the outcome `a` for student `s`: its rank or the penalty.
    pub fn cost(&self, s: usize, a: Option<usize>) -> f64 {
        match a {
            Some(c) => self.rank(s, c).expect("assignment outside the feasible pairs") as f64,
            None => self.penalties[s],
        }
    }

    /// Number of feasible student-school pairs (excluding the outside option).
    pub fn n_pairs(&self) -> usize {
        self.prefs.iter().map(Vec::len).sum()
    }

    pub fn max_list_len(&self) -> usize {
        self.prefs.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn with_budget(&self, budget: usize) -> Instance {
        Instance { budget, ..self.clone() }
    }

    pub fn with_penalties(&self, spec: PenaltySpec) -> Result<Instance> {
        let penalties = resolve_penalties(&self.prefs, self.n_schools(), &spec)?;
        Ok(Instance { penalty_spec: spec, penalties, ..self.clone() })
    }

    pub fn with_bounds(&self, bounds: Vec<Option<usize>>) -> Result<Instance> {
        if bounds.len() != self.n_schools() {
            return Err(Error::InvalidInstance(format!("{} bounds for {} schools", bounds.len(), self.n_schools())));
        }
        Ok(Instance { bounds, ..self.clone() })
    }

    /// Replaces one student's preference list. Schools keep their relative
    /// priority order; the student is dropped from schools no longer listed and
    /// inserted into newly listed ones at `insert_rank` (1-based, clamped).
    pub fn with_student_prefs(&self, s: usize, prefs: Vec<usize>, insert_rank: usize) -> Result<Instance> {
        let mut all_prefs = self.prefs.clone();
        all_prefs[s] = prefs;
        let mut priorities = self.priorities.clone();
        for (c, list) in priorities.iter_mut().enumerate() {
            let listed = all_prefs[s].contains(&c);
            let present = list.contains(&s);
            if present && !listed {
                list.retain(|&x| x != s);
            } else if listed && !present {
                let at = insert_rank.saturating_sub(1).min(list.len());
                list.insert(at, s);
            }
        }
        Instance::new(
            all_prefs,
            priorities,
            self.capacities.clone(),
            self.budget,
            self.penalty_spec.clone(),
            self.bounds.clone(),
        )
    }
}

/// Extra seats per school.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CapacityAllocation {
    pub t: Vec<usize>,
}

impl CapacityAllocation {
    pub fn zero(m: usize) -> Self {
        CapacityAllocation { t: vec![0; m] }
    }

    pub fn new(t: Vec<usize>) -> Self {
        CapacityAllocation { t }
    }

    pub fn total(&self) -> usize {
        self.t.iter().sum()
    }

    /// `t + e_c`.
    pub fn plus_one(&self, c: usize) -> Self {
        let mut t = self.t.clone();
        t[c] += 1;
        CapacityAllocation { t }
    }

    /// Checks `Σ t ≤ budget` and `t_c ≤ b_c`.
    pub fn check(&self, inst: &Instance, budget: usize) -> Result<()> {
        if self.t.len() != inst.n_schools() {
            return Err(Error::InvalidArgument(format!(
                "allocation has {} entries for {} schools",
                self.t.len(),
                inst.n_schools()
            )));
        }
        if self.total() > budget {
            return Err(Error::InvalidArgument(format!(
                "allocation uses {} seats with budget {}",
                self.total(),
                budget
            )));
        }
        for (c, &tc) in self.t.iter().enumerate() {
            if let Some(b) = inst.bound(c) {
                if tc > b {
                    return Err(Error::InvalidArgument(format!("school {c} receives {tc} seats above its bound {b}")));
                }
            }
        }
        Ok(())
    }

    /// Expanded capacity `q_c + t_c`.
    pub fn capacity(&self, inst: &Instance, c: usize) -> usize {
        inst.capacity(c) + self.t[c]
    }
}

/// An integral assignment of every student to a school or to nothing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    pub assign: Vec<Option<usize>>,
}

impl Matching {
    pub fn unassigned(n: usize) -> Self {
        Matching { assign: vec![None; n] }
    }

    pub fn new(assign: Vec<Option<usize>>) -> Self {
        Matching { assign }
    }

    pub fn school_of(&self, s: usize) -> Option<usize> {
        self.assign[s]
    }

    pub fn cardinality(&self) -> usize {
        self.assign.iter().filter(|a| a.is_some()).count()
    }

    /// Students assigned to each school.
    pub fn loads(&self, m: usize) -> Vec<usize> {
        let mut loads = vec![0; m];
        for c in self.assign.iter().flatten() {
            loads[*c] += 1;
        }
        loads
    }

    pub fn assigned_set(&self) -> Vec<usize> {
        (0..self.assign.len()).filter(|&s| self.assign[s].is_some()).collect()
    }

    /// Checks feasible pairs and expanded capacities.
    pub fn check(&self, inst: &Instance, t: &CapacityAllocation) -> Result<()> {
        if self.assign.len() != inst.n_students() {
            return Err(Error::InvalidArgument(format!(
                "matching has {} entries for {} students",
                self.assign.len(),
                inst.n_students()
            )));
        }
        for (s, a) in self.assign.iter().enumerate() {
            if let Some(c) = *a {
                if c >= inst.n_schools() || !inst.is_feasible_pair(s, c) {
                    return Err(Error::InvalidArgument(format!(
                        "student {s} assigned to school {c} outside their list"
                    )));
                }
            }
        }
        for (c, load) in self.loads(inst.n_schools()).into_iter().enumerate() {
            let cap = t.capacity(inst, c);
            if load > cap {
                return Err(Error::InvalidArgument(format!("school {c} holds {load} students with capacity {cap}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .assign
            .iter()
            .enumerate()
            .map(|(s, a)| match a {
                Some(c) => format!("s{s}->c{c}"),
                None => format!("s{s}->∅"),
            })
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Fractional assignment over the feasible pairs.
///
/// `rows[s][i]` is the mass of student `s` on their `i`-th listed school; the
/// final entry of each row is the mass on the outside option.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalAssignment {
    pub rows: Vec<Vec<f64>>,
}

impl FractionalAssignment {
    pub fn zeros(inst: &Instance) -> Self {
        FractionalAssignment { rows: (0..inst.n_students()).map(|s| vec![0.0; inst.prefs(s).len() + 1]).collect() }
    }

    /// Every entry rounded to the nearest multiple of `grid`, so that LP noise
    /// below it cannot flip a comparison.
    pub fn snapped(&self, grid: f64) -> Self {
        FractionalAssignment {
            rows: self.rows.iter().map(|r| r.iter().map(|v| (v / grid).round() * grid).collect()).collect(),
        }
    }

    pub fn from_matching(inst: &Instance, mu: &Matching) -> Self {
        let mut x = Self::zeros(inst);
        for s in 0..inst.n_students() {
            x.set(inst, s, mu.assign[s], 1.0);
        }
        x
    }

    fn index(inst: &Instance, s: usize, c: Option<usize>) -> usize {
        match c {
            Some(c) => inst.rank(s, c).expect("pair outside the feasible set") - 1,
            None => inst.prefs(s).len(),
        }
    }

    pub fn get(&self, inst: &Instance, s: usize, c: Option<usize>) -> f64 {
        match c {
            Some(c) if !inst.is_feasible_pair(s, c) => 0.0,
            _ => self.rows[s][Self::index(inst, s, c)],
        }
    }

    pub fn set(&mut self, inst: &Instance, s: usize, c: Option<usize>, v: f64) {
        let i = Self::index(inst, s, c);
        self.rows[s][i] = v;
    }

    /// Mass school `c` receives.
    pub fn column_sum(&self, inst: &Instance, c: usize) -> f64 {
        inst.applicants(c).iter().map(|&s| self.get(inst, s, Some(c))).sum()
    }

    /// Mass of `s` on schools strictly preferred to `c`.
    pub fn mass_above(&self, inst: &Instance, s: usize, c: usize) -> f64 {
        let r = inst.rank(s, c).expect("pair outside the feasible set");
        self.rows[s][..r - 1].iter().sum()
    }

    pub fn objective(&self, inst: &Instance) -> f64 {
        let mut total = 0.0;
        for s in 0..inst.n_students() {
            let row = &self.rows[s];
            let l = row.len() - 1;
            for (i, v) in row[..l].iter().enumerate() {
                total += (i + 1) as f64 * v;
            }
            total += inst.penalty(s) * row[l];
        }
        total
    }

    /// Checks row sums and expanded capacities within `tol`.
    pub fn check(&self, inst: &Instance, t: &CapacityAllocation, tol: f64) -> Result<()> {
        for (s, row) in self.rows.iter().enumerate() {
            if row.iter().any(|&v| v < -tol || v > 1.0 + tol) {
                return Err(Error::InvalidArgument(format!("student {s} has mass outside [0,1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!("student {s} has total mass {sum}")));
            }
        }
        for c in 0..inst.n_schools() {
            let load = self.column_sum(inst, c);
            if load > t.capacity(inst, c) as f64 + tol {
                return Err(Error::InvalidArgument(format!(
                    "school {c} receives mass {load} above capacity {}",
                    t.capacity(inst, c)
                )));
            }
        }
        Ok(())
    }

    /// Rounds to the nearest integral matching if every entry is within `tol` of 0 or 1.
    pub fn to_matching(&self, inst: &Instance, tol: f64) -> Option<Matching> {
        let mut assign = vec![None; self.rows.len()];
        for (s, row) in self.rows.iter().enumerate() {
            let l = row.len() - 1;
            let mut found = false;
            for (i, &v) in row.iter().enumerate() {
                if (v - 1.0).abs() <= tol {
                    if found {
                        return None;
                    }
                    found = true;
                    assign[s] = if i == l { None } else { Some(inst.prefs(s)[i]) };
                } else if v.abs() > tol {
                    return None;
                }
            }
            if !found {
                return None;
            }
        }
        Some(Matching { assign })
    }
}
