use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.lhs(values);
        match self.rel {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A linear minimization model over bounded variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub vars: Vec<Variable>,
    pub cons: Vec<Constraint>,
    /// Objective coefficient per variable.
    pub obj: Vec<f64>,
    pub obj_const: f64,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, integer: bool, cost: f64) -> VarId {
        self.vars.push(Variable { name: name.into(), lb, ub, integer });
        self.obj.push(cost);
        self.vars.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        rel: Relation,
        rhs: f64,
    ) -> usize {
        self.cons.push(Constraint { name: name.into(), terms, rel, rhs });
        self.cons.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_cons(&self) -> usize {
        self.cons.len()
    }

    pub fn n_nonzeros(&self) -> usize {
        self.cons.iter().map(|c| c.terms.len()).sum()
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    pub fn objective(&self, values: &[f64]) -> f64 {
        self.obj_const + self.obj.iter().zip(values).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.vars.iter().zip(values) {
            worst = worst.max(v.lb - x).max(x - v.ub);
        }
        for c in &self.cons {
            worst = worst.max(c.violation(values));
        }
        worst
    }

    /// Integrality flags cleared, everything else kept.
    pub fn relax(&self) -> Model {
        let mut m = self.clone();
        for v in &mut m.vars {
            v.integer = false;
        }
        m
    }

    /// Copy of the model with extra rows appended.
    pub fn add_constraints(&self, cuts: impl IntoIterator<Item = Constraint>) -> Model {
        let mut m = self.clone();
        m.cons.extend(cuts);
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.obj.len() != self.vars.len() {
            return Err(Error::InvalidArgument("objective length differs from variable count".into()));
        }
        for (j, v) in self.vars.iter().enumerate() {
            if !v.lb.is_finite() || v.ub.is_nan() || v.ub < v.lb {
                return Err(Error::InvalidArgument(format!(
                    "variable {j} ({}) has unsupported bounds [{}, {}]",
                    v.name, v.lb, v.ub
                )));
            }
            if v.integer && !v.ub.is_finite() {
                return Err(Error::InvalidArgument(format!("integer variable {} needs a finite upper bound", v.name)));
            }
        }
        for c in &self.cons {
            if !c.rhs.is_finite() {
                return Err(Error::InvalidArgument(format!("row {} has non-finite rhs", c.name)));
            }
            if let Some(&(j, _)) = c.terms.iter().find(|(j, _)| *j >= self.vars.len()) {
                return Err(Error::InvalidArgument(format!("row {} references unknown variable {j}", c.name)));
            }
        }
        Ok(())
    }

    /// CPLEX-style LP text.
    ///
    /// Sections `Minimize`, `Subject To`, `Bounds`, `General` and `End`;
    /// variables and rows appear under their model names.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        let mut any = false;
        for (j, &c) in self.obj.iter().enumerate() {
            if c != 0.0 {
                write_term(&mut out, c, &self.vars[j].name);
                any = true;
            }
        }
        if self.obj_const != 0.0 || !any {
            write!(out, " {} {}", sign(self.obj_const), self.obj_const.abs()).unwrap();
        }
        out.push_str("\nSubject To\n");
        for (i, c) in self.cons.iter().enumerate() {
            let name = if c.name.is_empty() { format!("r{i}") } else { c.name.clone() };
            write!(out, " {name}:").unwrap();
            if c.terms.is_empty() {
                out.push_str(" 0");
            }
            for &(j, a) in &c.terms {
                write_term(&mut out, a, &self.vars[j].name);
            }
            writeln!(out, " {} {}", c.rel.symbol(), c.rhs).unwrap();
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            if v.ub.is_finite() {
                writeln!(out, " {} <= {} <= {}", v.lb, v.name, v.ub).unwrap();
            } else {
                writeln!(out, " {} >= {}", v.name, v.lb).unwrap();
            }
        }
        let ints: Vec<&str> = self.vars.iter().filter(|v| v.integer).map(|v| v.name.as_str()).collect();
        if !ints.is_empty() {
            out.push_str("General\n");
            for chunk in ints.chunks(8) {
                writeln!(out, " {}", chunk.join(" ")).unwrap();
            }
        }
        out.push_str("End\n");
        out
    }
}

fn sign(v: f64) -> char {
    if v < 0.0 {
        '-'
    } else {
        '+'
    }
}

fn write_term(out: &mut String, a: f64, name: &str) {
    if a.abs() == 1.0 {
        write!(out, " {} {name}", sign(a)).unwrap();
    } else {
        write!(out, " {} {} {name}", sign(a), a.abs()).unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_text_has_all_sections() {
        let mut m = Model::new();
        let x = m.add_var("x", 0.0, 10.0, true, 1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, false, -2.5);
        m.add_constraint("c1", vec![(x, 1.0), (y, 2.0)], Relation::Ge, 2.0);
        let text = m.to_lp_string();
        assert!(text.starts_with("Minimize\n obj: + x - 2.5 y\n"), "{text}");
        assert!(text.contains(" c1: + x + 2 y >= 2\n"));
        assert!(text.contains(" 0 <= x <= 10\n"));
        assert!(text.contains(" y >= 0\n"));
        assert!(text.contains("General\n x\n"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn relax_keeps_bounds() {
        let mut m = Model::new();
        m.add_var("x", 1.0, 3.0, true, 0.0);
        let r = m.relax();
        assert!(!r.vars[0].integer);
        assert_eq!((r.vars[0].lb, r.vars[0].ub), (1.0, 3.0));
        assert_eq!(r.relax(), r);
    }

    #[test]
    fn validate_rejects_free_and_unbounded_integers() {
        let mut m = Model::new();
        m.add_var("x", f64::NEG_INFINITY, 0.0, false, 0.0);
        assert!(m.validate().is_err());
        let mut m = Model::new();
        m.add_var("z", 0.0, f64::INFINITY, true, 0.0);
        assert!(m.validate().is_err());
    }
}
