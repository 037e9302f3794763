//! One entry point per solution method, and an independent checker.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde_json::{json, Map, Value};

use crate::cutting_plane::{solve_cpm, CpmOptions};
use crate::error::{Error, Result};
use crate::formulations::{build_agg_lin, build_nonagg_lin};
use crate::heuristics::{greedy, lph};
use crate::io::Solution;
use crate::lp::{solve_mip, MipOptions, MipStatus};
use crate::matching::{blocking_pairs, da_student_optimal, objective_value};
use crate::model::{CapacityAllocation, Instance};
use crate::oracle::solve_exact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Cpm,
    AggLin,
    NonAggLin,
    Greedy,
    Lph,
    Oracle,
    Da,
}

impl Method {
    pub const ALL: [Method; 7] =
        [Method::Cpm, Method::AggLin, Method::NonAggLin, Method::Greedy, Method::Lph, Method::Oracle, Method::Da];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cpm => "cpm",
            Method::AggLin => "agg-lin",
            Method::NonAggLin => "nonagg-lin",
            Method::Greedy => "greedy",
            Method::Lph => "lph",
            Method::Oracle => "oracle",
            Method::Da => "da",
        }
    }

    /// Methods whose output is a proven optimum when they finish within limits.
    pub fn is_exact(self) -> bool {
        matches!(self, Method::Cpm | Method::AggLin | Method::NonAggLin | Method::Oracle)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Overrides the instance budget.
    pub budget: Option<usize>,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Collect the cutting-plane trace CSV.
    pub trace: bool,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: Solution,
    /// False when a limit stopped an exact method early.
    pub optimal: bool,
    pub elapsed: Duration,
    pub iterations: usize,
    pub cuts_added: usize,
    pub trace: Option<String>,
}

fn mip_options(opts: &SolveOptions) -> MipOptions {
    MipOptions { time_limit: opts.time_limit, node_limit: opts.node_limit, ..Default::default() }
}

pub fn solve(inst: &Instance, method: Method, opts: &SolveOptions) -> Result<SolveOutcome> {
    let budget = opts.budget.unwrap_or(inst.budget());
    let start = Instant::now();
    let mut stats = Map::new();
    let mut optimal = method.is_exact();
    let (mut iterations, mut cuts_added) = (1, 0);
    let mut trace = None;
    let t: CapacityAllocation = match method {
        Method::Da => CapacityAllocation::zero(inst.n_schools()),
        Method::Oracle => {
            let (r, swept) = solve_exact(inst, budget)?;
            stats.insert("search".into(), json!(if swept { "exhaustive" } else { "pruned" }));
            r.allocation
        }
        Method::Greedy => {
            let r = greedy(inst, budget);
            stats.insert("trajectory".into(), json!(r.trajectory));
            r.allocation
        }
        Method::Lph => {
            let (r, bound) = lph(inst, budget)?;
            stats.insert("relaxed_objective".into(), json!(bound));
            r.allocation
        }
        Method::Cpm => {
            let cpm = CpmOptions { mip: mip_options(opts), ..Default::default() };
            let r = solve_cpm(inst, budget, &cpm)?;
            optimal = r.stats.optimal;
            iterations = r.stats.iterations;
            cuts_added = r.stats.cuts_added;
            stats.insert("mp_bounds".into(), json!(r.stats.mp_bounds));
            stats.insert("nodes".into(), json!(r.stats.nodes));
            stats.insert("mp_solve_ms".into(), json!(r.stats.mp_solve_time.as_secs_f64() * 1e3));
            stats.insert("separation_ms".into(), json!(r.stats.separation_time.as_secs_f64() * 1e3));
            if opts.trace {
                let mut buf = Vec::new();
                r.stats.write_trace(&mut buf).expect("writing to memory");
                trace = Some(String::from_utf8(buf).expect("ascii trace"));
            }
            r.allocation
        }
        Method::AggLin | Method::NonAggLin => {
            let (model, map) =
                if method == Method::AggLin { build_agg_lin(inst, budget) } else { build_nonagg_lin(inst, budget) };
            let sol = solve_mip(&model, &mip_options(opts))?;
            stats.insert("nodes".into(), json!(sol.nodes));
            stats.insert("bound".into(), json!(sol.bound));
            match sol.status {
                MipStatus::Optimal => {}
                MipStatus::LimitReached if sol.has_incumbent() => optimal = false,
                MipStatus::LimitReached => {
                    // no seats is always feasible
                    optimal = false;
                    stats.insert("fallback".into(), json!("zero allocation"));
                }
                status => return Err(Error::Solver(format!("{method} model ended {status:?}"))),
            }
            if sol.has_incumbent() {
                stats.insert("mip_objective".into(), json!(sol.objective));
                map.allocation(&sol.values)
            } else {
                CapacityAllocation::zero(inst.n_schools())
            }
        }
    };
    let matching = da_student_optimal(inst, &t);
    let objective = objective_value(inst, &matching);
    stats.insert("optimal".into(), Value::Bool(optimal));
    stats.insert("budget".into(), json!(budget));
    Ok(SolveOutcome {
        solution: Solution { t: t.t, assignment: matching.assign, objective, method: method.name().to_string(), stats },
        optimal,
        elapsed: start.elapsed(),
        iterations,
        cuts_added,
        trace,
    })
}

/// Problems with a claimed solution; empty when it is feasible, stable and correctly scored.
pub fn verify(inst: &Instance, sol: &Solution, budget: usize) -> Vec<String> {
    let mut out = Vec::new();
    let t = sol.allocation();
    if let Err(e) = t.check(inst, budget) {
        out.push(format!("allocation: {e}"));
        return out;
    }
    let mu = sol.matching();
    if let Err(e) = mu.check(inst, &t) {
        out.push(format!("matching: {e}"));
        return out;
    }
    for (s, c) in blocking_pairs(inst, &t, &mu) {
        out.push(format!("blocking pair: student {s} and school {c}"));
    }
    let objective = objective_value(inst, &mu);
    if (objective - sol.objective).abs() > 1e-6 {
        out.push(format!("objective: claimed {} but the matching scores {objective}", sol.objective));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn every_method_verifies_on_b1() {
        let inst = fixtures::one_seat();
        for m in Method::ALL {
            let out = solve(&inst, m, &SolveOptions::default()).unwrap();
            assert!(verify(&inst, &out.solution, 1).is_empty(), "{m}");
            if m.is_exact() {
                assert_eq!(out.solution.objective, 5.0, "{m}");
                assert!(out.optimal);
            }
        }
    }

    #[test]
    fn corrupted_assignment_is_caught() {
        let inst = fixtures::one_seat();
        let mut sol = solve(&inst, Method::Da, &SolveOptions::default()).unwrap().solution;
        sol.assignment.swap(0, 1);
        let problems = verify(&inst, &sol, 1);
        assert!(problems.iter().any(|p| p.starts_with("blocking pair")), "{problems:?}");
    }

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("simplex".parse::<Method>().is_err());
    }
}
