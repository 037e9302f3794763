//! The cutting-plane loop: solve the main program, run DA on its allocation,
//! separate combs, repeat until no comb is violated.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use crate::combs::{separate, Comb};
use crate::error::{Error, Result};
use crate::formulations::{build_bbcap_main, initial_cut_pool};
use crate::heuristics::greedy;
use crate::lp::{solve_mip, MipOptions, MipStatus};
use crate::matching::{da_student_optimal, objective_value};
use crate::model::{CapacityAllocation, Instance, Matching};

#[derive(Debug, Clone)]
pub struct CpmOptions {
    /// Seed the pool with the combs of the matching without extra seats.
    pub initial_pool: bool,
    /// Start from the greedy allocation and only ask the main program for
    /// solutions that beat the best stable matching seen so far. When it has
    /// none, that matching is optimal. Off means the loop as originally stated.
    pub incumbent_cutoff: bool,
    pub mip: MipOptions,
    pub max_iterations: Option<usize>,
}

impl Default for CpmOptions {
    fn default() -> Self {
        CpmOptions { initial_pool: true, incumbent_cutoff: true, mip: MipOptions::default(), max_iterations: None }
    }
}

impl CpmOptions {
    /// The plain loop: no seeded pool, no cutoff.
    pub fn plain() -> Self {
        CpmOptions { initial_pool: false, incumbent_cutoff: false, ..Default::default() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CpmStats {
    pub iterations: usize,
    pub cuts_added: usize,
    pub mp_solve_time: Duration,
    pub separation_time: Duration,
    pub final_objective: f64,
    /// Main-program optimum per iteration.
    pub mp_bounds: Vec<f64>,
    /// Cuts added per iteration.
    pub cuts_per_iteration: Vec<usize>,
    pub nodes: usize,
    /// False when a MIP limit or the iteration cap stopped the loop.
    pub optimal: bool,
}

impl CpmStats {
    /// CSV with header `iteration,cuts_added,mp_bound`.
    pub fn write_trace(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "iteration,cuts_added,mp_bound")?;
        for (i, (b, c)) in self.mp_bounds.iter().zip(&self.cuts_per_iteration).enumerate() {
            writeln!(out, "{},{c},{b}", i + 1)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CpmResult {
    pub matching: Matching,
    pub allocation: CapacityAllocation,
    pub stats: CpmStats,
}

pub fn solve_cpm(inst: &Instance, budget: usize, opts: &CpmOptions) -> Result<CpmResult> {
    let start = Instant::now();
    let mut pool: BTreeSet<Comb> = if opts.initial_pool { initial_cut_pool(inst) } else { BTreeSet::new() };
    let mut stats = CpmStats::default();
    let (mut best_mu, mut best_t) = if opts.incumbent_cutoff {
        let g = greedy(inst, budget);
        (g.matching, g.allocation)
    } else {
        let t = CapacityAllocation::zero(inst.n_schools());
        (da_student_optimal(inst, &t), t)
    };
    let mut best = objective_value(inst, &best_mu);
    // with integral penalties every objective is an integer, so only improvements by 1 count
    let step = if inst.penalties().iter().all(|p| p.fract() == 0.0) { 1.0 } else { 1e-6 };
    let finish = |stats: &mut CpmStats, optimal: bool, mu: Matching, t: CapacityAllocation, value: f64| {
        stats.optimal = optimal;
        stats.final_objective = value;
        CpmResult { matching: mu, allocation: t, stats: std::mem::take(stats) }
    };
    loop {
        let mut mip = opts.mip.clone();
        if let Some(limit) = opts.mip.time_limit {
            mip.time_limit = Some(limit.saturating_sub(start.elapsed()));
        }
        if opts.incumbent_cutoff {
            mip.cutoff = Some(best - step);
        }
        let clock = Instant::now();
        let (model, map) = build_bbcap_main(inst, budget, &pool)?;
        let sol = solve_mip(&model, &mip)?;
        stats.mp_solve_time += clock.elapsed();
        stats.iterations += 1;
        stats.nodes += sol.nodes;
        match sol.status {
            MipStatus::Optimal => {}
            MipStatus::LimitReached if sol.has_incumbent() => {}
            MipStatus::LimitReached => return Ok(finish(&mut stats, false, best_mu, best_t, best)),
            MipStatus::Cutoff => {
                // nothing beats the incumbent
                stats.mp_bounds.push(best);
                stats.cuts_per_iteration.push(0);
                return Ok(finish(&mut stats, true, best_mu, best_t, best));
            }
            MipStatus::Infeasible | MipStatus::Unbounded => {
                return Err(Error::Solver(format!("main program is {:?}", sol.status)))
            }
        }
        stats.mp_bounds.push(sol.bound);

        let t = map.allocation(&sol.values);
        let x = map.assignment(inst, &sol.values).snapped(opts.mip.tol.int);
        let mu = da_student_optimal(inst, &t);
        let clock = Instant::now();
        let cuts = separate(inst, &x, &t, &mu);
        stats.separation_time += clock.elapsed();

        let fresh: Vec<Comb> = cuts.into_iter().filter(|c| !pool.contains(c)).collect();
        stats.cuts_per_iteration.push(fresh.len());
        stats.cuts_added += fresh.len();
        let value = objective_value(inst, &mu);
        if value < best || (!opts.incumbent_cutoff && fresh.is_empty()) {
            best = value;
            best_mu = mu;
            best_t = t;
        }
        let limited =
            sol.status == MipStatus::LimitReached || opts.max_iterations.is_some_and(|n| stats.iterations >= n);
        if fresh.is_empty() || limited {
            let optimal = fresh.is_empty() && sol.status == MipStatus::Optimal;
            return Ok(finish(&mut stats, optimal, best_mu, best_t, best));
        }
        pool.extend(fresh);
    }
}
