//! Best-bound branch and bound over the simplex engine.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::Result;
use crate::lp::model::Model;
use crate::lp::simplex::{LpSolution, LpStatus, Tolerances, WarmOutcome, WarmStart};

#[derive(Debug, Clone, Default)]
pub struct MipOptions {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Only solutions with objective at most this value are wanted.
    pub cutoff: Option<f64>,
    pub tol: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// A time or node limit stopped the search; the best incumbent (if any) and bound are reported.
    LimitReached,
    /// No feasible solution has objective at or below the cutoff.
    Cutoff,
}

#[derive(Debug, Clone)]
pub struct Incumbent {
    pub node: usize,
    pub objective: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    /// Best integral point found; empty when there is none.
    pub values: Vec<f64>,
    /// Objective of `values`, `+∞` without an incumbent.
    pub objective: f64,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub history: Vec<Incumbent>,
}

impl MipSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.values.is_empty()
    }
}

struct Node {
    bound: f64,
    id: usize,
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // reversed so the max-heap pops the smallest bound, then the oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

/// Gap below which a node cannot improve on the incumbent.
const PRUNE_TOL: f64 = 1e-7;

/// Most fractional integer variable; ties go to the lowest id.
fn branching_variable(model: &Model, values: &[f64], tol: f64) -> Option<usize> {
    let mut best = None;
    let mut best_score = tol;
    for (j, v) in model.vars.iter().enumerate() {
        if !v.integer {
            continue;
        }
        let x = values[j];
        let frac = x - x.floor();
        let score = frac.min(1.0 - frac);
        if score > best_score {
            best_score = score;
            best = Some(j);
        }
    }
    best
}

/// Solves a node LP, warm when a stored tableau is at hand.
fn solve_node(
    model: &Model,
    node: &Node,
    warm: Option<WarmStart>,
    tol: &Tolerances,
    limit: f64,
) -> Result<(Option<LpSolution>, usize, Option<WarmStart>)> {
    if let Some(mut ws) = warm {
        match ws.resolve(model, &node.lb, &node.ub, tol, limit) {
            Some(WarmOutcome::Solved(lp)) => {
                let its = lp.iterations;
                let keep = (lp.status == LpStatus::Optimal).then_some(ws);
                return Ok((Some(lp), its, keep));
            }
            Some(WarmOutcome::Cutoff { iterations, .. }) => return Ok((None, iterations, None)),
            None => {}
        }
    }
    let (lp, ws) = WarmStart::root(model, &node.lb, &node.ub, tol)?;
    let its = lp.iterations;
    Ok((Some(lp), its, ws))
}

/// Best-bound branch and bound with depth-first plunging.
///
/// After a node branches, the child on the side its value rounds to is solved
/// next from the parent's tableau; the sibling waits in the queue and later
/// restarts from the root tableau. Node LPs are re-optimized by the dual simplex.
pub fn solve_mip(model: &Model, opts: &MipOptions) -> Result<MipSolution> {
    model.validate()?;
    let start = Instant::now();
    let tol = opts.tol;
    let cutoff = opts.cutoff.unwrap_or(f64::INFINITY);
    let mut out = MipSolution {
        status: MipStatus::Infeasible,
        values: Vec::new(),
        objective: f64::INFINITY,
        bound: f64::NEG_INFINITY,
        nodes: 0,
        lp_iterations: 0,
        history: Vec::new(),
    };
    // nodes whose bound reaches this value cannot help
    let prune_at = |incumbent: f64| (incumbent - PRUNE_TOL).min(cutoff + PRUNE_TOL);

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        lb: model.vars.iter().map(|v| v.lb).collect(),
        ub: model.vars.iter().map(|v| v.ub).collect(),
    });
    let mut next_id = 1;
    let mut root_ws: Option<WarmStart> = None;
    let mut carry: Option<(Node, WarmStart)> = None;

    loop {
        let (node, warm) = match carry.take() {
            Some((node, ws)) => (node, Some(ws)),
            None => match heap.pop() {
                Some(node) => {
                    if node.bound >= prune_at(out.objective) {
                        heap.clear();
                        break;
                    }
                    let ws = root_ws.clone();
                    (node, ws)
                }
                None => break,
            },
        };
        if node.bound >= prune_at(out.objective) {
            continue;
        }
        let limit_hit =
            opts.node_limit.is_some_and(|n| out.nodes >= n) || opts.time_limit.is_some_and(|t| start.elapsed() >= t);
        if limit_hit {
            let open = heap.iter().map(|n| n.bound).fold(node.bound, f64::min);
            out.status = MipStatus::LimitReached;
            out.bound = open.min(out.objective);
            return Ok(out);
        }

        out.nodes += 1;
        let is_root = root_ws.is_none() && out.nodes == 1;
        let (lp, its, ws) = solve_node(model, &node, warm, &tol, prune_at(out.objective))?;
        out.lp_iterations += its;
        if is_root {
            root_ws = ws.clone();
        }
        let Some(lp) = lp else { continue };
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                out.status = MipStatus::Unbounded;
                out.objective = f64::NEG_INFINITY;
                out.bound = f64::NEG_INFINITY;
                return Ok(out);
            }
            LpStatus::Optimal => {}
        }
        if lp.objective >= prune_at(out.objective) {
            continue;
        }
        // reduced-cost fixing: moving an integer variable off its bound would cost more than the gap
        let gap = prune_at(out.objective) - lp.objective;
        let mut node = node;
        if gap.is_finite() {
            for (j, v) in model.vars.iter().enumerate() {
                let d = lp.reduced_costs[j];
                if !v.integer || node.lb[j] == node.ub[j] {
                    continue;
                }
                if d > gap && lp.values[j] <= node.lb[j] + tol.int {
                    node.ub[j] = (node.lb[j] + (gap / d).floor()).min(node.ub[j]);
                } else if -d > gap && lp.values[j] >= node.ub[j] - tol.int {
                    node.lb[j] = (node.ub[j] - (gap / -d).floor()).max(node.lb[j]);
                }
            }
        }
        match branching_variable(model, &lp.values, tol.int) {
            None => {
                let mut values = lp.values;
                for (j, v) in model.vars.iter().enumerate() {
                    if v.integer {
                        values[j] = values[j].round();
                    }
                }
                out.objective = model.objective(&values);
                out.values = values;
                out.history.push(Incumbent {
                    node: out.nodes,
                    objective: out.objective,
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
            Some(j) => {
                let x = lp.values[j];
                let mut down = Node { bound: lp.objective, id: next_id, lb: node.lb.clone(), ub: node.ub.clone() };
                down.ub[j] = x.floor();
                let mut up = Node { bound: lp.objective, id: next_id + 1, lb: node.lb, ub: node.ub };
                up.lb[j] = x.ceil();
                next_id += 2;
                let (dive, wait) = if x - x.floor() >= 0.5 { (up, down) } else { (down, up) };
                heap.push(wait);
                match ws {
                    Some(ws) => carry = Some((dive, ws)),
                    None => heap.push(dive),
                }
            }
        }
    }

    if out.has_incumbent() {
        out.status = MipStatus::Optimal;
        out.bound = out.objective;
    } else if cutoff.is_finite() {
        out.status = MipStatus::Cutoff;
        out.bound = cutoff;
    }
    Ok(out)
}
