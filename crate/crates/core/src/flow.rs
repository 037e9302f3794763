//! Min-cost flow by successive shortest paths, and the stability-free
//! relaxation of the seat-allocation problem as a flow network.
//!
//! Arc costs may be any finite rationals; they are scaled to integers by a
//! common denominator so shortest-path comparisons are exact.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{CapacityAllocation, FractionalAssignment, Instance, Matching};

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cap: i64,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub arcs: Vec<Arc>,
    /// Net supply per node; positive at sources, negative at sinks.
    pub supplies: Vec<i64>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork { nodes, arcs: Vec::new(), supplies: vec![0; nodes] }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        self.arcs.push(Arc { from, to, cap, cost });
        self.arcs.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub flow: Vec<i64>,
    pub cost: f64,
}

/// Largest denominator tried when reading a cost as a fraction.
const MAX_DENOM: i64 = 1_000_000;

/// Best rational approximation `p/q` of `v` with `q ≤ MAX_DENOM`, by continued fractions.
fn denominator(v: f64) -> i64 {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut x = v.abs();
    for _ in 0..64 {
        let a = x.floor();
        let a_i = a as i64;
        let (h2, k2) = (a_i.saturating_mul(h1).saturating_add(h0), a_i.saturating_mul(k1).saturating_add(k0));
        if k2 > MAX_DENOM {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64) / (k1 as f64) - v.abs()).abs() <= 1e-9 * v.abs().max(1.0) {
            break;
        }
        let frac = x - a;
        if frac < 1e-12 {
            break;
        }
        x = 1.0 / frac;
    }
    k1.max(1)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Common denominator of all arc costs.
fn cost_scale(arcs: &[Arc]) -> Result<i64> {
    let mut scale = 1i64;
    for a in arcs {
        let d = denominator(a.cost);
        scale = scale / gcd(scale, d) * d;
        if scale > 1_000_000_000 {
            return Err(Error::InvalidArgument("arc costs have no common denominator below 1e9".into()));
        }
    }
    Ok(scale)
}

struct Residual {
    head: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn add(&mut self, u: usize, v: usize, cap: i64, cost: i64) {
        let e = self.head.len();
        self.head.extend([v, u]);
        self.cap.extend([cap, 0]);
        self.cost.extend([cost, -cost]);
        self.adj[u].push(e);
        self.adj[v].push(e + 1);
    }
}

/// Min-cost flow meeting every supply exactly.
pub fn solve_mcf(net: &FlowNetwork) -> Result<FlowSolution> {
    if net.supplies.len() != net.nodes {
        return Err(Error::InvalidArgument("one supply per node required".into()));
    }
    if net.supplies.iter().sum::<i64>() != 0 {
        return Err(Error::InfeasibleFlow("supplies do not balance".into()));
    }
    for a in &net.arcs {
        if a.from >= net.nodes || a.to >= net.nodes || a.cap < 0 || !a.cost.is_finite() {
            return Err(Error::InvalidArgument(format!("bad arc {a:?}")));
        }
    }
    let scale = cost_scale(&net.arcs)?;

    let s = net.nodes;
    let t = net.nodes + 1;
    let total = net.nodes + 2;
    let mut g = Residual { head: Vec::new(), cap: Vec::new(), cost: Vec::new(), adj: vec![Vec::new(); total] };
    for a in &net.arcs {
        g.add(a.from, a.to, a.cap, (a.cost * scale as f64).round() as i64);
    }
    let mut required = 0;
    for (v, &b) in net.supplies.iter().enumerate() {
        if b > 0 {
            g.add(s, v, b, 0);
            required += b;
        } else if b < 0 {
            g.add(v, t, -b, 0);
        }
    }

    let inf = i64::MAX / 4;
    let mut pot = bellman_ford(&g, s, total, inf)?;
    let mut sent = 0;
    let mut dist = vec![inf; total];
    let mut prev = vec![usize::MAX; total];
    let mut done = vec![false; total];
    while sent < required {
        dist.fill(inf);
        prev.fill(usize::MAX);
        done.fill(false);
        dist[s] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, s)));
        let mut visited = Vec::new();
        while let Some(Reverse((d, u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            visited.push(u);
            if u == t {
                break;
            }
            for &e in &g.adj[u] {
                if g.cap[e] == 0 {
                    continue;
                }
                let v = g.head[e];
                let nd = d + g.cost[e] + pot[u] - pot[v];
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = e;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        if !done[t] {
            return Err(Error::InfeasibleFlow(format!("only {sent} of {required} units can be routed")));
        }
        for &v in &visited {
            pot[v] += dist[v] - dist[t];
        }
        let mut push = required - sent;
        let mut v = t;
        while v != s {
            let e = prev[v];
            push = push.min(g.cap[e]);
            v = g.head[e ^ 1];
        }
        let mut v = t;
        while v != s {
            let e = prev[v];
            g.cap[e] -= push;
            g.cap[e ^ 1] += push;
            v = g.head[e ^ 1];
        }
        sent += push;
    }

    // optimality certificate: no residual arc with negative reduced cost
    let reachable = reach(&g, s, total);
    for u in 0..total {
        if !reachable[u] {
            continue;
        }
        for &e in &g.adj[u] {
            let v = g.head[e];
            if g.cap[e] > 0 && g.cost[e] + pot[u] - pot[v] < 0 {
                return Err(Error::Solver("min-cost flow failed its reduced-cost check".into()));
            }
        }
    }

    let flow: Vec<i64> = (0..net.arcs.len()).map(|i| g.cap[2 * i + 1]).collect();
    let int_cost: i64 = (0..net.arcs.len()).map(|i| flow[i] * g.cost[2 * i]).sum();
    Ok(FlowSolution { flow, cost: int_cost as f64 / scale as f64 })
}

fn reach(g: &Residual, s: usize, total: usize) -> Vec<bool> {
    let mut seen = vec![false; total];
    let mut stack = vec![s];
    seen[s] = true;
    while let Some(u) = stack.pop() {
        for &e in &g.adj[u] {
            let v = g.head[e];
            if g.cap[e] > 0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Shortest distances from `s` over arcs with residual capacity (queue-based Bellman–Ford).
fn bellman_ford(g: &Residual, s: usize, total: usize, inf: i64) -> Result<Vec<i64>> {
    let mut dist = vec![inf; total];
    let mut in_queue = vec![false; total];
    let mut relax_count = vec![0usize; total];
    let mut queue = VecDeque::new();
    dist[s] = 0;
    queue.push_back(s);
    in_queue[s] = true;
    while let Some(u) = queue.pop_front() {
        in_queue[u] = false;
        for &e in &g.adj[u] {
            if g.cap[e] == 0 {
                continue;
            }
            let v = g.head[e];
            let nd = dist[u] + g.cost[e];
            if nd < dist[v] {
                dist[v] = nd;
                if !in_queue[v] {
                    relax_count[v] += 1;
                    if relax_count[v] > total {
                        return Err(Error::InvalidArgument("negative-cost cycle in flow network".into()));
                    }
                    in_queue[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    for d in dist.iter_mut() {
        if *d == inf {
            *d = 0;
        }
    }
    Ok(dist)
}

/// Arc indices needed to read a relaxed solution back from a flow.
#[derive(Debug, Clone)]
pub struct RelaxedMap {
    /// `pair_arc[s][i]`: arc from student `s` to their `i`-th school; the last entry is the outside option.
    pub pair_arc: Vec<Vec<usize>>,
    pub budget_arc: Vec<usize>,
}

/// Flow network whose min-cost flows are optimal assignments with seat allocation and no stability.
pub fn build_relaxed_network(inst: &Instance, budget: usize) -> (FlowNetwork, RelaxedMap) {
    let n = inst.n_students();
    let m = inst.n_schools();
    let source = 0;
    let student = |s: usize| 1 + s;
    let school = |c: usize| 1 + n + c;
    let empty = 1 + n + m;
    let pool = empty + 1;
    let sink = pool + 1;
    let mut net = FlowNetwork::new(sink + 1);
    net.supplies[source] = n as i64;
    net.supplies[sink] = -(n as i64);

    let mut pair_arc = Vec::with_capacity(n);
    for s in 0..n {
        net.add_arc(source, student(s), 1, 0.0);
        let mut arcs: Vec<usize> = inst
            .prefs(s)
            .iter()
            .enumerate()
            .map(|(i, &c)| net.add_arc(student(s), school(c), 1, (i + 1) as f64))
            .collect();
        arcs.push(net.add_arc(student(s), empty, 1, inst.penalty(s)));
        pair_arc.push(arcs);
    }
    let mut budget_arc = Vec::with_capacity(m);
    for c in 0..m {
        net.add_arc(school(c), sink, inst.capacity(c) as i64, 0.0);
        budget_arc.push(net.add_arc(school(c), pool, inst.max_extra(c, budget) as i64, 0.0));
    }
    net.add_arc(pool, sink, budget as i64, 0.0);
    net.add_arc(empty, sink, n as i64, 0.0);
    (net, RelaxedMap { pair_arc, budget_arc })
}

/// Optimal point of the stability-free problem.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub x: FractionalAssignment,
    pub assignment: Matching,
    pub t: CapacityAllocation,
    pub objective: f64,
}

/// Solves the stability-free relaxation and decodes the flow.
///
/// Seats are read as `t_c = max(0, load_c − q_c)`, which never exceeds the
/// flow on the school's budget arc and so stays budget-feasible.
pub fn solve_relaxed(inst: &Instance, budget: usize) -> Result<RelaxedSolution> {
    let (net, map) = build_relaxed_network(inst, budget);
    let sol = solve_mcf(&net)?;
    let n = inst.n_students();
    let mut x = FractionalAssignment::zeros(inst);
    let mut assign = vec![None; n];
    let mut load = vec![0usize; inst.n_schools()];
    for s in 0..n {
        for (i, &a) in map.pair_arc[s].iter().enumerate() {
            if sol.flow[a] > 0 {
                x.rows[s][i] = 1.0;
                if i < inst.prefs(s).len() {
                    let c = inst.prefs(s)[i];
                    assign[s] = Some(c);
                    load[c] += 1;
                }
            }
        }
    }
    let t = (0..inst.n_schools()).map(|c| load[c].saturating_sub(inst.capacity(c))).collect();
    Ok(RelaxedSolution { x, assignment: Matching::new(assign), t: CapacityAllocation::new(t), objective: sol.cost })
}
