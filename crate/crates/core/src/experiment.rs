//! Benchmark grids: generate seeded markets, run a list of methods on each
//! budget, and score every result against the best proven optimum.

use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::generate_random;
use crate::model::{Instance, PenaltySpec};
use crate::solve::{solve, Method, SolveOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub students: Vec<usize>,
    pub schools: Vec<usize>,
    pub budgets: Vec<usize>,
    pub seeds: usize,
    pub first_seed: u64,
    pub complete_prefs: bool,
    pub penalty: PenaltySpec,
}

impl GridSpec {
    /// n ∈ {50,100,200}, m ∈ {5,10,15}, B ∈ {0,1,5,10}, 20 seeds, complete lists.
    pub fn desk() -> Self {
        GridSpec {
            students: vec![50, 100, 200],
            schools: vec![5, 10, 15],
            budgets: vec![0, 1, 5, 10],
            seeds: 20,
            first_seed: 0,
            complete_prefs: true,
            penalty: PenaltySpec::Access,
        }
    }

    /// Every generated market, in output order. Cells with `n < m` are skipped.
    pub fn instances(&self) -> Result<Vec<(String, Instance)>> {
        let mut out = Vec::new();
        for &n in &self.students {
            for &m in &self.schools {
                if n < m {
                    continue;
                }
                for i in 0..self.seeds as u64 {
                    let seed = self.first_seed + i;
                    let inst =
                        generate_random(n, m, seed, self.complete_prefs)?.with_penalties(self.penalty.clone())?;
                    out.push((format!("n{n}_m{m}_s{seed}"), inst));
                }
            }
        }
        Ok(out)
    }
}

fn list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad value '{x}' for {key}"))))
        .collect()
}

/// `desk`, or `;`-separated `key=value` fields over the desk defaults:
/// `n=50,100;m=5;B=0,1;seeds=5;seed0=100;prefs=partial;penalty=improve`.
impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut g = GridSpec::desk();
        let s = s.trim();
        if s == "desk" || s.is_empty() {
            return Ok(g);
        }
        for field in s.split(';').filter(|f| !f.trim().is_empty()) {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("grid field '{field}' is not key=value")))?;
            let (k, v) = (k.trim(), v.trim());
            let bad = || Error::InvalidArgument(format!("bad value '{v}' for {k}"));
            match k {
                "n" => g.students = list(k, v)?,
                "m" => g.schools = list(k, v)?,
                "B" | "b" => g.budgets = list(k, v)?,
                "seeds" => g.seeds = v.parse().map_err(|_| bad())?,
                "seed0" => g.first_seed = v.parse().map_err(|_| bad())?,
                "prefs" => {
                    g.complete_prefs = match v {
                        "complete" => true,
                        "partial" => false,
                        _ => return Err(bad()),
                    }
                }
                "penalty" => g.penalty = PenaltySpec::parse_mode(v)?,
                _ => return Err(Error::InvalidArgument(format!("unknown grid key '{k}'"))),
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance_id: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "B")]
    pub budget: usize,
    pub method: String,
    /// Empty when the method failed.
    pub objective: Option<f64>,
    /// `(value − opt) / opt` against the best optimum proven by an exact method on this cell.
    pub gap_vs_best_exact: Option<f64>,
    pub time_ms: f64,
    pub iterations: usize,
    pub cuts_added: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOptions {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Worker threads; 0 or 1 runs inline.
    pub jobs: usize,
}

/// Rows for one market at one budget, with gaps filled in.
pub fn run_cell(id: &str, inst: &Instance, budget: usize, methods: &[Method], opts: &BenchOptions) -> Vec<BenchRow> {
    let solve_opts =
        SolveOptions { budget: Some(budget), time_limit: opts.time_limit, node_limit: opts.node_limit, trace: false };
    let mut rows = Vec::with_capacity(methods.len());
    let mut opt: Option<f64> = None;
    for &method in methods {
        let (objective, time_ms, iterations, cuts_added) = match solve(inst, method, &solve_opts) {
            Ok(out) => {
                if method.is_exact() && out.optimal {
                    let v = out.solution.objective;
                    opt = Some(opt.map_or(v, |o: f64| o.min(v)));
                }
                (Some(out.solution.objective), out.elapsed.as_secs_f64() * 1e3, out.iterations, out.cuts_added)
            }
            Err(_) => (None, 0.0, 0, 0),
        };
        rows.push(BenchRow {
            instance_id: id.to_string(),
            n: inst.n_students(),
            m: inst.n_schools(),
            budget,
            method: method.name().to_string(),
            objective,
            gap_vs_best_exact: None,
            time_ms,
            iterations,
            cuts_added,
        });
    }
    if let Some(opt) = opt {
        for r in &mut rows {
            r.gap_vs_best_exact = r.objective.and_then(|v| gap(v, opt));
        }
    }
    rows
}

/// `(heur − opt) / opt`; undefined at a zero optimum unless both are zero.
pub fn gap(value: f64, opt: f64) -> Option<f64> {
    if opt.abs() > 1e-12 {
        Some((value - opt) / opt)
    } else if (value - opt).abs() <= 1e-12 {
        Some(0.0)
    } else {
        None
    }
}

/// Runs the whole grid. Row order depends only on the spec and the method list.
pub fn run_grid(spec: &GridSpec, methods: &[Method], opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let instances = spec.instances()?;
    let cells: Vec<(usize, usize)> =
        (0..instances.len()).flat_map(|i| spec.budgets.iter().map(move |&b| (i, b))).collect();
    let results: Mutex<Vec<Option<Vec<BenchRow>>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let work = || loop {
        let k = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(i, b)) = cells.get(k) else { break };
        let (id, inst) = &instances[i];
        let rows = run_cell(id, inst, b, methods, opts);
        results.lock().expect("no worker panicked")[k] = Some(rows);
    };
    if opts.jobs <= 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..opts.jobs {
                s.spawn(work);
            }
        });
    }
    Ok(results.into_inner().expect("no worker panicked").into_iter().flatten().flatten().collect())
}

pub fn write_csv(rows: &[BenchRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::io("csv output", e))?;
    Ok(())
}

pub fn read_csv(input: impl std::io::Read) -> Result<Vec<BenchRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { (v[k - 1] + v[k]) / 2.0 })
}
