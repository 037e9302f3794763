use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use capexp::experiment::{run_grid, write_csv, BenchOptions, GridSpec};
use capexp::generate::generate_random;
use capexp::io::{load_bounds, load_instance, save_instance, Solution};
use capexp::solve::{solve, verify, Method, SolveOptions};
use capexp::PenaltySpec;

#[derive(Parser)]
#[command(name = "capexp", version, about = "Seat allocation under stable matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random market.
    Generate {
        #[arg(long)]
        students: usize,
        #[arg(long)]
        schools: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        budget: usize,
        /// access, improve, min_cardinality or constant:<v>
        #[arg(long, default_value = "access")]
        penalty: String,
        /// Truncate each list to a random length instead of ranking every school.
        #[arg(long)]
        partial_prefs: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one market and write the solution.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        method: Method,
        /// Overrides the budget stored in the instance.
        #[arg(long)]
        budget: Option<usize>,
        /// JSON array of per-school bounds, null for none.
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration CSV of the cutting-plane loop (cpm only).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        limits: Limits,
    },
    /// Run methods over a grid of generated markets and write one CSV row per run.
    Bench {
        /// `desk` or overrides such as `n=50,100;m=5;B=0,5;seeds=3`.
        #[arg(long, default_value = "desk")]
        grid: GridSpec,
        #[arg(long, value_delimiter = ',', default_value = "oracle,greedy,lph")]
        methods: Vec<Method>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        limits: Limits,
    },
    /// Re-check a solution; prints each violation and fails if there is any.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Defaults to the budget recorded in the solution, then the instance's.
        #[arg(long)]
        budget: Option<usize>,
    },
}

#[derive(Args)]
struct Limits {
    /// Wall-clock limit for the MIP solves, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Branch-and-bound node limit per MIP solve.
    #[arg(long)]
    node_limit: Option<usize>,
}

impl Limits {
    fn time(&self) -> Result<Option<Duration>> {
        self.time_limit
            .map(|s| Duration::try_from_secs_f64(s).context("--time-limit must be a nonnegative number of seconds"))
            .transpose()
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { students, schools, seed, budget, penalty, partial_prefs, out } => {
            let spec = PenaltySpec::parse_mode(&penalty)?;
            let inst =
                generate_random(students, schools, seed, !partial_prefs)?.with_budget(budget).with_penalties(spec)?;
            save_instance(&inst, &out)?;
        }
        Command::Solve { instance, method, budget, bounds, out, trace, limits } => {
            let mut inst = load_instance(&instance)?;
            if let Some(path) = bounds {
                inst = inst.with_bounds(load_bounds(&path)?)?;
            }
            if trace.is_some() && method != Method::Cpm {
                bail!("--trace is only produced by the cpm method");
            }
            let opts = SolveOptions {
                budget,
                time_limit: limits.time()?,
                node_limit: limits.node_limit,
                trace: trace.is_some(),
            };
            let outcome = solve(&inst, method, &opts)?;
            outcome.solution.save(&out)?;
            if let (Some(path), Some(text)) = (trace, &outcome.trace) {
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            eprintln!(
                "{method}: objective {} in {:.1} ms{}",
                outcome.solution.objective,
                outcome.elapsed.as_secs_f64() * 1e3,
                if outcome.optimal || !method.is_exact() { "" } else { " (limit reached, not proven optimal)" }
            );
            if method.is_exact() && !outcome.optimal {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Bench { grid, methods, out, jobs, limits } => {
            let opts = BenchOptions { time_limit: limits.time()?, node_limit: limits.node_limit, jobs };
            let rows = run_grid(&grid, &methods, &opts)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_csv(&rows, BufWriter::new(file))?;
            eprintln!("{} rows written to {}", rows.len(), out.display());
        }
        Command::Verify { instance, solution, budget } => {
            let inst = load_instance(&instance)?;
            let sol = Solution::load(&solution)?;
            let recorded = sol.stats.get("budget").and_then(|b| b.as_u64()).map(|b| b as usize);
            let budget = budget.or(recorded).unwrap_or(inst.budget());
            let problems = verify(&inst, &sol, budget);
            if problems.is_empty() {
                println!("ok");
            } else {
                for p in &problems {
                    println!("{p}");
                }
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // 2 is reserved for limit-stopped solves
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
