//! Command-line front end: `solve` runs one method on a catalog problem,
//! `table` reproduces the benchmark sweeps as CSV.
//!
//! Exit codes: 0 success, 1 usage error, 2 solver error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::adaptive::{adbn_solve_with, local_indicators, AdaptiveOptions, DEFAULT_N_MAX};
use crate::baselines::{afem_solve, bfgs_solve, fem_solve};
use crate::dbn::dbn_run;
use crate::error::{Result, RitzError};
use crate::linear_system::{solve_coefficients, solve_coefficients_kkt};
use crate::metrics::{fit_rate, relative_h1_error};
use crate::model::{energy, uniform_breakpoints, ShallowModel, SolverConfig};
use crate::problem::ProblemSpec;
use crate::problems::{make_problem, ProblemId};
use crate::report::{fmt_f64, fmt_opt, render_svg, write_atomic, IterationRecord, RefinementRecord, RunReport};

/// Environment variable capping the worker threads of table sweeps.
pub const THREADS_ENV: &str = "RITZ_DBN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ritz-dbn", version, about = "Shallow Ritz solver for 1D diffusion problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one method on a catalog problem.
    Solve(SolveArgs),
    /// Reproduce one of the benchmark tables as CSV.
    Table(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Dbn,
    Adbn,
    Fem,
    Afem,
    Bfgs,
    LinearOnly,
    Kkt,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Dbn => "dbn",
            Method::Adbn => "adbn",
            Method::Fem => "fem",
            Method::Afem => "afem",
            Method::Bfgs => "bfgs",
            Method::LinearOnly => "linear-only",
            Method::Kkt => "kkt",
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct SolveArgs {
    /// exp_solution | x_two_thirds | interface | manufactured:NAME
    #[arg(long)]
    pub problem: String,
    /// Contrast for the interface problem.
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long, value_enum, default_value = "dbn")]
    pub method: Method,
    /// Neurons, counting the one fixed at 0: `n - 1` breakpoints move.
    #[arg(long, default_value_t = 21)]
    pub n: usize,
    /// Initial neurons of the adaptive methods, counted like `--n`.
    #[arg(long, default_value_t = 10)]
    pub n0: usize,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Boundary penalty; defaults to 1e11 for the interface problem, else 1e4.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop dBN once the relative residual stagnates; without it the
    /// iteration budget is always used in full.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon: f64,
    #[arg(long)]
    pub refinements: Option<usize>,
    /// Neuron cap of the adaptive methods, counted like `--n`.
    #[arg(long, default_value_t = DEFAULT_N_MAX + 1)]
    pub n_max: usize,
    /// Report JSON; the iterate CSV goes next to it unless --csv is given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Leave wall-time fields empty so outputs are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, clap::Args)]
pub struct TableArgs {
    #[arg(long)]
    pub id: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_timing: bool,
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Table(a) => {
            if !(1..=4).contains(&a.id) {
                eprintln!("error: unknown table id {} (expected 1, 2, 3 or 4)", a.id);
                eprintln!("usage: ritz-dbn table --id <1|2|3|4> [--seed N] [--out FILE] [--no-timing]");
                return 1;
            }
            cmd_table(&a)
        }
    };
    match result {
        Ok(()) => 0,
        Err(RitzError::InvalidConfig(msg)) | Err(RitzError::UnknownProblem(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: ritz-dbn solve --problem <TAG> [--method M] [--n N] [--iters I] [--out FILE]");
            1
        }
        Err(e) => {
            eprintln!("solver error: {e}");
            2
        }
    }
}

/// Interior breakpoint count for a neuron count given on the command line.
fn interior(flag: &str, neurons: usize) -> Result<usize> {
    match neurons.checked_sub(1) {
        Some(n) if n >= 1 => Ok(n),
        _ => Err(RitzError::InvalidConfig(format!("{flag} must be at least 2 (it counts the neuron at 0)"))),
    }
}

fn default_gamma(id: &ProblemId) -> f64 {
    match id {
        ProblemId::Interface { .. } => 1e11,
        _ => 1e4,
    }
}

fn elapsed_ms(t0: Instant) -> f64 {
    t0.elapsed().as_secs_f64() * 1e3
}

/// Run a single solve and return its report and final model.
pub fn run_solve(args: &SolveArgs) -> Result<(RunReport, ShallowModel, ProblemSpec)> {
    let id = ProblemId::parse(&args.problem, args.k)?;
    let problem = make_problem(&id)?;
    let config = SolverConfig {
        gamma: args.gamma.unwrap_or_else(|| default_gamma(&id)),
        tau: args.tau.unwrap_or(SolverConfig::default().tau),
        fixed_budget: args.tau.is_none(),
        epsilon: args.epsilon,
        max_iters: args.iters,
        seed: args.seed,
        ..SolverConfig::default()
    };
    config.validate()?;
    let (n, n0, n_max) = (interior("--n", args.n)?, interior("--n0", args.n0)?, interior("--n-max", args.n_max)?);
    let tag = id.to_string();
    let t0 = Instant::now();
    let (mut report, model) = match args.method {
        Method::Dbn => {
            let run = dbn_run(&problem, &config, &uniform_breakpoints(n))?;
            (run.report, run.model)
        }
        Method::Adbn => {
            let cfg = SolverConfig { fixed_budget: false, ..config.clone() };
            let opts = AdaptiveOptions { n_max, max_refinements: args.refinements.unwrap_or(64) };
            let (model, report) = adbn_solve_with(&problem, &cfg, n0, &opts)?;
            (report, model)
        }
        Method::Fem => {
            let nodes: Vec<f64> =
                std::iter::once(0.0).chain(uniform_breakpoints(n)).chain(std::iter::once(1.0)).collect();
            let sol = fem_solve(&problem, &nodes)?;
            let model = sol.to_model();
            let mut report = RunReport::new(&tag, "fem", &config, &model);
            single_step(&mut report, &model, &problem, &config, elapsed_ms(t0))?;
            (report, model)
        }
        Method::Afem => {
            let (sol, report) = afem_solve(&problem, n0.max(2), args.epsilon, args.refinements.unwrap_or(16))?;
            (report, sol.to_model())
        }
        Method::Bfgs => {
            let b = uniform_breakpoints(n);
            let c = solve_coefficients(&b, &problem, &config)?;
            let model0 = ShallowModel::new(problem.alpha(), b, c)?;
            let (model, report) = bfgs_solve(&problem, &config, &model0)?;
            (report, model)
        }
        Method::LinearOnly | Method::Kkt => {
            let b = uniform_breakpoints(n);
            let c = if args.method == Method::Kkt {
                solve_coefficients_kkt(&b, &problem)?.0
            } else {
                solve_coefficients(&b, &problem, &config)?
            };
            let model = ShallowModel::new(problem.alpha(), b, c)?;
            let mut report = RunReport::new(&tag, args.method.name(), &config, &model);
            single_step(&mut report, &model, &problem, &config, elapsed_ms(t0))?;
            (report, model)
        }
    };
    report.problem = tag;
    report.method = args.method.name().to_string();
    if args.no_timing {
        report.iterations.iter_mut().for_each(|r| r.ms = 0.0);
    }
    Ok((report, model, problem))
}

fn single_step(
    report: &mut RunReport,
    model: &ShallowModel,
    problem: &ProblemSpec,
    config: &SolverConfig,
    ms: f64,
) -> Result<()> {
    let e_n = problem.exact().map(|_| relative_h1_error(model, problem)).transpose()?;
    let xi = local_indicators(model, problem).ok().map(|i| i.xi);
    report.iterations.push(IterationRecord { k: 0, energy: energy(model, problem, config)?, e_n, xi, ms });
    report.refinements.push(RefinementRecord {
        n: model.n(),
        e_n,
        xi: xi.unwrap_or(0.0),
        r: e_n.and_then(|e| fit_rate(model.n(), e).ok()),
        iterations: 1,
    });
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let (report, model, problem) = run_solve(args)?;
    let csv_path = args.csv.clone().or_else(|| args.out.as_ref().map(|p| p.with_extension("csv")));
    if let Some(out) = &args.out {
        report.save(out)?;
    }
    if let Some(path) = &csv_path {
        let mut csv = report.iterations_csv();
        if args.no_timing {
            csv = strip_last_column(&csv);
        }
        write_atomic(path, csv.as_bytes())?;
    }
    if let Some(path) = &args.svg {
        let title = format!("{} / {} (n = {})", report.problem, report.method, model.n() + 1);
        write_atomic(path, render_svg(&model, &problem, &title).as_bytes())?;
    }
    let e_n = report.final_error();
    println!(
        "problem={} method={} n={} iterations={} e_n={}",
        report.problem,
        report.method,
        model.n() + 1,
        report.iterations.len(),
        e_n.map_or("n/a".to_string(), |e| format!("{e:.6e}"))
    );
    Ok(())
}

/// Blank the trailing (timing) field of every data row.
fn strip_last_column(csv: &str) -> String {
    let mut out = String::with_capacity(csv.len());
    for (i, line) in csv.lines().enumerate() {
        if i == 0 {
            out.push_str(line);
        } else {
            let cut = line.rfind(',').map_or(line.len(), |p| p + 1);
            out.push_str(&line[..cut]);
        }
        out.push('\n');
    }
    out
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| RitzError::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| RitzError::InvalidConfig(e.to_string()))
}

fn cmd_table(args: &TableArgs) -> Result<()> {
    let pool = thread_pool()?;
    let csv = pool.install(|| table_csv(args.id, args.seed, !args.no_timing))?;
    match &args.out {
        Some(path) => write_atomic(path, csv.as_bytes()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// One table as CSV. Sizes follow the benchmark convention, where `n`
/// counts the fixed neuron at 0 as well, i.e. `n - 1` interior
/// breakpoints; rates use that same `n`.
pub fn table_csv(id: u32, seed: u64, timing: bool) -> Result<String> {
    match id {
        1 => table1(seed, timing),
        2 => table2(seed, timing),
        3 => table3(seed, timing),
        4 => table4(seed, timing),
        other => Err(RitzError::InvalidConfig(format!("unknown table id {other}"))),
    }
}

fn ms_field(timing: bool, ms: f64) -> String {
    if timing {
        format!("{ms:.3}")
    } else {
        String::new()
    }
}

fn dbn_error(problem: &ProblemSpec, config: &SolverConfig, n_label: usize) -> Result<f64> {
    let run = dbn_run(problem, config, &uniform_breakpoints(n_label - 1))?;
    relative_h1_error(&run.model, problem)
}

fn table1(seed: u64, timing: bool) -> Result<String> {
    let problem = make_problem(&ProblemId::ExpSolution)?;
    let config = SolverConfig { max_iters: 1000, fixed_budget: true, seed, ..SolverConfig::default() };
    let sizes: Vec<usize> = (60..=330).step_by(30).collect();
    let rows: Vec<Result<(usize, f64, f64)>> = sizes
        .par_iter()
        .map(|&n| {
            let t0 = Instant::now();
            Ok((n, dbn_error(&problem, &config, n)?, elapsed_ms(t0)))
        })
        .collect();
    let mut csv = String::from("n,e_n,r,seed,wall_ms\n");
    for row in rows {
        let (n, e, ms) = row?;
        let r = fit_rate(n, e).ok();
        let _ = writeln!(csv, "{n},{},{},{seed},{}", fmt_f64(e), fmt_opt(r), ms_field(timing, ms));
    }
    Ok(csv)
}

/// Rows of the `method,n,e_n,xi,r,seed,wall_ms` tables.
struct MethodTable {
    csv: String,
    seed: u64,
    timing: bool,
}

impl MethodTable {
    fn new(seed: u64, timing: bool) -> Self {
        Self { csv: String::from("method,n,e_n,xi,r,seed,wall_ms\n"), seed, timing }
    }

    fn row(&mut self, method: &str, n_label: usize, e: f64, xi: f64, ms: f64) {
        let r = fit_rate(n_label, e).ok();
        let _ = writeln!(
            self.csv,
            "{method},{n_label},{},{},{},{},{}",
            fmt_f64(e),
            fmt_f64(xi),
            fmt_opt(r),
            self.seed,
            ms_field(self.timing, ms)
        );
    }

    /// One row per refinement round of an adaptive report.
    fn adaptive(&mut self, method: &str, report: &RunReport, ms: f64) {
        for r in &report.refinements {
            if let Some(e) = r.e_n {
                self.row(method, r.n + 1, e, r.xi, ms);
            }
        }
    }

    fn fixed(&mut self, method: &str, rows: Vec<Result<(usize, f64, f64, f64)>>) -> Result<()> {
        for row in rows {
            let (n, e, xi, ms) = row?;
            self.row(method, n, e, xi, ms);
        }
        Ok(())
    }
}

fn fixed_row(problem: &ProblemSpec, config: &SolverConfig, n_label: usize) -> Result<(usize, f64, f64, f64)> {
    let t0 = Instant::now();
    let run = dbn_run(problem, config, &uniform_breakpoints(n_label - 1))?;
    let e = relative_h1_error(&run.model, problem)?;
    let xi = local_indicators(&run.model, problem)?.xi;
    Ok((n_label, e, xi, elapsed_ms(t0)))
}

fn table2(seed: u64, timing: bool) -> Result<String> {
    let problem = make_problem(&ProblemId::ExpSolution)?;
    let adaptive_cfg = SolverConfig { max_iters: 1000, seed, ..SolverConfig::default() };
    let t0 = Instant::now();
    let (_, report) = adbn_solve_with(&problem, &adaptive_cfg, 19, &AdaptiveOptions::default())?;
    let mut table = MethodTable::new(seed, timing);
    table.adaptive("adaptive", &report, elapsed_ms(t0));
    // fixed networks of the two largest adaptive sizes
    let fixed_cfg = SolverConfig { max_iters: 1000, fixed_budget: true, seed, ..SolverConfig::default() };
    let sizes: Vec<usize> = report.refinements.iter().rev().take(2).rev().map(|r| r.n + 1).collect();
    table.fixed("fixed", sizes.par_iter().map(|&n| fixed_row(&problem, &fixed_cfg, n)).collect())?;
    Ok(table.csv)
}

fn table3(seed: u64, timing: bool) -> Result<String> {
    let problem = make_problem(&ProblemId::XTwoThirds)?;
    let dbn_cfg = SolverConfig { max_iters: 250, fixed_budget: true, seed, ..SolverConfig::default() };
    let mut table = MethodTable::new(seed, timing);
    table.fixed("dbn", [10usize, 14, 19, 24].par_iter().map(|&n| fixed_row(&problem, &dbn_cfg, n)).collect())?;
    let adaptive_cfg = SolverConfig { max_iters: 1000, seed, ..SolverConfig::default() };
    let t0 = Instant::now();
    let opts = AdaptiveOptions { n_max: 23, max_refinements: 3 };
    let (_, report) = adbn_solve_with(&problem, &adaptive_cfg, 9, &opts)?;
    table.adaptive("adbn", &report, elapsed_ms(t0));
    let t0 = Instant::now();
    let (_, report) = afem_solve(&problem, 9, 0.0, 16)?;
    table.adaptive("afem", &report, elapsed_ms(t0));
    Ok(table.csv)
}

fn table4(seed: u64, timing: bool) -> Result<String> {
    let config = SolverConfig { gamma: 1e11, max_iters: 500, fixed_budget: true, seed, ..SolverConfig::default() };
    let ks: Vec<i32> = (1..=8).collect();
    let rows: Vec<Result<(f64, f64, f64, f64)>> = ks
        .par_iter()
        .map(|&p| {
            let k = 10f64.powi(p);
            let problem = make_problem(&ProblemId::Interface { k })?;
            let t0 = Instant::now();
            let b = uniform_breakpoints(14);
            let c = solve_coefficients(&b, &problem, &config)?;
            let initial = relative_h1_error(&ShallowModel::new(0.0, b.clone(), c)?, &problem)?;
            let run = dbn_run(&problem, &config, &b)?;
            let last = relative_h1_error(&run.model, &problem)?;
            Ok((k, initial, last, elapsed_ms(t0)))
        })
        .collect();
    let mut csv = String::from("k,e_n_initial,e_n_dbn,seed,wall_ms\n");
    for row in rows {
        let (k, initial, last, ms) = row?;
        let _ = writeln!(csv, "{k:e},{},{},{seed},{}", fmt_f64(initial), fmt_f64(last), ms_field(timing, ms));
    }
    Ok(csv)
}
