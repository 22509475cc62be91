//! Damped block Newton on the smooth exponential problem, printing the
//! energy and error history and writing the report next to the binary.
use ritz_dbn::{dbn_run, make_problem, relative_h1_error, uniform_breakpoints, ProblemId, SolverConfig};

fn main() -> ritz_dbn::Result<()> {
    let problem = make_problem(&ProblemId::ExpSolution)?;
    let config = SolverConfig { max_iters: 300, fixed_budget: true, ..SolverConfig::default() };
    let run = dbn_run(&problem, &config, &uniform_breakpoints(59))?;

    for t in run.trace.iter().filter(|t| t.k % 30 == 0) {
        println!(
            "k = {:>3}  J = {:.10}  e_n = {:.4e}  eta = {:.3}  redistributed = {}",
            t.k,
            t.energy,
            t.e_n.unwrap_or(f64::NAN),
            t.eta,
            t.redistributed
        );
    }
    let e = relative_h1_error(&run.model, &problem)?;
    println!("final e_n = {e:.4e} with {} interior breakpoints", run.model.n());

    let out = std::env::temp_dir().join("dbn_exponential.json");
    run.report.save(&out)?;
    println!("report written to {}", out.display());
    Ok(())
}
