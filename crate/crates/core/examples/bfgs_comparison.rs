//! Same budget, same start: dBN against a generic quasi-Newton method on
//! all parameters.
use ritz_dbn::{
    bfgs_solve, dbn_solve, make_problem, relative_h1_error, solve_coefficients, uniform_breakpoints, ProblemId,
    ShallowModel, SolverConfig,
};

fn main() -> ritz_dbn::Result<()> {
    let problem = make_problem(&ProblemId::ExpSolution)?;
    let config = SolverConfig { max_iters: 200, fixed_budget: true, ..SolverConfig::default() };
    let b = uniform_breakpoints(29);
    let c = solve_coefficients(&b, &problem, &config)?;
    let start = ShallowModel::new(problem.alpha(), b.clone(), c)?;
    println!("initial e_n = {:.4e}", relative_h1_error(&start, &problem)?);

    let (bfgs, bfgs_report) = bfgs_solve(&problem, &config, &start)?;
    let (dbn, _) = dbn_solve(&problem, &config, &b)?;
    let (eb, ed) = (relative_h1_error(&bfgs, &problem)?, relative_h1_error(&dbn, &problem)?);
    println!("BFGS: e_n = {eb:.4e} after {} iterations", bfgs_report.iterations.len());
    println!("dBN:  e_n = {ed:.4e} after {} iterations", config.max_iters);
    println!("ratio dBN / BFGS = {:.3}", ed / eb);
    Ok(())
}
