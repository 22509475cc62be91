//! Piecewise-constant diffusion with a jump at 1/2: dBN should move a
//! breakpoint onto the interface, whatever the contrast.
use ritz_dbn::{
    dbn_run, make_problem, relative_h1_error, solve_coefficients, uniform_breakpoints, ProblemId, ShallowModel,
    SolverConfig,
};

fn main() -> ritz_dbn::Result<()> {
    let config = SolverConfig { gamma: 1e11, max_iters: 500, fixed_budget: true, ..SolverConfig::default() };
    let b0 = uniform_breakpoints(14);
    for k in [1e1, 1e3, 1e6] {
        let problem = make_problem(&ProblemId::Interface { k })?;
        let c0 = solve_coefficients(&b0, &problem, &config)?;
        let e0 = relative_h1_error(&ShallowModel::new(0.0, b0.clone(), c0)?, &problem)?;
        let run = dbn_run(&problem, &config, &b0)?;
        let e = relative_h1_error(&run.model, &problem)?;
        let closest = run.model.breakpoints().iter().map(|b| (b - 0.5).abs()).fold(f64::INFINITY, f64::min);
        println!("k = {k:>7.0e}: e_n {e0:.4} -> {e:.4}, nearest breakpoint to 1/2 at distance {closest:.1e}");
    }
    Ok(())
}
