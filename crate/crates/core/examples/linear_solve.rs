//! Solve for the outer-layer coefficients with breakpoints held fixed,
//! comparing the penalized system against the exact constrained one.
use ritz_dbn::{
    relative_h1_error, solve_coefficients, solve_coefficients_kkt, uniform_breakpoints, make_problem, ProblemId,
    ShallowModel, SolverConfig,
};

fn main() -> ritz_dbn::Result<()> {
    let problem = make_problem(&ProblemId::XTwoThirds)?;
    let b = uniform_breakpoints(40);
    let (c_kkt, lambda) = solve_coefficients_kkt(&b, &problem)?;
    let exact = ShallowModel::new(problem.alpha(), b.clone(), c_kkt.clone())?;
    println!("constrained: e_n = {:.6e}, multiplier = {lambda:.4e}", relative_h1_error(&exact, &problem)?);

    for gamma in [1e2, 1e4, 1e6, 1e8] {
        let config = SolverConfig { gamma, ..SolverConfig::default() };
        let c = solve_coefficients(&b, &problem, &config)?;
        let diff = c.iter().zip(&c_kkt).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let m = ShallowModel::new(problem.alpha(), b.clone(), c)?;
        println!(
            "gamma = {gamma:>7.0e}: u(1) - beta = {:+.3e}, max |c - c_kkt| = {diff:.3e}",
            m.value_at_one() - problem.beta()
        );
    }
    Ok(())
}
