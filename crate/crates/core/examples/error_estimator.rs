//! Recovery-based a posteriori indicators: compare the estimate with the
//! true error and show which elements the average strategy marks.
use ritz_dbn::{
    local_indicators, make_problem, mark, relative_h1_error, solve_coefficients, uniform_breakpoints, ProblemId,
    ShallowModel, SolverConfig,
};

fn main() -> ritz_dbn::Result<()> {
    let problem = make_problem(&ProblemId::XTwoThirds)?;
    let config = SolverConfig::default();
    for n in [4, 8, 16, 32, 64] {
        let b = uniform_breakpoints(n);
        let c = solve_coefficients(&b, &problem, &config)?;
        let model = ShallowModel::new(problem.alpha(), b, c)?;
        let ind = local_indicators(&model, &problem)?;
        let e = relative_h1_error(&model, &problem)?;
        let marked = mark(&ind);
        println!(
            "n = {n:>3}: xi = {:.4e}, e_n = {e:.4e}, ratio = {:.3}, marked elements {:?}",
            ind.xi,
            ind.xi / e,
            &marked[..marked.len().min(6)]
        );
    }
    Ok(())
}
