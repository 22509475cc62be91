//! Fitted rates r = -ln e_n / ln n for dBN on the exponential problem,
//! run in parallel over sizes.
use rayon::prelude::*;
use ritz_dbn::{dbn_solve_uniform, fit_rate, make_problem, relative_h1_error, ProblemId, SolverConfig};

fn main() -> ritz_dbn::Result<()> {
    let problem = make_problem(&ProblemId::ExpSolution)?;
    let config = SolverConfig { max_iters: 500, fixed_budget: true, ..SolverConfig::default() };
    // `n` counts the neuron fixed at 0, so n - 1 breakpoints move
    let sizes = [30usize, 60, 120, 240];
    let rows: Vec<ritz_dbn::Result<(usize, f64)>> = sizes
        .par_iter()
        .map(|&n| {
            let (model, _) = dbn_solve_uniform(&problem, &config, n - 1)?;
            Ok((n, relative_h1_error(&model, &problem)?))
        })
        .collect();
    for row in rows {
        let (n, e) = row?;
        println!("n = {n:>4}: e_n = {e:.4e}, r = {:.3}", fit_rate(n, e)?);
    }
    Ok(())
}
