//! Adaptive finite elements against adaptive dBN on the singular problem:
//! the free breakpoints reach the same accuracy with far fewer of them.
use ritz_dbn::{adbn_solve_with, afem_solve, make_problem, AdaptiveOptions, ProblemId, SolverConfig};

fn main() -> ritz_dbn::Result<()> {
    let problem = make_problem(&ProblemId::XTwoThirds)?;
    let (_, fem) = afem_solve(&problem, 9, 0.0, 16)?;
    let config = SolverConfig { max_iters: 1000, tau: 1e-5, ..SolverConfig::default() };
    let (_, dbn) = adbn_solve_with(&problem, &config, 9, &AdaptiveOptions { n_max: 23, max_refinements: 8 })?;

    println!("aFEM:");
    for r in &fem.refinements {
        println!("  n = {:>4}  e_n = {:.4e}", r.n, r.e_n.unwrap_or(f64::NAN));
    }
    println!("AdBN:");
    for r in &dbn.refinements {
        println!("  n = {:>4}  e_n = {:.4e}", r.n, r.e_n.unwrap_or(f64::NAN));
    }
    Ok(())
}
