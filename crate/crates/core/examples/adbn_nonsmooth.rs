//! Adaptive dBN on u = x^(2/3): breakpoints are added where the local
//! indicators are large, which pulls them toward the singularity at 0.
use ritz_dbn::{adbn_solve_with, make_problem, AdaptiveOptions, ProblemId, SolverConfig};

fn main() -> ritz_dbn::Result<()> {
    let problem = make_problem(&ProblemId::XTwoThirds)?;
    let config = SolverConfig { max_iters: 1000, tau: 1e-5, ..SolverConfig::default() };
    let opts = AdaptiveOptions { n_max: 23, max_refinements: 8 };
    let (model, report) = adbn_solve_with(&problem, &config, 9, &opts)?;

    println!("{:>4} {:>12} {:>12} {:>6}", "n", "e_n", "xi", "iters");
    for r in &report.refinements {
        println!("{:>4} {:>12.4e} {:>12.4e} {:>6}", r.n, r.e_n.unwrap_or(f64::NAN), r.xi, r.iterations);
    }
    let near_zero = model.breakpoints().iter().filter(|&&b| b < 0.1).count();
    println!("{near_zero} of {} breakpoints sit in (0, 0.1)", model.n());
    Ok(())
}
