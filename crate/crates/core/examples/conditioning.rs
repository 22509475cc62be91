//! Conditioning of the coefficient system: O(n^2) growth for uniform
//! breakpoints, and much worse once two breakpoints nearly collide.
use ritz_dbn::{assemble_stiffness, condition_number, make_problem, uniform_breakpoints, ProblemId};

fn main() -> ritz_dbn::Result<()> {
    let problem = make_problem(&ProblemId::ExpSolution)?;
    for n in [8, 16, 32, 64, 128] {
        let kappa = condition_number(&assemble_stiffness(&uniform_breakpoints(n), &problem)?);
        println!("n = {n:>4}: cond(A) = {kappa:.4e}, cond / n^2 = {:.3}", kappa / (n * n) as f64);
    }
    let mut b = uniform_breakpoints(16);
    for gap in [1e-2, 1e-4, 1e-6] {
        b[8] = b[7] + gap;
        let kappa = condition_number(&assemble_stiffness(&b, &problem)?);
        println!("gap {gap:.0e} between two breakpoints: cond(A) = {kappa:.4e}");
    }
    Ok(())
}
