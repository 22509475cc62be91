//! Build a shallow ReLU model by hand, evaluate it and its derivative,
//! and look at the energy it carries for a simple problem.
use ritz_dbn::{energy, make_problem, ProblemId, ShallowModel, SolverConfig};

fn main() -> ritz_dbn::Result<()> {
    // u(x) = 0.5 + 2x - 3 max(0, x - 0.25) + 1.5 max(0, x - 0.75)
    let model = ShallowModel::new(0.5, vec![0.25, 0.75], vec![2.0, -3.0, 1.5])?;
    println!("n = {} interior breakpoints", model.n());
    for x in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("u({x:.2}) = {:+.4}   u'({x:.2}+) = {:+.4}", model.evaluate(x), model.evaluate_derivative(x));
    }
    println!("slopes per element: {:?}", model.slopes());

    let problem = make_problem(&ProblemId::ExpSolution)?;
    let j = energy(&model, &problem, &SolverConfig::default())?;
    println!("penalized energy on {}: {j:.6}", problem.name());
    Ok(())
}
