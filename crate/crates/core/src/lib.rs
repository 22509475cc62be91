//! Shallow Ritz solver for 1D diffusion problems: a one-hidden-layer ReLU
//! network trained by a damped block Newton method, with adaptive neuron
//! enhancement and finite element / BFGS baselines.
//!
//! ```
//! use ritz_dbn::{dbn_solve_uniform, make_problem, relative_h1_error, ProblemId, SolverConfig};
//!
//! let problem = make_problem(&ProblemId::ExpSolution).unwrap();
//! let config = SolverConfig { max_iters: 20, ..SolverConfig::default() };
//! let (model, _report) = dbn_solve_uniform(&problem, &config, 20).unwrap();
//! assert!(relative_h1_error(&model, &problem).unwrap() < 0.25);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod adaptive;
pub mod baselines;
pub mod cli;
pub mod dbn;
pub mod error;
pub mod linear_system;
pub mod metrics;
pub mod model;
pub mod problem;
pub mod problems;
pub mod quadrature;
pub mod report;

pub use adaptive::{adbn_solve, adbn_solve_with, local_indicators, mark, recover_flux, AdaptiveOptions, IndicatorSet};
pub use baselines::{afem_solve, bfgs_solve, bfgs_solve_masked, fem_solve, BfgsOptions, FemSolution};
pub use dbn::{
    classify, compute_g, compute_gprime, dbn_run, dbn_solve, dbn_solve_uniform, gradient_b, line_search, newton_direction,
    redistribute, redistribute_with, DbnRun, DbnState, NeuronClassification,
};
pub use error::{Result, RitzError};
pub use linear_system::{
    apply_stiffness, apply_stiffness_inverse, assemble_rhs, assemble_stiffness, solve_coefficients,
    solve_coefficients_kkt, solve_penalized, StiffnessData,
};
pub use metrics::{condition_number, fit_rate, relative_h1_error, ErrorReport, H1ErrorMeter};
pub use model::{energy, uniform_breakpoints, ShallowModel, SolverConfig};
pub use problem::{scalar_fn, ExactSolution, ProblemSpec, ScalarFn};
pub use problems::{make_problem, ProblemId};
pub use report::RunReport;
