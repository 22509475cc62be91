//! Reference methods for comparison: finite elements on fixed and adapted
//! meshes, and BFGS over all network parameters.

mod bfgs;
mod fem;

pub use bfgs::{bfgs_solve, bfgs_solve_masked, BfgsOptions};
pub use fem::{afem_solve, fem_solve, FemSolution};
