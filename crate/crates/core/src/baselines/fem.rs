use std::time::Instant;

use crate::adaptive::{local_indicators_pl, mark, refine};
use crate::error::{Result, RitzError};
use crate::linear_system::{stiffness_entries, MIN_GAP};
use crate::metrics::{fit_rate, H1ErrorMeter};
use crate::model::{uniform_breakpoints, ShallowModel, SolverConfig};
use crate::problem::ProblemSpec;
use crate::quadrature::{integrate_with_breaks, QuadratureRule};
use crate::report::{IterationRecord, RefinementRecord, RunReport};

/// Continuous piecewise-linear Galerkin solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FemSolution {
    /// Mesh including 0 and 1.
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl FemSolution {
    /// Number of interior nodes.
    pub fn n(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0]))
            .collect()
    }

    /// The same function written as a shallow network, `c_i` being the
    /// slope jumps.
    pub fn to_model(&self) -> ShallowModel {
        let slopes = self.slopes();
        let mut c = Vec::with_capacity(slopes.len());
        c.push(slopes[0]);
        c.extend(slopes.windows(2).map(|w| w[1] - w[0]));
        ShallowModel::from_parts_unchecked(self.values[0], self.nodes[1..self.nodes.len() - 1].to_vec(), c)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let i = self.nodes.partition_point(|&p| p <= x).clamp(1, self.nodes.len() - 1) - 1;
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let t = (x - x0) / (x1 - x0);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

/// Galerkin solve with hat functions on `nodes`, Dirichlet data imposed
/// strongly at both ends.
pub fn fem_solve(problem: &ProblemSpec, nodes: &[f64]) -> Result<FemSolution> {
    if nodes.len() < 2 || nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
        return Err(RitzError::InvalidModel("mesh must start at 0 and end at 1".into()));
    }
    let rule = QuadratureRule::default();
    let inner = &nodes[1..nodes.len() - 1];
    let s = stiffness_entries(inner, problem, &rule)?;
    let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    for (i, (&si, &hi)) in s.iter().zip(&h).enumerate() {
        if !(si > 0.0) || hi < MIN_GAP {
            return Err(RitzError::NonPositiveCoefficient { index: i, value: si });
        }
    }
    // element stiffness s_e / h_e^2
    let k: Vec<f64> = s.iter().zip(&h).map(|(si, hi)| si / (hi * hi)).collect();
    let m = inner.len();
    let (alpha, beta) = (problem.alpha(), problem.beta());
    if m == 0 {
        return Ok(FemSolution { nodes: nodes.to_vec(), values: vec![alpha, beta] });
    }

    let f = problem.f_fn();
    let (jumps, sing) = (problem.interfaces(), problem.singular_points());
    let mut load = vec![0.0; m];
    for e in 0..nodes.len() - 1 {
        let (p, q, he) = (nodes[e], nodes[e + 1], h[e]);
        // left end of element e is node e; interior unknown index e - 1
        if e >= 1 {
            load[e - 1] += integrate_with_breaks(&|x: f64| f(x) * (q - x) / he, p, q, jumps, sing, &rule)?;
        }
        if e < m {
            load[e] += integrate_with_breaks(&|x: f64| f(x) * (x - p) / he, p, q, jumps, sing, &rule)?;
        }
    }
    load[0] += k[0] * alpha;
    load[m - 1] += k[m] * beta;

    let diag: Vec<f64> = (0..m).map(|i| k[i] + k[i + 1]).collect();
    let off: Vec<f64> = (0..m.saturating_sub(1)).map(|i| -k[i + 1]).collect();
    let u = thomas(&off, &diag, &off, &load);

    let mut values = Vec::with_capacity(m + 2);
    values.push(alpha);
    values.extend(u);
    values.push(beta);
    Ok(FemSolution { nodes: nodes.to_vec(), values })
}

/// Tridiagonal solve; `lower[i]` couples rows `i+1, i`, `upper[i]` rows `i, i+1`.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    cp[0] = if m > 1 { upper[0] / diag[0] } else { 0.0 };
    dp[0] = rhs[0] / diag[0];
    for i in 1..m {
        let den = diag[i] - lower[i - 1] * cp[i - 1];
        cp[i] = if i + 1 < m { upper[i] / den } else { 0.0 };
        dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = dp[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Adaptive FEM from `n0` uniform interior nodes: solve, estimate, mark with
/// the average strategy, bisect; stops at `xi <= epsilon` or after
/// `max_refinements` refinements.
pub fn afem_solve(
    problem: &ProblemSpec,
    n0: usize,
    epsilon: f64,
    max_refinements: usize,
) -> Result<(FemSolution, RunReport)> {
    if n0 < 2 {
        return Err(RitzError::InvalidConfig("aFEM needs n0 >= 2".into()));
    }
    let meter = match problem.exact() {
        Some(_) => Some(H1ErrorMeter::new(problem)?),
        None => None,
    };
    let mut nodes: Vec<f64> = std::iter::once(0.0).chain(uniform_breakpoints(n0)).chain(std::iter::once(1.0)).collect();
    let config = SolverConfig { epsilon, max_iters: max_refinements, ..SolverConfig::default() };
    let mut iterations = Vec::new();
    let mut refinements = Vec::new();
    let mut round = 0;
    loop {
        let t0 = Instant::now();
        let sol = fem_solve(problem, &nodes)?;
        let slopes = sol.slopes();
        let ind = match local_indicators_pl(&nodes, &slopes, problem) {
            Ok(ind) => Some(ind),
            Err(RitzError::ZeroDenominator(_)) => None,
            Err(e) => return Err(e),
        };
        let e_n = match &meter {
            Some(m) => Some(m.error(&nodes, &slopes)?),
            None => None,
        };
        let xi = ind.as_ref().map_or(0.0, |i| i.xi);
        let n = sol.n();
        refinements.push(RefinementRecord { n, e_n, xi, r: e_n.and_then(|e| fit_rate(n, e).ok()), iterations: 1 });
        let model = sol.to_model();
        let energy = crate::model::energy(&model, problem, &config).unwrap_or(f64::NAN);
        iterations.push(IterationRecord {
            k: round,
            energy,
            e_n,
            xi: Some(xi),
            ms: t0.elapsed().as_secs_f64() * 1e3,
        });
        let done = xi <= epsilon || round >= max_refinements;
        match ind {
            Some(ind) if !done => {
                let inner = refine(&nodes, &mark(&ind), problem);
                nodes = std::iter::once(0.0).chain(inner).chain(std::iter::once(1.0)).collect();
                round += 1;
            }
            _ => {
                let mut report = RunReport::new(problem.name(), "afem", &config, &model);
                report.iterations = iterations;
                report.refinements = refinements;
                return Ok((sol, report));
            }
        }
    }
}
