//! Error norms, convergence rates and stiffness conditioning.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RitzError};
use crate::linear_system::StiffnessData;
use crate::model::ShallowModel;
use crate::problem::ProblemSpec;
use crate::quadrature::{integrate_split, QuadratureRule};

/// Gauss nodes per piece for error integrals.
pub const ERROR_QUAD_ORDER: usize = 16;
/// Pieces are at most `1 / ERROR_CELLS` wide, so long elements still
/// resolve sharp features of the exact solution.
pub const ERROR_CELLS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub n: usize,
    /// Relative H1 seminorm error.
    pub e_n: f64,
    /// Fitted order, `e_n = n^(-r)`.
    pub r: Option<f64>,
}

impl ErrorReport {
    pub fn new(n: usize, e_n: f64) -> Self {
        let r = fit_rate(n, e_n).ok();
        Self { n, e_n, r }
    }
}

/// `|u - u_n|_{H1} / |u|_{H1}`.
pub fn relative_h1_error(model: &ShallowModel, problem: &ProblemSpec) -> Result<f64> {
    relative_h1_error_pl(&model.nodes(), &model.slopes(), problem)
}

/// Relative H1 seminorm error of the continuous piecewise-linear function with
/// the given `nodes` (including 0 and 1) and per-element `slopes`.
pub fn relative_h1_error_pl(nodes: &[f64], slopes: &[f64], problem: &ProblemSpec) -> Result<f64> {
    relative_h1_error_with(nodes, slopes, problem, &QuadratureRule::new(ERROR_QUAD_ORDER))
}

pub fn relative_h1_error_with(
    nodes: &[f64],
    slopes: &[f64],
    problem: &ProblemSpec,
    rule: &QuadratureRule,
) -> Result<f64> {
    H1ErrorMeter::with_rule(problem, rule.clone())?.error(nodes, slopes)
}

/// Relative H1 error with the denominator `|u|_{H1}` computed once; used for
/// per-iteration error tracking.
#[derive(Debug, Clone)]
pub struct H1ErrorMeter<'a> {
    problem: &'a ProblemSpec,
    rule: QuadratureRule,
    breaks: Vec<f64>,
    norm_sq: f64,
}

impl<'a> H1ErrorMeter<'a> {
    pub fn new(problem: &'a ProblemSpec) -> Result<Self> {
        Self::with_rule(problem, QuadratureRule::new(ERROR_QUAD_ORDER))
    }

    pub fn with_rule(problem: &'a ProblemSpec, rule: QuadratureRule) -> Result<Self> {
        let exact = problem
            .exact()
            .ok_or_else(|| RitzError::InvalidProblem("no exact solution".into()))?;
        let du = &exact.du;
        let breaks = problem.break_points();
        let norm_sq = integrate_cells(&|x: f64| du(x) * du(x), 0.0, 1.0, &breaks, problem.singular_points(), &rule)?;
        if norm_sq == 0.0 {
            return Err(RitzError::ZeroDenominator("relative H1 error"));
        }
        Ok(Self { problem, rule, breaks, norm_sq })
    }

    pub fn error(&self, nodes: &[f64], slopes: &[f64]) -> Result<f64> {
        let du = &self.problem.exact().expect("checked in constructor").du;
        let sing = self.problem.singular_points();
        let mut num = 0.0;
        for (w, &slope) in nodes.windows(2).zip(slopes) {
            let (p, q) = (w[0], w[1]);
            if q <= p {
                continue;
            }
            let g = |x: f64| {
                let e = du(x) - slope;
                e * e
            };
            num += integrate_cells(&g, p, q, &self.breaks, sing, &self.rule)?;
        }
        Ok((num / self.norm_sq).sqrt())
    }

    pub fn model_error(&self, model: &ShallowModel) -> Result<f64> {
        self.error(&model.nodes(), &model.slopes())
    }
}

fn integrate_cells<G: Fn(f64) -> f64>(
    g: &G,
    p: f64,
    q: f64,
    breaks: &[f64],
    singular: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    let cells = ((q - p) * ERROR_CELLS as f64).ceil().max(1.0) as usize;
    let w = (q - p) / cells as f64;
    let mut acc = 0.0;
    for i in 0..cells {
        let lo = p + i as f64 * w;
        let hi = if i + 1 == cells { q } else { lo + w };
        acc += integrate_pieces(g, lo, hi, breaks, singular, rule)?;
    }
    Ok(acc)
}

fn integrate_pieces<G: Fn(f64) -> f64>(
    g: &G,
    p: f64,
    q: f64,
    breaks: &[f64],
    singular: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    let mut acc = 0.0;
    let mut start = p;
    for &x in breaks.iter().filter(|&&x| x > p && x < q) {
        acc += integrate_split(g, start, x, singular, rule)?;
        start = x;
    }
    acc += integrate_split(g, start, q, singular, rule)?;
    Ok(acc)
}

/// `r = -ln(e_n) / ln(n)`.
pub fn fit_rate(n: usize, e_n: f64) -> Result<f64> {
    if n < 2 {
        return Err(RitzError::DomainError(format!("rate needs n >= 2, got {n}")));
    }
    // values within rounding of 1 carry no rate information
    if !(e_n > 0.0 && e_n < 1.0 - 1e-12) {
        return Err(RitzError::DomainError(format!("rate needs 0 < e_n < 1, got {e_n}")));
    }
    Ok(-e_n.ln() / (n as f64).ln())
}

/// Spectral condition number of `A(b)`. `A^{-1}` is symmetric tridiagonal,
/// so both extreme eigenvalues come from Sturm-sequence bisection in O(n)
/// per probe; `cond(A) = lambda_max(A^{-1}) / lambda_min(A^{-1})`.
pub fn condition_number(data: &StiffnessData) -> f64 {
    let (diag, off) = inverse_tridiagonal(data);
    let m = diag.len();
    // Gershgorin bounds; A^{-1} is positive definite
    let hi = (0..m)
        .map(|i| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < m { off[i].abs() } else { 0.0 };
            diag[i] + l + r
        })
        .fold(0.0, f64::max);
    let lambda_min = bisect_eigenvalue(&diag, &off, 0, hi);
    let lambda_max = bisect_eigenvalue(&diag, &off, m - 1, hi);
    lambda_max / lambda_min
}

/// Diagonal and super-diagonal of `A(b)^{-1}`.
fn inverse_tridiagonal(data: &StiffnessData) -> (Vec<f64>, Vec<f64>) {
    let inv: Vec<f64> = data.s.iter().map(|s| 1.0 / s).collect();
    let diag = (0..inv.len()).map(|k| inv[k] + if k > 0 { inv[k - 1] } else { 0.0 }).collect();
    let off = inv[..inv.len() - 1].iter().map(|v| -v).collect();
    (diag, off)
}

/// Number of eigenvalues below `x`, from the LDL^T pivots of `T - x I`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let coupling = if i > 0 { off[i - 1] * off[i - 1] / q } else { 0.0 };
        q = diag[i] - x - coupling;
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (0-based) in `[0, hi]`.
fn bisect_eigenvalue(diag: &[f64], off: &[f64], k: usize, hi: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, hi);
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
