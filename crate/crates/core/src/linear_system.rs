//! Stiffness data, load vector and the O(n) solve for the output-layer
//! coefficients.
//!
//! The stiffness matrix `A(b)_{ij} = ∫_{max(b_i, b_j)}^1 a` is dense, but its
//! inverse is the tridiagonal stencil built from the element integrals
//! `s_i = ∫_{b_{i-1}}^{b_i} a`. Only `s` and the boundary vector
//! `d_i = 1 - b_i` are ever stored; the penalty term `gamma d d^T` is handled
//! with Sherman–Morrison.

use crate::error::{Result, RitzError};
use crate::model::SolverConfig;
use crate::problem::ProblemSpec;
use crate::quadrature::{integrate_with_breaks, QuadratureRule};

/// Gaps narrower than this are treated as collapsed elements.
pub const MIN_GAP: f64 = 1e-12;

/// Element integrals of `a` and the boundary vector, for `n` breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessData {
    /// `s[i] = ∫_{b_i}^{b_{i+1}} a` for `i = 0..=n` (0-based, sentinels included).
    pub s: Vec<f64>,
    /// `d[i] = 1 - b_i` with `b_0 = 0`.
    pub d: Vec<f64>,
}

impl StiffnessData {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Dense `A(b)`; test and diagnostic use only.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let m = self.s.len();
        // tail[k] = ∫_{b_k}^1 a
        let mut tail = vec![0.0; m];
        let mut acc = 0.0;
        for k in (0..m).rev() {
            acc += self.s[k];
            tail[k] = acc;
        }
        (0..m)
            .map(|i| (0..m).map(|j| tail[i.max(j)]).collect())
            .collect()
    }
}

/// `s_i` for the breakpoints `b`, without the positivity check.
pub(crate) fn stiffness_entries(b: &[f64], problem: &ProblemSpec, rule: &QuadratureRule) -> Result<Vec<f64>> {
    let nodes = sentinel_nodes(b);
    match problem.a_antiderivative() {
        Some(a1) => {
            let vals: Vec<f64> = nodes.iter().map(|&x| a1(x)).collect();
            Ok(vals.windows(2).map(|w| w[1] - w[0]).collect())
        }
        None => nodes
            .windows(2)
            .map(|w| integrate_with_breaks(problem.a_fn(), w[0], w[1], problem.interfaces(), &[], rule))
            .collect(),
    }
}

fn sentinel_nodes(b: &[f64]) -> Vec<f64> {
    let mut nodes = Vec::with_capacity(b.len() + 2);
    nodes.push(0.0);
    nodes.extend_from_slice(b);
    nodes.push(1.0);
    nodes
}

/// Stiffness data with the default quadrature rule.
pub fn assemble_stiffness(b: &[f64], problem: &ProblemSpec) -> Result<StiffnessData> {
    assemble_stiffness_with(b, problem, &QuadratureRule::default())
}

pub fn assemble_stiffness_with(b: &[f64], problem: &ProblemSpec, rule: &QuadratureRule) -> Result<StiffnessData> {
    let s = stiffness_entries(b, problem, rule)?;
    let nodes = sentinel_nodes(b);
    for (i, (si, w)) in s.iter().zip(nodes.windows(2)).enumerate() {
        if !(*si > 0.0) || w[1] - w[0] < MIN_GAP {
            return Err(RitzError::NonPositiveCoefficient { index: i, value: *si });
        }
    }
    let d = std::iter::once(1.0).chain(b.iter().map(|x| 1.0 - x)).collect();
    Ok(StiffnessData { s, d })
}

/// `A(b)^{-1} v` via the tridiagonal stencil.
pub fn apply_stiffness_inverse(data: &StiffnessData, v: &[f64]) -> Result<Vec<f64>> {
    let m = data.s.len();
    if v.len() != m {
        return Err(RitzError::InvalidModel(format!("vector of length {} for {} unknowns", v.len(), m)));
    }
    if let Some((i, &si)) = data.s.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
        return Err(RitzError::NonPositiveCoefficient { index: i, value: si });
    }
    let mut out = vec![0.0; m];
    for k in 0..m {
        let next = if k + 1 < m { v[k + 1] } else { 0.0 };
        let mut acc = (v[k] - next) / data.s[k];
        if k > 0 {
            acc += (v[k] - v[k - 1]) / data.s[k - 1];
        }
        out[k] = acc;
    }
    Ok(out)
}

/// `A(b) v` in O(n) using prefix and suffix sums.
pub fn apply_stiffness(data: &StiffnessData, v: &[f64]) -> Vec<f64> {
    let m = data.s.len();
    let mut tail = vec![0.0; m];
    let mut acc = 0.0;
    for k in (0..m).rev() {
        acc += data.s[k];
        tail[k] = acc;
    }
    // (A v)_i = tail_i * sum_{j<=i} v_j + sum_{j>i} tail_j v_j
    let mut suffix = vec![0.0; m + 1];
    for j in (0..m).rev() {
        suffix[j] = suffix[j + 1] + tail[j] * v[j];
    }
    let mut prefix = 0.0;
    (0..m)
        .map(|i| {
            prefix += v[i];
            tail[i] * prefix + suffix[i + 1]
        })
        .collect()
}

/// Load vector `f_i = ∫_{b_i}^1 f(x) (x - b_i) dx`, `i = 0..=n`, `b_0 = 0`.
pub fn assemble_rhs(b: &[f64], problem: &ProblemSpec, rule: &QuadratureRule) -> Result<Vec<f64>> {
    let starts: Vec<f64> = std::iter::once(0.0).chain(b.iter().copied()).collect();
    if let (Some(big_f), Some(big_ff)) = (problem.f_antiderivative(), problem.f_second_antiderivative()) {
        let f1 = big_f(1.0);
        let ff1 = big_ff(1.0);
        let out: Vec<f64> = starts.iter().map(|&t| f1 * (1.0 - t) - (ff1 - big_ff(t))).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(RitzError::NonFiniteIntegrand { lo: 0.0, hi: 1.0 });
        }
        return Ok(out);
    }
    rhs_by_quadrature(&starts, problem, rule)
}

/// Suffix sums over elements: `f_i = w_i + sum_{j>i} (m_j (b_j - b_i) + w_j)`
/// with `m_j = ∫_{K_j} f` and `w_j = ∫_{K_j} f (x - b_j)`. The element
/// containing a singular left end is only ever weighted by `x - b_j`.
fn rhs_by_quadrature(starts: &[f64], problem: &ProblemSpec, rule: &QuadratureRule) -> Result<Vec<f64>> {
    let m = starts.len();
    let f = problem.f_fn();
    let jumps = problem.interfaces();
    let sing = problem.singular_points();
    let mut w = vec![0.0; m];
    let mut mass = vec![0.0; m];
    for j in 0..m {
        let lo = starts[j];
        let hi = if j + 1 < m { starts[j + 1] } else { 1.0 };
        w[j] = integrate_with_breaks(&|x: f64| f(x) * (x - lo), lo, hi, jumps, sing, rule)?;
        if j > 0 {
            mass[j] = integrate_with_breaks(f, lo, hi, jumps, sing, rule)?;
        }
    }
    let mut out = vec![0.0; m];
    let (mut sum_w, mut sum_m, mut sum_mb) = (0.0, 0.0, 0.0);
    for i in (0..m).rev() {
        out[i] = w[i] + sum_w + sum_mb - starts[i] * sum_m;
        sum_w += w[i];
        sum_m += mass[i];
        sum_mb += mass[i] * starts[i];
    }
    Ok(out)
}

/// Output of the penalized linear solve.
#[derive(Debug, Clone)]
pub struct LinearSolve {
    pub c: Vec<f64>,
    pub stiffness: StiffnessData,
    /// `𝓕 = f(b) + gamma (beta - alpha) d`.
    pub load: Vec<f64>,
}

/// `c = 𝓐(b)^{-1} 𝓕(b)` with `𝓐 = A + gamma d d^T`.
pub fn solve_coefficients(b: &[f64], problem: &ProblemSpec, config: &SolverConfig) -> Result<Vec<f64>> {
    Ok(solve_penalized(b, problem, config)?.c)
}

/// As [`solve_coefficients`], also returning the assembled data.
pub fn solve_penalized(b: &[f64], problem: &ProblemSpec, config: &SolverConfig) -> Result<LinearSolve> {
    let rule = config.rule();
    let gamma = config.gamma;
    let data = assemble_stiffness_with(b, problem, &rule)?;
    let f = assemble_rhs(b, problem, &rule)?;
    let shift = gamma * (problem.beta() - problem.alpha());
    let load: Vec<f64> = f.iter().zip(&data.d).map(|(fi, di)| fi + shift * di).collect();

    // Sherman-Morrison with the gamma-sized part of the load folded in
    // analytically: c = A^{-1} f + z gamma (beta - alpha - d.A^{-1} f) / (1 + gamma d.z),
    // which avoids cancelling two O(gamma) vectors.
    let y = apply_stiffness_inverse(&data, &f)?;
    let z = apply_stiffness_inverse(&data, &data.d)?;
    let dz = dot(&data.d, &z);
    let denom = 1.0 + gamma * dz;
    if !(denom > 0.0) {
        return Err(RitzError::DegenerateRankOne(denom));
    }
    let scale = gamma * ((problem.beta() - problem.alpha()) - dot(&data.d, &y)) / denom;
    let c: Vec<f64> = y.iter().zip(&z).map(|(yi, zi)| yi + scale * zi).collect();

    #[cfg(debug_assertions)]
    {
        // a-priori rounding bound: c is formed by cancelling y against z, and
        // the rank-one term multiplies that rounding by gamma
        let res = penalized_residual(&data, gamma, &c, &load);
        let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let max = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tail: f64 = data.s.iter().sum();
        let dmax = max(&data.d);
        let bound = 1e-8 * (1.0 + max(&load))
            + 64.0 * f64::EPSILON * (tail * l1(&c) + gamma * dmax * dmax * (l1(&y) + l1(&c)));
        debug_assert!(res <= bound, "penalized solve residual {res:e} exceeds {bound:e}");
    }

    Ok(LinearSolve { c, stiffness: data, load })
}

/// `‖(A + gamma d d^T) c - 𝓕‖_∞`.
pub fn penalized_residual(data: &StiffnessData, gamma: f64, c: &[f64], load: &[f64]) -> f64 {
    let ac = apply_stiffness(data, c);
    let dc = dot(&data.d, c);
    ac.iter()
        .zip(&data.d)
        .zip(load)
        .map(|((a, d), f)| (a + gamma * d * dc - f).abs())
        .fold(0.0, f64::max)
}

/// Solve the bordered system `[[A, d], [d^T, 0]] (c, lambda) = (f, beta - alpha)`
/// by eliminating `lambda` first. Enforces `u_n(1) = beta` exactly.
pub fn solve_coefficients_kkt(b: &[f64], problem: &ProblemSpec) -> Result<(Vec<f64>, f64)> {
    let rule = QuadratureRule::default();
    let data = assemble_stiffness_with(b, problem, &rule)?;
    let f = assemble_rhs(b, problem, &rule)?;
    let ainv_f = apply_stiffness_inverse(&data, &f)?;
    let ainv_d = apply_stiffness_inverse(&data, &data.d)?;
    let dad = dot(&data.d, &ainv_d);
    if dad == 0.0 || !dad.is_finite() {
        return Err(RitzError::DegenerateConstraint(dad));
    }
    let lambda = (dot(&data.d, &ainv_f) - (problem.beta() - problem.alpha())) / dad;
    let c = ainv_f.iter().zip(&ainv_d).map(|(x, y)| x - lambda * y).collect();
    Ok((c, lambda))
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
