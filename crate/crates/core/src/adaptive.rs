//! Flux-recovery (ZZ-type) error indicators, average marking and the
//! adaptive dBN loop.

use crate::dbn::dbn_run;
use crate::error::{Result, RitzError};
use crate::linear_system::stiffness_entries;
use crate::metrics::{fit_rate, H1ErrorMeter};
use crate::model::{uniform_breakpoints, ShallowModel, SolverConfig};
use crate::problem::ProblemSpec;
use crate::quadrature::{integrate_with_breaks, QuadratureRule};
use crate::report::{IterationRecord, RefinementRecord, RunReport};

/// Default cap on the number of breakpoints in adaptive runs.
pub const DEFAULT_N_MAX: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSet {
    /// One value per element `[x_i, x_{i+1}]`.
    pub xi_k: Vec<f64>,
    /// Global relative estimator.
    pub xi: f64,
}

/// Nodal values of the recovered flux `G(a u_n')` at `(0, b, 1)`.
pub fn recover_flux(model: &ShallowModel, problem: &ProblemSpec) -> Result<Vec<f64>> {
    recover_flux_pl(&model.nodes(), &model.slopes(), problem, &QuadratureRule::default())
}

/// Recovered flux for a continuous piecewise-linear function given by its
/// `nodes` (including 0 and 1) and per-element `slopes`.
pub fn recover_flux_pl(nodes: &[f64], slopes: &[f64], problem: &ProblemSpec, rule: &QuadratureRule) -> Result<Vec<f64>> {
    let inner = &nodes[1..nodes.len() - 1];
    let s = stiffness_entries(inner, problem, rule)?;
    let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    // mean of a u_n' on each element
    let q: Vec<f64> = s.iter().zip(slopes).zip(&h).map(|((si, sl), hi)| si * sl / hi).collect();
    let m = q.len();
    let mut g = Vec::with_capacity(m + 1);
    g.push(q[0]);
    for j in 1..m {
        g.push((h[j - 1] * q[j] + h[j] * q[j - 1]) / (h[j - 1] + h[j]));
    }
    g.push(q[m - 1]);
    Ok(g)
}

pub fn local_indicators(model: &ShallowModel, problem: &ProblemSpec) -> Result<IndicatorSet> {
    local_indicators_pl(&model.nodes(), &model.slopes(), problem)
}

/// `xi_K = |a^{-1/2} (G - a u_n')|_{L2(K)}` and
/// `xi = (sum xi_K^2)^{1/2} / |u_n'|_{L2}`.
pub fn local_indicators_pl(nodes: &[f64], slopes: &[f64], problem: &ProblemSpec) -> Result<IndicatorSet> {
    let rule = QuadratureRule::default();
    let g = recover_flux_pl(nodes, slopes, problem, &rule)?;
    let mut xi_k = Vec::with_capacity(slopes.len());
    let mut total = 0.0;
    let mut norm = 0.0;
    for (i, w) in nodes.windows(2).enumerate() {
        let (p, q) = (w[0], w[1]);
        let h = q - p;
        let (gl, gr, slope) = (g[i], g[i + 1], slopes[i]);
        let integrand = |x: f64| {
            let t = (x - p) / h;
            let a = problem.a(x);
            let d = gl + t * (gr - gl) - a * slope;
            d * d / a
        };
        let v = integrate_with_breaks(&integrand, p, q, problem.interfaces(), &[], &rule)?.max(0.0);
        total += v;
        norm += slope * slope * h;
        xi_k.push(v.sqrt());
    }
    if norm == 0.0 {
        return Err(RitzError::ZeroDenominator("estimator normalization |u_n'|"));
    }
    Ok(IndicatorSet { xi_k, xi: (total / norm).sqrt() })
}

/// Average marking: elements (0-based) with `xi_K >= mean(xi_K)`.
pub fn mark(indicators: &IndicatorSet) -> Vec<usize> {
    let xs = &indicators.xi_k;
    if xs.is_empty() {
        return Vec::new();
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (0..xs.len()).filter(|&i| xs[i] >= mean).collect()
}

/// New point for a marked element: a declared interface inside it, else
/// the midpoint.
pub(crate) fn split_point(p: f64, q: f64, problem: &ProblemSpec) -> f64 {
    let margin = 1e-12;
    problem
        .interfaces()
        .iter()
        .copied()
        .find(|&x| x > p + margin && x < q - margin)
        .unwrap_or(0.5 * (p + q))
}

/// Insert one point into each marked element of `nodes` (which include 0
/// and 1); returns the new interior points, sorted.
pub(crate) fn refine(nodes: &[f64], marked: &[usize], problem: &ProblemSpec) -> Vec<f64> {
    let mut interior: Vec<f64> = nodes[1..nodes.len() - 1].to_vec();
    interior.extend(marked.iter().map(|&i| split_point(nodes[i], nodes[i + 1], problem)));
    interior.sort_by(f64::total_cmp);
    interior
}

/// Keep at most `room` marked elements, preferring the largest indicators.
pub(crate) fn cap_marked(marked: Vec<usize>, xi_k: &[f64], room: usize) -> Vec<usize> {
    if marked.len() <= room {
        return marked;
    }
    let mut by_size = marked;
    by_size.sort_by(|&x, &y| xi_k[y].total_cmp(&xi_k[x]).then(x.cmp(&y)));
    by_size.truncate(room);
    by_size.sort_unstable();
    by_size
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    /// Upper bound on breakpoints; when marking would exceed it, only the
    /// largest indicators are refined and the loop ends at `n_max`.
    pub n_max: usize,
    pub max_refinements: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { n_max: DEFAULT_N_MAX, max_refinements: 64 }
    }
}

/// Adaptive dBN from `n0` uniform breakpoints, stopping at `xi <= epsilon`.
pub fn adbn_solve(problem: &ProblemSpec, config: &SolverConfig, n0: usize) -> Result<(ShallowModel, RunReport)> {
    adbn_solve_with(problem, config, n0, &AdaptiveOptions::default())
}

pub fn adbn_solve_with(
    problem: &ProblemSpec,
    config: &SolverConfig,
    n0: usize,
    opts: &AdaptiveOptions,
) -> Result<(ShallowModel, RunReport)> {
    if n0 < 1 {
        return Err(RitzError::InvalidConfig("adaptive runs need n0 >= 1".into()));
    }
    if n0 > opts.n_max {
        return Err(RitzError::NeuronLimit { requested: n0, limit: opts.n_max });
    }
    let meter = match problem.exact() {
        Some(_) => Some(H1ErrorMeter::new(problem)?),
        None => None,
    };
    let mut b = uniform_breakpoints(n0);
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut refinements = Vec::new();
    let mut round = 0usize;
    loop {
        let cfg = SolverConfig { seed: config.seed.wrapping_add(round as u64), ..config.clone() };
        let run = dbn_run(problem, &cfg, &b)?;
        let offset = iterations.len();
        iterations.extend(run.report.iterations.iter().map(|r| IterationRecord { k: r.k + offset, ..r.clone() }));
        let model = run.model;
        let n = model.n();
        let xi = match local_indicators(&model, problem) {
            Ok(ind) => Some(ind),
            Err(RitzError::ZeroDenominator(_)) => None,
            Err(e) => return Err(e),
        };
        let e_n = match &meter {
            Some(m) => Some(m.model_error(&model)?),
            None => None,
        };
        refinements.push(RefinementRecord {
            n,
            e_n,
            xi: xi.as_ref().map_or(0.0, |i| i.xi),
            r: e_n.and_then(|e| fit_rate(n, e).ok()),
            iterations: run.report.iterations.len(),
        });
        if let Some(last) = iterations.last_mut() {
            last.xi = xi.as_ref().map(|i| i.xi);
        }
        let ind = match xi {
            Some(ind) if ind.xi > config.epsilon => ind,
            _ => return Ok(finish(problem, config, model, iterations, refinements)),
        };
        if round >= opts.max_refinements || n >= opts.n_max {
            return Ok(finish(problem, config, model, iterations, refinements));
        }
        let marked = cap_marked(mark(&ind), &ind.xi_k, opts.n_max - n);
        b = refine(&model.nodes(), &marked, problem);
        round += 1;
    }
}

fn finish(
    problem: &ProblemSpec,
    config: &SolverConfig,
    model: ShallowModel,
    iterations: Vec<IterationRecord>,
    refinements: Vec<RefinementRecord>,
) -> (ShallowModel, RunReport) {
    let mut report = RunReport::new(problem.name(), "adbn", config, &model);
    report.iterations = iterations;
    report.refinements = refinements;
    (model, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::scalar_fn;
    use approx::assert_relative_eq;

    fn unit() -> ProblemSpec {
        ProblemSpec::constant_coefficient("zero", 1.0, scalar_fn(|_| 0.0), 0.0, 1.0)
            .with_f_antiderivatives(scalar_fn(|_| 0.0), Some(scalar_fn(|_| 0.0)))
            .with_exact(scalar_fn(|x| x), scalar_fn(|_| 1.0))
    }

    #[test]
    fn linear_function_has_zero_indicators() {
        let m = ShallowModel::new(0.0, vec![0.3, 0.6], vec![1.0, 0.0, 0.0]).unwrap();
        let g = recover_flux(&m, &unit()).unwrap();
        assert!(g.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let ind = local_indicators(&m, &unit()).unwrap();
        assert!(ind.xi_k.iter().all(|&v| v < 1e-14));
        assert!(ind.xi < 1e-14);
    }

    #[test]
    fn hat_function_example() {
        let m = ShallowModel::new(0.0, vec![0.5], vec![1.0, -2.0]).unwrap();
        let g = recover_flux(&m, &unit()).unwrap();
        assert_eq!(g.len(), 3);
        assert_relative_eq!(g[0], 1.0);
        assert_relative_eq!(g[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(g[2], -1.0);
        let ind = local_indicators(&m, &unit()).unwrap();
        assert_relative_eq!(ind.xi_k[0], (1.0f64 / 6.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn constant_model_has_no_normalization() {
        let m = ShallowModel::new(0.0, vec![0.5], vec![0.0, 0.0]).unwrap();
        assert!(matches!(local_indicators(&m, &unit()), Err(RitzError::ZeroDenominator(_))));
    }

    #[test]
    fn marking_examples() {
        let ind = |v: &[f64]| IndicatorSet { xi_k: v.to_vec(), xi: 1.0 };
        assert_eq!(mark(&ind(&[1.0, 2.0, 3.0])), vec![1, 2]);
        assert_eq!(mark(&ind(&[2.0, 2.0, 2.0])), vec![0, 1, 2]);
        assert_eq!(mark(&ind(&[0.0, 0.0, 5.0])), vec![2]);
    }

    #[test]
    fn refinement_prefers_interface() {
        let p = crate::problems::make_problem(&crate::problems::ProblemId::Interface { k: 10.0 }).unwrap();
        let b = refine(&[0.0, 0.4, 0.7, 1.0], &[0, 1], &p);
        assert_eq!(b, vec![0.2, 0.4, 0.5, 0.7]);
    }

    #[test]
    fn cap_keeps_largest() {
        assert_eq!(cap_marked(vec![0, 2, 3], &[5.0, 0.0, 7.0, 6.0], 2), vec![2, 3]);
    }

    #[test]
    fn linear_solution_stops_at_once() {
        let cfg = SolverConfig { max_iters: 5, ..SolverConfig::default() };
        let (model, report) = adbn_solve(&unit(), &cfg, 2).unwrap();
        assert_eq!(model.n(), 2);
        assert_eq!(report.refinements.len(), 1);
        assert!(report.refinements[0].xi < 1e-8);
    }
}
