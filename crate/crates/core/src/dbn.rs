//! The damped block Newton (dBN) solver.
//!
//! Each iteration solves exactly for the output-layer coefficients `c` (an
//! O(n) tridiagonal-plus-rank-one solve), then takes one damped Newton step
//! on the breakpoints `b`. The reduced Hessian in `b` is diagonal plus rank
//! one, so the step is also O(n).
//!
//! Neuron indices in [`NeuronClassification`] are 1-based (`j` pairs `b_j`
//! with `c_j`); the vectors `g` and `gprime` are 0-based, `g[j - 1]`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RitzError};
use crate::linear_system::{apply_stiffness, assemble_rhs, dot, solve_penalized, stiffness_entries};
use crate::metrics::H1ErrorMeter;
use crate::model::{energy_from_parts, uniform_breakpoints, ShallowModel, SolverConfig};
use crate::problem::ProblemSpec;
use crate::quadrature::{integrate_with_breaks, QuadratureRule};
use crate::report::{IterationRecord, RunReport};

/// Distance below which a breakpoint counts as sitting on an interface.
pub const INTERFACE_TOL: f64 = 1e-12;
/// Margin kept from the domain ends during the line search.
pub const LINE_SEARCH_MARGIN: f64 = 1e-12;
/// Minimum separation enforced between committed breakpoints.
pub const COLLISION_NUDGE: f64 = 1e-10;
const GOLDEN_ITERS: usize = 40;
const ZETA_MIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronClassification {
    /// Non-contributing neurons, to be redistributed.
    pub s1: Vec<usize>,
    /// Frozen neurons: interfaces, undulation points.
    pub s2: Vec<usize>,
    pub g: Vec<f64>,
    /// NaN for interface neurons (never read).
    pub gprime: Vec<f64>,
}

impl NeuronClassification {
    /// Whether neuron `j` (1-based) takes part in the Newton step.
    pub fn is_free(&self, j: usize) -> bool {
        !self.s1.contains(&j) && !self.s2.contains(&j)
    }

    pub fn free_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.g.len()];
        for &j in self.s1.iter().chain(&self.s2) {
            mask[j - 1] = false;
        }
        mask
    }
}

/// Solver state carried between iterations.
#[derive(Debug, Clone)]
pub struct DbnState {
    pub model: ShallowModel,
    pub iteration: usize,
    pub energy: f64,
    pub relative_residual: f64,
    pub rng: ChaCha8Rng,
}

impl DbnState {
    pub fn new(model: ShallowModel, seed: u64) -> Self {
        Self {
            model,
            iteration: 0,
            energy: f64::NAN,
            relative_residual: f64::NAN,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// `∫_{b_j}^1 f` for every breakpoint.
fn f_tails(b: &[f64], problem: &ProblemSpec, rule: &QuadratureRule) -> Result<Vec<f64>> {
    if let Some(big_f) = problem.f_antiderivative() {
        let f1 = big_f(1.0);
        return b
            .iter()
            .map(|&t| {
                let v = f1 - big_f(t);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(RitzError::NonFiniteIntegrand { lo: t, hi: 1.0 })
                }
            })
            .collect();
    }
    // suffix sums of element masses
    let mut out = vec![0.0; b.len()];
    let mut acc = 0.0;
    for j in (0..b.len()).rev() {
        let hi = b.get(j + 1).copied().unwrap_or(1.0);
        acc += integrate_with_breaks(problem.f_fn(), b[j], hi, problem.interfaces(), problem.singular_points(), rule)?;
        out[j] = acc;
    }
    Ok(out)
}

/// `g_j = ∫_{b_j}^1 f - a(b_j) (sum_{i<j} c_i + c_j / 2)`, `j = 1..=n`.
pub fn compute_g(model: &ShallowModel, problem: &ProblemSpec) -> Result<Vec<f64>> {
    compute_g_with(model, problem, &QuadratureRule::new(16))
}

pub(crate) fn compute_g_with(model: &ShallowModel, problem: &ProblemSpec, rule: &QuadratureRule) -> Result<Vec<f64>> {
    let b = model.breakpoints();
    let tails = f_tails(b, problem, rule)?;
    let c = model.coefficients();
    let mut prefix = c[0];
    Ok(b.iter()
        .zip(&tails)
        .zip(&c[1..])
        .map(|((&bj, &tail), &cj)| {
            let avg = prefix + 0.5 * cj;
            prefix += cj;
            tail - problem.a(bj) * avg
        })
        .collect())
}

/// `∇_b J = D(c) (g - gamma (u_n(1) - beta) 1)`.
pub fn gradient_b(model: &ShallowModel, problem: &ProblemSpec, config: &SolverConfig) -> Result<Vec<f64>> {
    let g = compute_g_with(model, problem, &config.rule())?;
    Ok(gradient_from_g(model, problem, config.gamma, &g))
}

pub(crate) fn gradient_from_g(model: &ShallowModel, problem: &ProblemSpec, gamma: f64, g: &[f64]) -> Vec<f64> {
    let shift = gamma * (model.value_at_one() - problem.beta());
    model.coefficients()[1..]
        .iter()
        .zip(g)
        .map(|(c, gj)| c * (gj - shift))
        .collect()
}

/// `g'_j = -f(b_j) - a'(b_j) (averaged u_n'(b_j))`.
pub fn compute_gprime(model: &ShallowModel, problem: &ProblemSpec) -> Vec<f64> {
    let c = model.coefficients();
    let mut prefix = c[0];
    model
        .breakpoints()
        .iter()
        .zip(&c[1..])
        .map(|(&bj, &cj)| {
            let avg = prefix + 0.5 * cj;
            prefix += cj;
            -problem.f(bj) - problem.a_prime(bj) * avg
        })
        .collect()
}

pub fn classify(model: &ShallowModel, problem: &ProblemSpec, config: &SolverConfig) -> Result<NeuronClassification> {
    let g = compute_g_with(model, problem, &config.rule())?;
    Ok(classify_with_g(model, problem, config, g))
}

fn classify_with_g(
    model: &ShallowModel,
    problem: &ProblemSpec,
    config: &SolverConfig,
    g: Vec<f64>,
) -> NeuronClassification {
    let mut gprime = compute_gprime(model, problem);
    let (mut s1, mut s2) = (Vec::new(), Vec::new());
    let c = model.coefficients();
    for (i, &bj) in model.breakpoints().iter().enumerate() {
        let j = i + 1;
        if problem.is_interface(bj, INTERFACE_TOL) {
            gprime[i] = f64::NAN;
            s2.push(j);
        } else if c[j].abs() < config.delta_c || !(bj > 0.0 && bj < 1.0) {
            s1.push(j);
        } else if !(gprime[i].abs() >= config.delta_g) {
            s2.push(j);
        }
    }
    NeuronClassification { s1, s2, g, gprime }
}

/// Newton direction on the free breakpoints; zero on `S1 ∪ S2`.
///
/// With `r = gamma (u_n(1) - beta) 1 - g`, the reduced Newton system is
/// `(diag(g') + gamma 1 c^T) p = r` on the free set, solved by
/// Sherman–Morrison:
/// `p_i = (r_i - gamma gbar / zeta) / g'_i`, `gbar = sum c_j r_j / g'_j`,
/// `zeta = 1 + gamma sum c_j / g'_j`.
pub fn newton_direction(
    model: &ShallowModel,
    problem: &ProblemSpec,
    config: &SolverConfig,
    cls: &NeuronClassification,
) -> Result<Vec<f64>> {
    let beta_bar = model.value_at_one() - problem.beta();
    direction_from_parts(&model.coefficients()[1..], cls, config.gamma, beta_bar)
}

fn direction_from_parts(c: &[f64], cls: &NeuronClassification, gamma: f64, beta_bar: f64) -> Result<Vec<f64>> {
    let free = cls.free_mask();
    let n = c.len();
    let r: Vec<f64> = cls.g.iter().map(|gj| gamma * beta_bar - gj).collect();
    let (mut w, mut gbar) = (0.0, 0.0);
    for i in (0..n).filter(|&i| free[i]) {
        w += c[i] / cls.gprime[i];
        gbar += c[i] * r[i] / cls.gprime[i];
    }
    if !free.iter().any(|&f| f) {
        return Ok(vec![0.0; n]);
    }
    let zeta = 1.0 + gamma * w;
    if !(zeta.abs() >= ZETA_MIN) {
        return Err(RitzError::SingularReducedHessian { zeta });
    }
    let corr = gamma * gbar / zeta;
    Ok((0..n)
        .map(|i| if free[i] { (r[i] - corr) / cls.gprime[i] } else { 0.0 })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub eta: f64,
    /// `J` at `eta = 0`.
    pub energy0: f64,
    /// `J` at the returned `eta`.
    pub energy: f64,
    /// No decrease found; `eta = 0`.
    pub stalled: bool,
}

/// Sort `(b, c)` pairs jointly by `b` and clamp into `(margin, 1 - margin)`.
pub(crate) fn sort_clamp(b: &[f64], c: &[f64], margin: f64) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = b
        .iter()
        .map(|x| x.clamp(margin, 1.0 - margin))
        .zip(c[1..].iter().copied())
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut cc = Vec::with_capacity(c.len());
    cc.push(c[0]);
    let bb = pairs
        .into_iter()
        .map(|(x, ci)| {
            cc.push(ci);
            x
        })
        .collect();
    (bb, cc)
}

/// `J(c, b)` for possibly unsorted breakpoints; non-finite or failed
/// evaluations come back as `+inf`.
fn trial_energy(model: &ShallowModel, problem: &ProblemSpec, config: &SolverConfig, rule: &QuadratureRule, b: &[f64]) -> f64 {
    let (b, c) = sort_clamp(b, model.coefficients(), LINE_SEARCH_MARGIN);
    let trial = ShallowModel::from_parts_unchecked(model.alpha(), b, c);
    let eval = || -> Result<f64> {
        let s = stiffness_entries(trial.breakpoints(), problem, rule)?;
        let rhs = assemble_rhs(trial.breakpoints(), problem, rule)?;
        energy_from_parts(&trial, problem, config.gamma, &s, &rhs)
    };
    eval().unwrap_or(f64::INFINITY)
}

/// Golden-section search for `eta` in `[0, eta_max]` minimizing
/// `J(c, sort_clamp(b + eta p))`, with `c` held fixed.
pub fn line_search(model: &ShallowModel, problem: &ProblemSpec, config: &SolverConfig, p: &[f64]) -> LineSearch {
    let rule = config.rule();
    let b = model.breakpoints();
    let phi = |eta: f64| {
        let moved: Vec<f64> = b.iter().zip(p).map(|(x, d)| x + eta * d).collect();
        trial_energy(model, problem, config, &rule, &moved)
    };
    let j0 = phi(0.0);
    let mut best = (0.0, j0);
    let mut keep = |eta: f64, j: f64| {
        if j < best.1 {
            best = (eta, j);
        }
    };

    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, config.eta_max);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = phi(x1);
    let mut f2 = phi(x2);
    keep(x1, f1);
    keep(x2, f2);
    for _ in 0..GOLDEN_ITERS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = phi(x1);
            keep(x1, f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = phi(x2);
            keep(x2, f2);
        }
    }
    let (eta, j) = best;
    if eta > 0.0 && j < j0 {
        LineSearch { eta, energy0: j0, energy: j, stalled: false }
    } else {
        LineSearch { eta: 0.0, energy0: j0, energy: j0, stalled: true }
    }
}

/// Sort pairs by breakpoint and push colliding breakpoints apart by
/// [`COLLISION_NUDGE`], keeping them inside `(0, 1)`.
pub(crate) fn canonicalize(b: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (mut b, c) = sort_clamp(b, c, COLLISION_NUDGE);
    let n = b.len();
    for i in 1..n {
        if b[i] - b[i - 1] < COLLISION_NUDGE {
            b[i] = b[i - 1] + COLLISION_NUDGE;
        }
    }
    // a crowd at the right end may have been pushed past 1
    if n > 0 && b[n - 1] > 1.0 - COLLISION_NUDGE {
        b[n - 1] = 1.0 - COLLISION_NUDGE;
        for i in (0..n - 1).rev() {
            if b[i + 1] - b[i] < COLLISION_NUDGE {
                b[i] = b[i + 1] - COLLISION_NUDGE;
            }
        }
    }
    (b, c)
}

/// Move each neuron in `s1` (1-based, ascending) to the midpoint of a
/// randomly chosen element of the live partition, `m = draw(n + 1)` in
/// `1..=n+1`, zeroing its coefficient; then sort and separate collisions.
pub fn redistribute_with<D: FnMut(usize) -> usize>(
    b: &[f64],
    c: &[f64],
    s1: &[usize],
    mut draw: D,
) -> (Vec<f64>, Vec<f64>) {
    let n = b.len();
    let mut ext: Vec<f64> = std::iter::once(0.0).chain(b.iter().copied()).chain(std::iter::once(1.0)).collect();
    let mut c = c.to_vec();
    let mut order = s1.to_vec();
    order.sort_unstable();
    for l in order {
        let m = draw(n + 1);
        debug_assert!((1..=n + 1).contains(&m));
        ext[l] = 0.5 * (ext[m - 1] + ext[m]);
        c[l] = 0.0;
    }
    canonicalize(&ext[1..=n], &c)
}

pub fn redistribute(mut state: DbnState, cls: &NeuronClassification) -> DbnState {
    let rng = &mut state.rng;
    let (b, c) = redistribute_with(
        state.model.breakpoints(),
        state.model.coefficients(),
        &cls.s1,
        |k| rng.gen_range(1..=k),
    );
    state.model = ShallowModel::from_parts_unchecked(state.model.alpha(), b, c);
    state
}

/// Per-iteration diagnostics beyond what the report stores.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub k: usize,
    /// `J` right after the linear solve.
    pub energy: f64,
    /// `J` after the breakpoint step, before redistribution.
    pub energy_after_step: f64,
    pub eta: f64,
    pub stalled: bool,
    /// Neurons moved by redistribution.
    pub redistributed: usize,
    pub frozen: usize,
    pub relative_residual: f64,
    pub e_n: Option<f64>,
    pub ms: f64,
}

#[derive(Debug, Clone)]
pub struct DbnRun {
    pub model: ShallowModel,
    pub report: RunReport,
    pub trace: Vec<IterationTrace>,
}

pub fn dbn_solve(problem: &ProblemSpec, config: &SolverConfig, b0: &[f64]) -> Result<(ShallowModel, RunReport)> {
    let run = dbn_run(problem, config, b0)?;
    Ok((run.model, run.report))
}

/// [`dbn_solve`] from `n` uniform breakpoints.
pub fn dbn_solve_uniform(problem: &ProblemSpec, config: &SolverConfig, n: usize) -> Result<(ShallowModel, RunReport)> {
    dbn_solve(problem, config, &uniform_breakpoints(n))
}

/// [`dbn_solve`] with the full iteration trace.
pub fn dbn_run(problem: &ProblemSpec, config: &SolverConfig, b0: &[f64]) -> Result<DbnRun> {
    config.validate()?;
    let n = b0.len();
    let model = ShallowModel::new(problem.alpha(), b0.to_vec(), vec![0.0; n + 1])?;
    let mut state = DbnState::new(model, config.seed);
    let meter = match problem.exact() {
        Some(_) => Some(H1ErrorMeter::new(problem)?),
        None => None,
    };
    let rule = config.rule();
    let mut report = RunReport::new(problem.name(), "dbn", config, &state.model);
    let mut trace = Vec::new();
    let mut grad0 = None;

    for k in 0..config.max_iters {
        let t0 = Instant::now();
        // (i) linear parameters
        let (b, _) = canonicalize(state.model.breakpoints(), state.model.coefficients());
        let solve = solve_penalized(&b, problem, config)?;
        state.model = ShallowModel::from_parts_unchecked(problem.alpha(), b, solve.c.clone());
        let s = solve.stiffness.s.clone();
        let rhs = assemble_rhs(state.model.breakpoints(), problem, &rule)?;
        let j = energy_from_parts(&state.model, problem, config.gamma, &s, &rhs)?;

        // (ii)-(iii) gradient and classification
        let g = compute_g_with(&state.model, problem, &rule)?;
        let grad_b = gradient_from_g(&state.model, problem, config.gamma, &g);
        let grad_c = {
            let ac = apply_stiffness(&solve.stiffness, state.model.coefficients());
            let dc = dot(&solve.stiffness.d, state.model.coefficients());
            ac.iter()
                .zip(&solve.stiffness.d)
                .zip(&solve.load)
                .map(|((a, d), f)| a + config.gamma * d * dc - f)
                .collect::<Vec<_>>()
        };
        let grad_norm = (dot(&grad_b, &grad_b) + dot(&grad_c, &grad_c)).sqrt();
        let g0 = *grad0.get_or_insert(grad_norm);
        let rr = grad_norm / (1.0 + g0);
        let prev_rr = state.relative_residual;
        state.energy = j;
        state.relative_residual = rr;
        state.iteration = k;
        let e_n = match &meter {
            Some(m) => Some(m.model_error(&state.model)?),
            None => None,
        };
        if k > 0 && !config.fixed_budget && (rr - prev_rr).abs() < config.tau {
            let ms = t0.elapsed().as_secs_f64() * 1e3;
            report.iterations.push(IterationRecord { k, energy: j, e_n, xi: None, ms });
            trace.push(IterationTrace {
                k,
                energy: j,
                energy_after_step: j,
                eta: 0.0,
                stalled: false,
                redistributed: 0,
                frozen: 0,
                relative_residual: rr,
                e_n,
                ms,
            });
            report.model = (&state.model).into();
            return Ok(DbnRun { model: state.model, report, trace });
        }

        let mut cls = classify_with_g(&state.model, problem, config, g);
        // (iv) direction, with one retry after freezing the worst neuron
        let p = match newton_direction(&state.model, problem, config, &cls) {
            Ok(p) => p,
            Err(RitzError::SingularReducedHessian { .. }) => {
                let c = state.model.coefficients();
                let worst = (1..=n)
                    .filter(|&j| cls.is_free(j))
                    .max_by(|&x, &y| {
                        (c[x] / cls.gprime[x - 1]).abs().total_cmp(&(c[y] / cls.gprime[y - 1]).abs())
                    });
                if let Some(w) = worst {
                    cls.s2.push(w);
                    cls.s2.sort_unstable();
                }
                newton_direction(&state.model, problem, config, &cls)?
            }
            Err(e) => return Err(e),
        };

        // (v) damped step
        let mut energy_after_step = j;
        let mut eta = 0.0;
        let mut stalled = false;
        if p.iter().any(|&x| x != 0.0) && p.iter().all(|x| x.is_finite()) {
            let ls = line_search(&state.model, problem, config, &p);
            eta = ls.eta;
            stalled = ls.stalled;
            energy_after_step = ls.energy;
            if eta > 0.0 {
                let moved: Vec<f64> = state.model.breakpoints().iter().zip(&p).map(|(x, d)| x + eta * d).collect();
                let (b, c) = sort_clamp(&moved, state.model.coefficients(), LINE_SEARCH_MARGIN);
                // keep neuron identities for redistribution: only S1 entries
                // are moved next, and those have p = 0, so re-locate them
                let s1_points: Vec<f64> = cls.s1.iter().map(|&l| state.model.breakpoints()[l - 1]).collect();
                state.model = ShallowModel::from_parts_unchecked(problem.alpha(), b, c);
                cls.s1 = relocate(state.model.breakpoints(), &s1_points);
            }
        }

        // (vi) redistribution
        let redistributed = cls.s1.len();
        state = redistribute(state, &cls);

        let ms = t0.elapsed().as_secs_f64() * 1e3;
        report.iterations.push(IterationRecord { k, energy: j, e_n, xi: None, ms });
        trace.push(IterationTrace {
            k,
            energy: j,
            energy_after_step,
            eta,
            stalled,
            redistributed,
            frozen: cls.s2.len(),
            relative_residual: rr,
            e_n,
            ms,
        });
    }

    // final linear solve at the last breakpoints
    let (b, _) = canonicalize(state.model.breakpoints(), state.model.coefficients());
    let c = solve_penalized(&b, problem, config)?.c;
    state.model = ShallowModel::from_parts_unchecked(problem.alpha(), b, c);
    report.model = (&state.model).into();
    Ok(DbnRun { model: state.model, report, trace })
}

/// 1-based indices of `points` within sorted `b` (first unused match).
fn relocate(b: &[f64], points: &[f64]) -> Vec<usize> {
    let mut used = vec![false; b.len()];
    let mut out = Vec::with_capacity(points.len());
    for &x in points {
        let start = b.partition_point(|&y| y < x);
        if let Some(i) = (start..b.len()).chain((0..start).rev()).find(|&i| !used[i]) {
            used[i] = true;
            out.push(i + 1);
        }
    }
    out.sort_unstable();
    out
}
