use std::time::Instant;

use crate::dbn::{canonicalize, compute_g_with, gradient_from_g, LINE_SEARCH_MARGIN};
use crate::error::{Result, RitzError};
use crate::linear_system::{apply_stiffness, assemble_rhs, dot, stiffness_entries, StiffnessData};
use crate::metrics::H1ErrorMeter;
use crate::model::{energy_from_parts, ShallowModel, SolverConfig};
use crate::problem::ProblemSpec;
use crate::quadrature::QuadratureRule;
use crate::report::{IterationRecord, RunReport};

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const BRACKET_STEPS: usize = 30;
const ZOOM_STEPS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOptions {
    pub max_iters: usize,
    /// Stop once `|∇J|_2` falls below this.
    pub grad_tol: f64,
    /// Per-parameter switch over `(c_0..c_n, b_1..b_n)`; `false` freezes it.
    pub mask: Option<Vec<bool>>,
}

impl BfgsOptions {
    pub fn new(max_iters: usize) -> Self {
        Self { max_iters, grad_tol: 1e-8, mask: None }
    }
}

/// `J` and its gradient over `x = (c, b)` with unsorted `b` allowed: the
/// pairs are sorted (and clamped into the domain) before evaluation.
struct Objective<'a> {
    problem: &'a ProblemSpec,
    gamma: f64,
    alpha: f64,
    n: usize,
    rule: QuadratureRule,
    mask: Option<Vec<bool>>,
}

impl Objective<'_> {
    fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
        let n = self.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let b: Vec<f64> = x[n + 1..].iter().map(|v| v.clamp(LINE_SEARCH_MARGIN, 1.0 - LINE_SEARCH_MARGIN)).collect();
        perm.sort_by(|&i, &j| b[i].total_cmp(&b[j]));
        let bs = perm.iter().map(|&i| b[i]).collect();
        let mut cs = Vec::with_capacity(n + 1);
        cs.push(x[0]);
        cs.extend(perm.iter().map(|&i| x[1 + i]));
        (bs, cs, perm)
    }

    #[cfg(test)]
    fn value(&self, x: &[f64]) -> f64 {
        let (b, c, _) = self.split(x);
        let model = ShallowModel::from_parts_unchecked(self.alpha, b, c);
        let eval = || -> Result<f64> {
            let s = stiffness_entries(model.breakpoints(), self.problem, &self.rule)?;
            let rhs = assemble_rhs(model.breakpoints(), self.problem, &self.rule)?;
            energy_from_parts(&model, self.problem, self.gamma, &s, &rhs)
        };
        eval().unwrap_or(f64::INFINITY)
    }

    fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = self.n;
        let (b, c, perm) = self.split(x);
        let model = ShallowModel::from_parts_unchecked(self.alpha, b, c);
        let s = stiffness_entries(model.breakpoints(), self.problem, &self.rule)?;
        let rhs = assemble_rhs(model.breakpoints(), self.problem, &self.rule)?;
        let j = energy_from_parts(&model, self.problem, self.gamma, &s, &rhs)?;
        let d: Vec<f64> = std::iter::once(1.0).chain(model.breakpoints().iter().map(|b| 1.0 - b)).collect();
        let data = StiffnessData { s, d };
        // ∇_c J = 𝓐 c - 𝓕
        let ac = apply_stiffness(&data, model.coefficients());
        let dc = dot(&data.d, model.coefficients());
        let shift = self.gamma * (self.problem.beta() - self.alpha);
        let grad_c: Vec<f64> = ac
            .iter()
            .zip(&data.d)
            .zip(&rhs)
            .map(|((a, di), f)| a + self.gamma * di * dc - (f + shift * di))
            .collect();
        let g = compute_g_with(&model, self.problem, &self.rule)?;
        let grad_b = gradient_from_g(&model, self.problem, self.gamma, &g);

        let mut grad = vec![0.0; 2 * n + 1];
        grad[0] = grad_c[0];
        for (k, &i) in perm.iter().enumerate() {
            grad[1 + i] = grad_c[1 + k];
            grad[n + 1 + i] = grad_b[k];
        }
        if let Some(mask) = &self.mask {
            for (gi, &on) in grad.iter_mut().zip(mask) {
                if !on {
                    *gi = 0.0;
                }
            }
        }
        Ok((j, grad))
    }
}

/// Full-memory BFGS over all parameters, run for `config.max_iters`
/// iterations at most.
pub fn bfgs_solve(problem: &ProblemSpec, config: &SolverConfig, model0: &ShallowModel) -> Result<(ShallowModel, RunReport)> {
    bfgs_solve_masked(problem, config, model0, &BfgsOptions::new(config.max_iters))
}

pub fn bfgs_solve_masked(
    problem: &ProblemSpec,
    config: &SolverConfig,
    model0: &ShallowModel,
    opts: &BfgsOptions,
) -> Result<(ShallowModel, RunReport)> {
    config.validate()?;
    let n = model0.n();
    let dim = 2 * n + 1;
    if let Some(mask) = &opts.mask {
        if mask.len() != dim {
            return Err(RitzError::InvalidConfig(format!("mask of length {} for {dim} parameters", mask.len())));
        }
    }
    let obj = Objective {
        problem,
        gamma: config.gamma,
        alpha: model0.alpha(),
        n,
        rule: config.rule(),
        mask: opts.mask.clone(),
    };
    let meter = match problem.exact() {
        Some(_) => Some(H1ErrorMeter::new(problem)?),
        None => None,
    };
    let error_of = |x: &[f64]| -> Result<Option<f64>> {
        match &meter {
            Some(m) => {
                let (b, c, _) = obj.split(x);
                Ok(Some(m.model_error(&ShallowModel::from_parts_unchecked(obj.alpha, b, c))?))
            }
            None => Ok(None),
        }
    };

    let mut x: Vec<f64> = model0.coefficients().iter().chain(model0.breakpoints()).copied().collect();
    let (mut fx, mut gx) = obj.value_and_grad(&x)?;
    let mut h = identity(dim);
    let mut report = RunReport::new(problem.name(), "bfgs", config, model0);

    for k in 0..opts.max_iters {
        let t0 = Instant::now();
        if norm(&gx) < opts.grad_tol {
            break;
        }
        let mut p = neg_mat_vec(&h, &gx);
        if dot(&p, &gx) >= 0.0 {
            h = identity(dim);
            p = gx.iter().map(|v| -v).collect();
        }
        let step = match wolfe_search(&obj, &x, fx, &gx, &p) {
            Some(step) => step,
            None => break,
        };
        let (x_new, f_new, g_new) = step;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            bfgs_update(&mut h, &s, &y, sy);
        }
        x = x_new;
        fx = f_new;
        gx = g_new;
        report.iterations.push(IterationRecord {
            k,
            energy: fx,
            e_n: error_of(&x)?,
            xi: None,
            ms: t0.elapsed().as_secs_f64() * 1e3,
        });
    }

    let (b, c, _) = obj.split(&x);
    let (b, c) = canonicalize(&b, &c);
    let model = ShallowModel::from_parts_unchecked(obj.alpha, b, c);
    report.model = (&model).into();
    Ok((model, report))
}

type Step = (Vec<f64>, f64, Vec<f64>);

/// Strong-Wolfe line search: bracketing by doubling, then a zoom by
/// safeguarded quadratic interpolation. `None` when no acceptable step is
/// found.
fn wolfe_search(obj: &Objective<'_>, x: &[f64], f0: f64, g0: &[f64], p: &[f64]) -> Option<Step> {
    let dphi0 = dot(g0, p);
    let eval = |t: f64| -> Option<Step> {
        let xt: Vec<f64> = x.iter().zip(p).map(|(a, d)| a + t * d).collect();
        let (f, g) = obj.value_and_grad(&xt).ok()?;
        f.is_finite().then_some((xt, f, g))
    };
    let armijo = |t: f64, f: f64| f <= f0 + WOLFE_C1 * t * dphi0;
    let curvature = |g: &[f64]| dot(g, p).abs() <= -WOLFE_C2 * dphi0;

    // lo always satisfies sufficient decrease and has the lowest value seen
    let zoom = |lo: (f64, f64, f64), hi: (f64, f64)| -> Option<Step> {
        let (mut t_lo, mut f_lo, mut d_lo) = lo;
        let (mut t_hi, mut f_hi) = hi;
        let mut best: Option<Step> = None;
        for _ in 0..ZOOM_STEPS {
            let span = t_hi - t_lo;
            let mut t = 0.5 * (t_lo + t_hi);
            if f_hi.is_finite() {
                let den = 2.0 * (f_hi - f_lo - d_lo * span);
                if den > 0.0 {
                    let cand = t_lo - d_lo * span * span / den;
                    let (a, b) = if span > 0.0 { (t_lo, t_hi) } else { (t_hi, t_lo) };
                    let margin = 0.1 * span.abs();
                    if cand > a + margin && cand < b - margin {
                        t = cand;
                    }
                }
            }
            match eval(t) {
                Some((xt, f, g)) if armijo(t, f) && f < f_lo => {
                    if curvature(&g) {
                        return Some((xt, f, g));
                    }
                    let dphi = dot(&g, p);
                    if dphi * (t_hi - t_lo) >= 0.0 {
                        t_hi = t_lo;
                        f_hi = f_lo;
                    }
                    t_lo = t;
                    f_lo = f;
                    d_lo = dphi;
                    best = Some((xt, f, g));
                }
                Some((_, f, _)) => {
                    t_hi = t;
                    f_hi = f;
                }
                None => {
                    t_hi = t;
                    f_hi = f64::INFINITY;
                }
            }
        }
        // sufficient decrease without curvature is still a descent step
        best
    };

    let (mut t_prev, mut f_prev, mut d_prev) = (0.0, f0, dphi0);
    let mut t = 1.0;
    for i in 0..BRACKET_STEPS {
        let Some((xt, f, g)) = eval(t) else {
            return zoom((t_prev, f_prev, d_prev), (t, f64::INFINITY));
        };
        if !armijo(t, f) || (i > 0 && f >= f_prev) {
            return zoom((t_prev, f_prev, d_prev), (t, f));
        }
        if curvature(&g) {
            return Some((xt, f, g));
        }
        let dphi = dot(&g, p);
        if dphi >= 0.0 {
            return zoom((t, f, dphi), (t_prev, f_prev));
        }
        t_prev = t;
        f_prev = f;
        d_prev = dphi;
        t *= 2.0;
    }
    None
}

fn identity(m: usize) -> Vec<Vec<f64>> {
    (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn neg_mat_vec(h: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    h.iter().map(|row| -dot(row, v)).collect()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let rho = 1.0 / sy;
    let m = s.len();
    let hy: Vec<f64> = h.iter().map(|row| dot(row, y)).collect();
    let yhy = dot(y, &hy);
    let coef = (1.0 + rho * yhy) * rho;
    for i in 0..m {
        for j in 0..m {
            h[i][j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
