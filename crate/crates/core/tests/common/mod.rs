//! Independent oracles shared by the integration tests: dense linear
//! algebra through nalgebra and finite differences.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use ritz_dbn::{
    energy, gradient_b, make_problem, solve_coefficients, ProblemId, ProblemSpec, ShallowModel, SolverConfig,
};

pub fn catalog() -> Vec<(String, ProblemSpec)> {
    [
        ProblemId::ExpSolution,
        ProblemId::XTwoThirds,
        ProblemId::Interface { k: 1e3 },
        ProblemId::Manufactured("linear".into()),
        ProblemId::Manufactured("quadratic".into()),
        ProblemId::Manufactured("variable".into()),
    ]
    .into_iter()
    .map(|id| (id.to_string(), make_problem(&id).unwrap()))
    .collect()
}

/// `n` sorted points in (0, 1) with gaps at least `min_gap` (also to the
/// ends) and, when given, at least `min_gap` away from `avoid`.
pub fn random_breakpoints(rng: &mut ChaCha8Rng, n: usize, min_gap: f64, avoid: &[f64]) -> Vec<f64> {
    loop {
        let mut b: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        b.sort_by(f64::total_cmp);
        let ok_gaps = std::iter::once(0.0)
            .chain(b.iter().copied())
            .chain(std::iter::once(1.0))
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] - w[0] >= min_gap);
        let ok_avoid = b.iter().all(|x| avoid.iter().all(|a| (x - a).abs() >= min_gap));
        if ok_gaps && ok_avoid {
            return b;
        }
    }
}

/// Random breakpoints with the optimal coefficients, perturbed so that
/// the boundary residual and the gradient are both non-trivial.
pub fn random_state(rng: &mut ChaCha8Rng, problem: &ProblemSpec, config: &SolverConfig, n: usize) -> ShallowModel {
    let b = random_breakpoints(rng, n, 2e-3, problem.interfaces());
    let mut c = solve_coefficients(&b, problem, config).unwrap();
    for ci in c.iter_mut() {
        *ci += rng.gen_range(-0.1..0.1) * (1.0 + ci.abs());
    }
    ShallowModel::new(problem.alpha(), b, c).unwrap()
}

/// `(A)_{ij} = ∫_{max(b_i, b_j)}^1 a`, with `b_0 = 0`, by adaptive Simpson
/// on each side of the interfaces; deliberately independent of the
/// library's assembly.
pub fn dense_stiffness(b: &[f64], problem: &ProblemSpec) -> DMatrix<f64> {
    let pts: Vec<f64> = std::iter::once(0.0).chain(b.iter().copied()).collect();
    let tails: Vec<f64> = pts.iter().map(|&p| integrate(|x| problem.a(x), p, 1.0, problem.interfaces())).collect();
    let m = pts.len();
    DMatrix::from_fn(m, m, |i, j| tails[i.max(j)])
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64]) -> f64 {
    let mut cuts = vec![lo];
    cuts.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    cuts.push(hi);
    cuts.windows(2).map(|w| simpson(&f, w[0], w[1], 1e-13, 40)).sum()
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    // open at the ends so one-sided limits are used at jumps
    let (a1, b1) = (a + (b - a) * 1e-15, b - (b - a) * 1e-15);
    let m = 0.5 * (a1 + b1);
    let whole = (b1 - a1) / 6.0 * (f(a1) + 4.0 * f(m) + f(b1));
    rec(f, a1, b1, f(a1), f(m), f(b1), whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Central differences of `J` in each breakpoint, `c` held fixed.
pub fn fd_gradient(model: &ShallowModel, problem: &ProblemSpec, config: &SolverConfig, h: f64) -> Vec<f64> {
    let b = model.breakpoints().to_vec();
    (0..b.len())
        .map(|j| {
            let shifted = |d: f64| {
                let mut bb = b.clone();
                bb[j] += d;
                let m = model.with_parts(bb, model.coefficients().to_vec()).unwrap();
                energy(&m, problem, config).unwrap()
            };
            (shifted(h) - shifted(-h)) / (2.0 * h)
        })
        .collect()
}

/// Central differences of `gradient_b`, column by column.
pub fn fd_hessian(model: &ShallowModel, problem: &ProblemSpec, config: &SolverConfig, h: f64) -> DMatrix<f64> {
    let b = model.breakpoints().to_vec();
    let n = b.len();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let grad = |d: f64| {
            let mut bb = b.clone();
            bb[k] += d;
            let m = model.with_parts(bb, model.coefficients().to_vec()).unwrap();
            gradient_b(&m, problem, config).unwrap()
        };
        let (gp, gm) = (grad(h), grad(-h));
        for j in 0..n {
            out[(j, k)] = (gp[j] - gm[j]) / (2.0 * h);
        }
    }
    out
}

/// `D(c) (diag(g') + gamma 1 c^T)` over the interior neurons.
pub fn dense_hessian(c: &[f64], gprime: &[f64], gamma: f64) -> DMatrix<f64> {
    let n = gprime.len();
    DMatrix::from_fn(n, n, |j, k| c[j] * (if j == k { gprime[j] } else { 0.0 } + gamma * c[k]))
}

/// Newton step on the free set by dense LU of `diag(g'_F) + gamma 1 c_F^T`.
pub fn dense_direction(c: &[f64], gprime: &[f64], g: &[f64], gamma: f64, beta_bar: f64, free: &[bool]) -> Vec<f64> {
    let idx: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
    let m = idx.len();
    let a = DMatrix::from_fn(m, m, |r, s| {
        (if r == s { gprime[idx[r]] } else { 0.0 }) + gamma * c[idx[s]]
    });
    let rhs = DVector::from_iterator(m, idx.iter().map(|&i| gamma * beta_bar - g[i]));
    let sol = a.lu().solve(&rhs).expect("reduced Hessian is regular");
    let mut p = vec![0.0; free.len()];
    for (r, &i) in idx.iter().enumerate() {
        p[i] = sol[r];
    }
    p
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}
