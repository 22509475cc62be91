//! Composite Gauss–Legendre quadrature.
//!
//! Integrands seen by the solvers are smooth between breakpoints, problem
//! interfaces and source singularities, so every routine here works on
//! panels whose endpoints are supplied by the caller. Near an endpoint
//! singularity the panels are graded geometrically with ratio ½.

use std::f64::consts::PI;

use crate::error::{Result, RitzError};
use crate::problem::ProblemSpec;

/// Number of halvings used when grading towards a singular endpoint.
pub const GRADED_LEVELS: usize = 60;

/// A Gauss–Legendre rule with `order` nodes, applied on
/// `panels_per_interval` equal panels of every integration interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    panels_per_interval: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Rule with one panel per interval.
    ///
    /// Panics if `order == 0`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be at least 1");
        let (nodes, weights) = gauss_legendre(order);
        Self {
            order,
            panels_per_interval: 1,
            nodes,
            weights,
        }
    }

    pub fn with_panels(mut self, panels_per_interval: usize) -> Self {
        assert!(panels_per_interval >= 1, "at least one panel per interval");
        self.panels_per_interval = panels_per_interval;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn panels_per_interval(&self) -> usize {
        self.panels_per_interval
    }

    /// Reference nodes on [-1, 1].
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Single-panel rule on `[lo, hi]`.
    fn panel<G: Fn(f64) -> f64 + ?Sized>(&self, g: &G, lo: f64, hi: f64) -> Result<f64> {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = g(mid + half * x);
            if !v.is_finite() {
                return Err(RitzError::NonFiniteIntegrand { lo, hi });
            }
            acc += w * v;
        }
        Ok(acc * half)
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::new(8)
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1],
/// ascending in the node.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess followed by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre approximation of `∫_lo^hi g`.
pub fn integrate<G: Fn(f64) -> f64 + ?Sized>(
    g: &G,
    lo: f64,
    hi: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    debug_assert!(lo <= hi, "integrate: lo > hi");
    if hi <= lo {
        return Ok(0.0);
    }
    let panels = rule.panels_per_interval;
    let width = (hi - lo) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * width;
        let b = if p + 1 == panels { hi } else { a + width };
        acc += rule.panel(g, a, b)?;
    }
    Ok(acc)
}

/// Which end of the interval the panels are clustered at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradeToward {
    Lo,
    Hi,
}

/// `∫_lo^hi g` on `panels` panels whose widths halve towards one end.
///
/// The innermost (floor) panel has the same width as its neighbour, so the
/// partition is `lo, lo + w/2^(panels-1), ..., lo + w/2, hi` for grading
/// towards `lo`.
pub fn integrate_graded<G: Fn(f64) -> f64 + ?Sized>(
    g: &G,
    lo: f64,
    hi: f64,
    toward: GradeToward,
    panels: usize,
    rule: &QuadratureRule,
) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let width = hi - lo;
    // keep the floor panel resolvable in floating point at its anchor
    let anchor = match toward {
        GradeToward::Lo => lo.abs(),
        GradeToward::Hi => hi.abs(),
    };
    let mut panels = panels.max(1);
    while panels > 1 && width * 0.5f64.powi(panels as i32 - 1) < 8.0 * f64::EPSILON * anchor {
        panels -= 1;
    }
    let mut acc = 0.0;
    // Sum from the smallest panel outwards.
    let mut scale = 0.5f64.powi(panels as i32 - 1);
    let mut inner = 0.0;
    for _ in 0..panels {
        let outer = scale;
        let (a, b) = match toward {
            GradeToward::Lo => (lo + inner * width, lo + outer * width),
            GradeToward::Hi => (hi - outer * width, hi - inner * width),
        };
        acc += rule.panel(g, a, b)?;
        inner = outer;
        scale *= 2.0;
    }
    Ok(acc)
}

/// `∫_lo^hi g` split at the `singular` points lying inside the interval.
///
/// Pieces that end on (or close to) a singular point are graded towards it,
/// so the integrand only needs to be finite at interior nodes.
pub fn integrate_split<G: Fn(f64) -> f64 + ?Sized>(
    g: &G,
    lo: f64,
    hi: f64,
    singular: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let mut cuts = vec![lo];
    cuts.extend(singular.iter().copied().filter(|&s| s > lo && s < hi));
    cuts.push(hi);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        acc += integrate_piece(g, w[0], w[1], singular, rule)?;
    }
    Ok(acc)
}

/// `∫_lo^hi g` for an integrand with jump discontinuities at `jumps` and
/// unbounded behaviour at `singular`: split at both, graded at the latter.
pub fn integrate_with_breaks<G: Fn(f64) -> f64 + ?Sized>(
    g: &G,
    lo: f64,
    hi: f64,
    jumps: &[f64],
    singular: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    let mut start = lo;
    for &p in jumps.iter().filter(|&&p| p > lo && p < hi) {
        acc += integrate_split(g, start, p, singular, rule)?;
        start = p;
    }
    acc += integrate_split(g, start, hi, singular, rule)?;
    Ok(acc)
}

fn integrate_piece<G: Fn(f64) -> f64 + ?Sized>(
    g: &G,
    p: f64,
    q: f64,
    singular: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    let width = q - p;
    let left = singular
        .iter()
        .copied()
        .filter(|&s| s <= p && p - s <= width)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))));
    let right = singular
        .iter()
        .copied()
        .filter(|&s| s >= q && s - q <= width)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s))));
    match (left, right) {
        (None, None) => integrate(g, p, q, rule),
        (Some(_), Some(_)) => {
            let mid = 0.5 * (p + q);
            Ok(integrate_piece(g, p, mid, singular, rule)? + integrate_piece(g, mid, q, singular, rule)?)
        }
        (Some(s), None) => graded_from(g, p, q, s, GradeToward::Lo, rule),
        (None, Some(s)) => graded_from(g, p, q, s, GradeToward::Hi, rule),
    }
}

/// Panels with endpoints `s ± (reach)/2^k` clipped to `[p, q]`.
fn graded_from<G: Fn(f64) -> f64 + ?Sized>(
    g: &G,
    p: f64,
    q: f64,
    s: f64,
    toward: GradeToward,
    rule: &QuadratureRule,
) -> Result<f64> {
    let (near, far) = match toward {
        GradeToward::Lo => (p, q),
        GradeToward::Hi => (q, p),
    };
    let reach = (far - s).abs();
    let gap = (near - s).abs();
    let mut pts = vec![far];
    let mut d = reach;
    for _ in 0..GRADED_LEVELS {
        d *= 0.5;
        if d <= gap || d < 8.0 * f64::EPSILON * s.abs() {
            break;
        }
        pts.push(match toward {
            GradeToward::Lo => s + d,
            GradeToward::Hi => s - d,
        });
    }
    pts.push(near);
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let (a, b) = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
        if b > a {
            acc += rule.panel(g, a, b)?;
        }
    }
    Ok(acc)
}

/// `∫_t^1 f`, from the closed-form antiderivative when the problem has one.
pub fn integrate_f_tail(problem: &ProblemSpec, t: f64) -> Result<f64> {
    if let Some(big_f) = problem.f_antiderivative() {
        let v = big_f(1.0) - big_f(t);
        if !v.is_finite() {
            return Err(RitzError::NonFiniteIntegrand { lo: t, hi: 1.0 });
        }
        return Ok(v);
    }
    let rule = QuadratureRule::new(16);
    integrate_with_breaks(problem.f_fn(), t, 1.0, problem.interfaces(), problem.singular_points(), &rule)
}
