//! The shallow ReLU network `u_n(x) = alpha + sum_i c_i max(0, x - b_i)`
//! with `b_0 = 0`, which on [0, 1] is a continuous piecewise-linear
//! free-knot spline with knots `b_1 < ... < b_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RitzError};
use crate::linear_system::{assemble_rhs, stiffness_entries};
use crate::problem::ProblemSpec;
use crate::quadrature::QuadratureRule;

/// Network parameters. The sentinels `b_0 = 0` and `b_{n+1} = 1` are implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShallowModel {
    alpha: f64,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ShallowModel {
    /// Checks `0 < b_1 < ... < b_n < 1` and `c.len() == b.len() + 1`.
    pub fn new(alpha: f64, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        check_breakpoints(&b)?;
        if c.len() != b.len() + 1 {
            return Err(RitzError::InvalidModel(format!(
                "{} coefficients for {} breakpoints",
                c.len(),
                b.len()
            )));
        }
        if !alpha.is_finite() || c.iter().any(|v| !v.is_finite()) {
            return Err(RitzError::InvalidModel("non-finite parameter".into()));
        }
        Ok(Self { alpha, b, c })
    }

    /// Breakpoints `i/(n+1)`, coefficients zero.
    pub fn uniform(n: usize, alpha: f64) -> Self {
        Self {
            alpha,
            b: uniform_breakpoints(n),
            c: vec![0.0; n + 1],
        }
    }

    /// Skips validation; used for trial points where knots may touch.
    pub(crate) fn from_parts_unchecked(alpha: f64, b: Vec<f64>, c: Vec<f64>) -> Self {
        debug_assert_eq!(c.len(), b.len() + 1);
        Self { alpha, b, c }
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.b
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    pub fn into_parts(self) -> (f64, Vec<f64>, Vec<f64>) {
        (self.alpha, self.b, self.c)
    }

    pub fn set_coefficients(&mut self, c: Vec<f64>) -> Result<()> {
        if c.len() != self.b.len() + 1 {
            return Err(RitzError::InvalidModel("coefficient length mismatch".into()));
        }
        self.c = c;
        Ok(())
    }

    /// Replace the breakpoints and coefficients together.
    pub fn with_parts(&self, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        Self::new(self.alpha, b, c)
    }

    /// `(0, b_1, ..., b_n, 1)`.
    pub fn nodes(&self) -> Vec<f64> {
        let mut nodes = Vec::with_capacity(self.b.len() + 2);
        nodes.push(0.0);
        nodes.extend_from_slice(&self.b);
        nodes.push(1.0);
        nodes
    }

    /// Slope on each element `[b_j, b_{j+1}]`: the partial sums of `c`.
    pub fn slopes(&self) -> Vec<f64> {
        self.c
            .iter()
            .scan(0.0, |acc, &ci| {
                *acc += ci;
                Some(*acc)
            })
            .collect()
    }

    /// `u_n(1) = alpha + sum_i c_i (1 - b_i)`.
    pub fn value_at_one(&self) -> f64 {
        self.alpha + self.c[0] + self.b.iter().zip(&self.c[1..]).map(|(b, c)| c * (1.0 - b)).sum::<f64>()
    }

    /// `u_n(x)`, exactly.
    pub fn evaluate(&self, x: f64) -> f64 {
        let mut v = self.alpha + self.c[0] * x.max(0.0);
        for (b, c) in self.b.iter().zip(&self.c[1..]) {
            v += c * (x - b).max(0.0);
        }
        v
    }

    /// `u_n'(x)`; at a breakpoint the right limit is returned.
    pub fn evaluate_derivative(&self, x: f64) -> f64 {
        let mut v = if x >= 0.0 { self.c[0] } else { 0.0 };
        for (b, c) in self.b.iter().zip(&self.c[1..]) {
            if *b <= x {
                v += c;
            }
        }
        v
    }

    /// Average of the one-sided slopes at `b_j` (`j` in `1..=n`):
    /// `sum_{i<j} c_i + c_j / 2`.
    pub fn averaged_slope(&self, j: usize) -> f64 {
        self.c[..j].iter().sum::<f64>() + 0.5 * self.c[j]
    }
}

/// `i / (n + 1)` for `i = 1..=n`.
pub fn uniform_breakpoints(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

pub(crate) fn check_breakpoints(b: &[f64]) -> Result<()> {
    if let Some(&first) = b.first() {
        if !(first > 0.0) {
            return Err(RitzError::InvalidModel(format!("breakpoint {first} not in (0, 1)")));
        }
    }
    if let Some(&last) = b.last() {
        if !(last < 1.0) {
            return Err(RitzError::InvalidModel(format!("breakpoint {last} not in (0, 1)")));
        }
    }
    if let Some(w) = b.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(RitzError::InvalidModel(format!(
            "breakpoints not strictly increasing: {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Solver parameters shared by the dBN, AdBN and BFGS drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Penalty on `(u(1) - beta)^2`.
    pub gamma: f64,
    /// Coefficients with `|c_i| < delta_c` are non-contributing.
    pub delta_c: f64,
    /// Hessian diagonal entries with `|g_i'| < delta_g` freeze the neuron.
    pub delta_g: f64,
    /// dBN stops once consecutive relative residuals differ by less than this.
    pub tau: f64,
    /// AdBN stops once the relative estimator drops to this value.
    pub epsilon: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Gauss nodes per subinterval for quadrature fallbacks.
    pub quad_order: usize,
    /// Upper end of the step-length search interval.
    pub eta_max: f64,
    /// Run exactly `max_iters` dBN iterations, ignoring `tau`.
    #[serde(default)]
    pub fixed_budget: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1e4,
            delta_c: 1e-4,
            delta_g: 1e-4,
            tau: 1e-5,
            epsilon: 1e-2,
            max_iters: 1000,
            seed: 0,
            quad_order: 8,
            eta_max: 2.0,
            fixed_budget: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma", self.gamma),
            ("delta_c", self.delta_c),
            ("delta_g", self.delta_g),
            ("tau", self.tau),
            ("epsilon", self.epsilon),
            ("eta_max", self.eta_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(RitzError::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(RitzError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.quad_order == 0 {
            return Err(RitzError::InvalidConfig("quad_order must be at least 1".into()));
        }
        Ok(())
    }

    pub fn rule(&self) -> QuadratureRule {
        QuadratureRule::new(self.quad_order)
    }
}

/// The penalized Ritz energy
/// `J = 1/2 ∫ a (u_n')^2 - ∫ f u_n + gamma/2 (u_n(1) - beta)^2`.
///
/// The first term is exact given the element integrals of `a`; the load
/// term uses the same right-hand side as the linear solve.
pub fn energy(model: &ShallowModel, problem: &ProblemSpec, config: &SolverConfig) -> Result<f64> {
    let rule = config.rule();
    let s = stiffness_entries(model.breakpoints(), problem, &rule)?;
    let rhs = assemble_rhs(model.breakpoints(), problem, &rule)?;
    energy_from_parts(model, problem, config.gamma, &s, &rhs)
}

pub(crate) fn energy_from_parts(
    model: &ShallowModel,
    problem: &ProblemSpec,
    gamma: f64,
    s: &[f64],
    rhs: &[f64],
) -> Result<f64> {
    let mut slope = 0.0;
    let mut quad = 0.0;
    for (ci, si) in model.coefficients().iter().zip(s) {
        slope += ci;
        quad += slope * slope * si;
    }
    let load: f64 = model.coefficients().iter().zip(rhs).map(|(c, f)| c * f).sum();
    let alpha = model.alpha();
    let alpha_load = if alpha == 0.0 {
        0.0
    } else {
        alpha * crate::quadrature::integrate_f_tail(problem, 0.0)?
    };
    let mismatch = model.value_at_one() - problem.beta();
    let j = 0.5 * quad - (alpha_load + load) + 0.5 * gamma * mismatch * mismatch;
    if !j.is_finite() {
        return Err(RitzError::NonFiniteIntegrand { lo: 0.0, hi: 1.0 });
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::scalar_fn;
    use approx::assert_relative_eq;

    fn model(alpha: f64, b: &[f64], c: &[f64]) -> ShallowModel {
        ShallowModel::new(alpha, b.to_vec(), c.to_vec()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_relative_eq!(model(0.0, &[], &[1.0]).evaluate(0.7), 0.7);
        assert_relative_eq!(model(2.0, &[0.5], &[0.0, 3.0]).evaluate(0.75), 2.75);
        assert!(model(0.0, &[0.5], &[0.5, -1.0]).evaluate(1.0).abs() < 1e-10);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(model(0.0, &[], &[1.0]).evaluate_derivative(0.3), 1.0);
        let m = model(0.0, &[0.4], &[1.0, 2.0]);
        assert_eq!(m.evaluate_derivative(0.9), 3.0);
        assert_eq!(m.evaluate_derivative(0.2), 1.0);
        // right limit at the breakpoint
        assert_eq!(m.evaluate_derivative(0.4), 3.0);
        assert_eq!(m.averaged_slope(1), 2.0);
    }

    #[test]
    fn value_at_zero_is_alpha() {
        let m = model(-1.25, &[0.1, 0.6], &[3.0, -2.0, 7.0]);
        assert_eq!(m.evaluate(0.0), -1.25);
        assert_relative_eq!(m.value_at_one(), m.evaluate(1.0), epsilon = 1e-14);
    }

    #[test]
    fn constructor_rejects_bad_breakpoints() {
        assert!(ShallowModel::new(0.0, vec![0.5, 0.5], vec![0.0; 3]).is_err());
        assert!(ShallowModel::new(0.0, vec![0.0], vec![0.0; 2]).is_err());
        assert!(ShallowModel::new(0.0, vec![1.0], vec![0.0; 2]).is_err());
        assert!(ShallowModel::new(0.0, vec![0.5], vec![0.0; 3]).is_err());
    }

    #[test]
    fn energy_trivial_cases() {
        let cfg = SolverConfig::default();
        let zero = ProblemSpec::constant_coefficient("zero", 1.0, scalar_fn(|_| 0.0), 0.0, 0.0)
            .with_f_antiderivatives(scalar_fn(|_| 0.0), Some(scalar_fn(|_| 0.0)));
        let m = ShallowModel::uniform(4, 0.0);
        assert_eq!(energy(&m, &zero, &cfg).unwrap(), 0.0);

        let lin = ProblemSpec::constant_coefficient("lin", 1.0, scalar_fn(|_| 0.0), 0.0, 1.0)
            .with_f_antiderivatives(scalar_fn(|_| 0.0), Some(scalar_fn(|_| 0.0)));
        let m = model(0.0, &[], &[1.0]);
        assert_relative_eq!(energy(&m, &lin, &cfg).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn config_validation() {
        SolverConfig::default().validate().unwrap();
        let bad = SolverConfig { tau: 0.0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SolverConfig { max_iters: 0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
    }
}
