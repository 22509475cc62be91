//! The two-point boundary-value problem `-(a u')' = f` on (0, 1) with
//! Dirichlet data `u(0) = alpha`, `u(1) = beta`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, RitzError};

/// A real function shared between threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Wrap a closure as a [`ScalarFn`].
pub fn scalar_fn<F>(f: F) -> ScalarFn
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    Arc::new(f)
}

/// Exact solution and its derivative, for error measurement.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub du: ScalarFn,
}

/// Problem data.
///
/// `a` must be bounded below by a positive constant. Closed-form
/// antiderivatives are optional; when present they replace quadrature:
///
/// * `a_antiderivative`: `A1' = a`
/// * `f_antiderivative`: `F' = f`
/// * `f_second_antiderivative`: `FF' = F`
///
/// `interfaces` lists the points where `a` is not differentiable and
/// `singular_points` the points where `f` is unbounded. Both are sorted.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    a: ScalarFn,
    a_prime: ScalarFn,
    a_antiderivative: Option<ScalarFn>,
    interfaces: Vec<f64>,
    f: ScalarFn,
    f_antiderivative: Option<ScalarFn>,
    f_second_antiderivative: Option<ScalarFn>,
    singular_points: Vec<f64>,
    alpha: f64,
    beta: f64,
    exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("interfaces", &self.interfaces)
            .field("singular_points", &self.singular_points)
            .field("closed_form_a", &self.a_antiderivative.is_some())
            .field("closed_form_f", &self.f_second_antiderivative.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Problem with coefficient `a`, its derivative `a_prime`, source `f`
    /// and boundary data. Everything else starts empty.
    pub fn new(
        name: impl Into<String>,
        a: ScalarFn,
        a_prime: ScalarFn,
        f: ScalarFn,
        alpha: f64,
        beta: f64,
    ) -> Self {
        Self {
            name: name.into(),
            a,
            a_prime,
            a_antiderivative: None,
            interfaces: Vec::new(),
            f,
            f_antiderivative: None,
            f_second_antiderivative: None,
            singular_points: Vec::new(),
            alpha,
            beta,
            exact: None,
        }
    }

    /// Constant coefficient `a`.
    pub fn constant_coefficient(name: impl Into<String>, a: f64, f: ScalarFn, alpha: f64, beta: f64) -> Self {
        Self::new(name, scalar_fn(move |_| a), scalar_fn(|_| 0.0), f, alpha, beta)
            .with_a_antiderivative(scalar_fn(move |x| a * x))
    }

    pub fn with_a_antiderivative(mut self, a1: ScalarFn) -> Self {
        self.a_antiderivative = Some(a1);
        self
    }

    pub fn with_f_antiderivatives(mut self, big_f: ScalarFn, big_ff: Option<ScalarFn>) -> Self {
        self.f_antiderivative = Some(big_f);
        self.f_second_antiderivative = big_ff;
        self
    }

    pub fn with_interfaces(mut self, mut points: Vec<f64>) -> Self {
        points.sort_by(f64::total_cmp);
        self.interfaces = points;
        self
    }

    pub fn with_singular_points(mut self, mut points: Vec<f64>) -> Self {
        points.sort_by(f64::total_cmp);
        self.singular_points = points;
        self
    }

    pub fn with_exact(mut self, u: ScalarFn, du: ScalarFn) -> Self {
        self.exact = Some(ExactSolution { u, du });
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn a(&self, x: f64) -> f64 {
        (self.a)(x)
    }

    pub fn a_prime(&self, x: f64) -> f64 {
        (self.a_prime)(x)
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn f_fn(&self) -> &(dyn Fn(f64) -> f64 + Send + Sync) {
        &*self.f
    }

    pub fn a_fn(&self) -> &(dyn Fn(f64) -> f64 + Send + Sync) {
        &*self.a
    }

    pub fn a_antiderivative(&self) -> Option<&ScalarFn> {
        self.a_antiderivative.as_ref()
    }

    pub fn f_antiderivative(&self) -> Option<&ScalarFn> {
        self.f_antiderivative.as_ref()
    }

    pub fn f_second_antiderivative(&self) -> Option<&ScalarFn> {
        self.f_second_antiderivative.as_ref()
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    pub fn singular_points(&self) -> &[f64] {
        &self.singular_points
    }

    /// Interfaces and source singularities merged, sorted and deduplicated.
    /// Exact solutions lose smoothness only at these points.
    pub fn break_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.interfaces.iter().chain(&self.singular_points).copied().collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    /// True when `x` lies within `tol` of a declared interface.
    pub fn is_interface(&self, x: f64, tol: f64) -> bool {
        self.interfaces.iter().any(|&p| (p - x).abs() <= tol)
    }

    /// Check that `a` is positive at `samples` Gauss points of `[0, 1]` and that
    /// the interface and singular-point lists are sorted and lie in `[0, 1]`.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let (nodes, _) = crate::quadrature::gauss_legendre(samples.max(1));
        for x in nodes.iter().map(|t| 0.5 * (t + 1.0)) {
            let a = self.a(x);
            if !(a > 0.0) || !a.is_finite() {
                return Err(RitzError::InvalidProblem(format!("a({x}) = {a} is not positive")));
            }
        }
        for (label, pts) in [("interface", &self.interfaces), ("singular point", &self.singular_points)] {
            if pts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(RitzError::InvalidProblem(format!("{label} list is not strictly increasing")));
            }
            if pts.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(RitzError::InvalidProblem(format!("{label} outside [0, 1]")));
            }
        }
        if self.interfaces.iter().any(|&p| p <= 0.0 || p >= 1.0) {
            return Err(RitzError::InvalidProblem("interfaces must lie in (0, 1)".into()));
        }
        Ok(())
    }
}
