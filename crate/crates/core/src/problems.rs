//! Catalog of benchmark problems.
//!
//! Sources are manufactured from the exact solutions, `f = -(a u')'`, and
//! ship with closed-form antiderivatives `F = -a u'` and `FF = ∫ F` so the
//! solvers never need quadrature on them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, RitzError};
use crate::problem::{scalar_fn, ProblemSpec, ScalarFn};

/// Width parameter of the Gaussian bump in the exponential problem.
const BUMP_WIDTH: f64 = 0.01;

/// Names of the manufactured problems accepted by [`ProblemId::Manufactured`].
pub const MANUFACTURED: &[&str] = &["linear", "quadratic", "variable"];

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemId {
    /// `u = x (exp(-(x - 1/3)^2 / 0.01) - exp(-4 / 0.09))`, `a = 1`.
    ExpSolution,
    /// `u = x^(2/3)`, `a = 1`, source singular at 0.
    XTwoThirds,
    /// Piecewise-constant `a = 1 + (k - 1) H(x - 1/2)`.
    Interface { k: f64 },
    Manufactured(String),
}

impl ProblemId {
    /// Catalog tag; `interface` takes `k` separately.
    pub fn tag(&self) -> String {
        match self {
            ProblemId::ExpSolution => "exp_solution".into(),
            ProblemId::XTwoThirds => "x_two_thirds".into(),
            ProblemId::Interface { .. } => "interface".into(),
            ProblemId::Manufactured(name) => format!("manufactured:{name}"),
        }
    }

    /// Parse a tag, taking `k` for the interface problem from `k`.
    pub fn parse(tag: &str, k: Option<f64>) -> Result<Self> {
        match tag {
            "exp_solution" => Ok(ProblemId::ExpSolution),
            "x_two_thirds" => Ok(ProblemId::XTwoThirds),
            "interface" => Ok(ProblemId::Interface { k: k.unwrap_or(1e3) }),
            other => {
                if let Some(k) = other.strip_prefix("interface:") {
                    let k = k.parse().map_err(|_| RitzError::UnknownProblem(other.into()))?;
                    return Ok(ProblemId::Interface { k });
                }
                if let Some(name) = other.strip_prefix("manufactured:") {
                    return Ok(ProblemId::Manufactured(name.into()));
                }
                Err(RitzError::UnknownProblem(other.into()))
            }
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemId::Interface { k } => write!(f, "interface:{k}"),
            other => f.write_str(&other.tag()),
        }
    }
}

impl FromStr for ProblemId {
    type Err = RitzError;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::parse(s, None)
    }
}

pub fn make_problem(id: &ProblemId) -> Result<ProblemSpec> {
    match id {
        ProblemId::ExpSolution => Ok(exp_solution()),
        ProblemId::XTwoThirds => Ok(x_two_thirds()),
        ProblemId::Interface { k } => {
            if !(*k > 0.0) || !k.is_finite() {
                return Err(RitzError::InvalidProblem(format!("interface contrast k = {k} must be positive")));
            }
            Ok(interface(*k))
        }
        ProblemId::Manufactured(name) => match name.as_str() {
            "linear" => Ok(linear()),
            "quadratic" => Ok(quadratic()),
            "variable" => Ok(variable_coefficient()),
            other => Err(RitzError::UnknownProblem(format!("manufactured:{other}"))),
        },
    }
}

fn exp_solution() -> ProblemSpec {
    let shift = (-4.0 / (9.0 * BUMP_WIDTH)).exp();
    let bump = |x: f64| (-(x - 1.0 / 3.0).powi(2) / BUMP_WIDTH).exp();
    let u = move |x: f64| x * (bump(x) - shift);
    let du = move |x: f64| {
        let e = bump(x);
        e - shift + x * (-2.0 * (x - 1.0 / 3.0) / BUMP_WIDTH) * e
    };
    let d2u = move |x: f64| {
        let e = bump(x);
        let t = x - 1.0 / 3.0;
        let e1 = -2.0 * t / BUMP_WIDTH * e;
        let e2 = (-2.0 / BUMP_WIDTH + 4.0 * t * t / (BUMP_WIDTH * BUMP_WIDTH)) * e;
        2.0 * e1 + x * e2
    };
    // u(1) vanishes exactly (equal exponents); avoid the rounding residue
    ProblemSpec::constant_coefficient("exp_solution", 1.0, scalar_fn(move |x| -d2u(x)), 0.0, 0.0)
        .with_f_antiderivatives(scalar_fn(move |x| -du(x)), Some(scalar_fn(move |x| -u(x))))
        .with_exact(scalar_fn(u), scalar_fn(du))
}

fn x_two_thirds() -> ProblemSpec {
    ProblemSpec::constant_coefficient(
        "x_two_thirds",
        1.0,
        scalar_fn(|x| 2.0 / 9.0 * x.powf(-4.0 / 3.0)),
        0.0,
        1.0,
    )
    .with_f_antiderivatives(
        scalar_fn(|x| -2.0 / 3.0 * x.powf(-1.0 / 3.0)),
        Some(scalar_fn(|x| -x.powf(2.0 / 3.0))),
    )
    .with_singular_points(vec![0.0])
    .with_exact(scalar_fn(|x| x.powf(2.0 / 3.0)), scalar_fn(|x| 2.0 / 3.0 * x.powf(-1.0 / 3.0)))
}

fn interface(k: f64) -> ProblemSpec {
    let u = move |x: f64| {
        if x < 0.5 {
            4.0 * k * x * x * (1.0 - x)
        } else {
            (2.0 * (k + 1.0) * x - 1.0) * (1.0 - x)
        }
    };
    let du = move |x: f64| {
        if x < 0.5 {
            4.0 * k * (2.0 * x - 3.0 * x * x)
        } else {
            2.0 * (k + 1.0) * (1.0 - 2.0 * x) + 1.0
        }
    };
    let a = move |x: f64| if x < 0.5 { 1.0 } else { k };
    let big_f = move |x: f64| -a(x) * du(x);
    let big_ff = move |x: f64| {
        if x < 0.5 {
            -u(x)
        } else {
            -k * u(x) + 0.5 * k * (k - 1.0)
        }
    };
    let f = move |x: f64| {
        if x < 0.5 {
            8.0 * k * (3.0 * x - 1.0)
        } else {
            4.0 * k * (k + 1.0)
        }
    };
    ProblemSpec::new("interface", scalar_fn(a), scalar_fn(|_| 0.0), scalar_fn(f), 0.0, 0.0)
        .with_a_antiderivative(scalar_fn(move |x| if x < 0.5 { x } else { 0.5 + k * (x - 0.5) }))
        .with_interfaces(vec![0.5])
        .with_f_antiderivatives(scalar_fn(big_f), Some(scalar_fn(big_ff)))
        .with_exact(scalar_fn(u), scalar_fn(du))
}

fn linear() -> ProblemSpec {
    ProblemSpec::constant_coefficient("manufactured:linear", 1.0, scalar_fn(|_| 0.0), 0.0, 1.0)
        .with_f_antiderivatives(scalar_fn(|_| 0.0), Some(scalar_fn(|_| 0.0)))
        .with_exact(scalar_fn(|x| x), scalar_fn(|_| 1.0))
}

fn quadratic() -> ProblemSpec {
    ProblemSpec::constant_coefficient("manufactured:quadratic", 1.0, scalar_fn(|_| 2.0), 0.0, 0.0)
        .with_f_antiderivatives(scalar_fn(|x| 2.0 * x - 1.0), Some(scalar_fn(|x| x * x - x)))
        .with_exact(scalar_fn(|x| x * (1.0 - x)), scalar_fn(|x| 1.0 - 2.0 * x))
}

/// `a = 1 + x`, `u = sin(pi x)`; no closed-form antiderivatives of `f`, so
/// it exercises the quadrature paths.
fn variable_coefficient() -> ProblemSpec {
    use std::f64::consts::PI;
    manufactured(
        "manufactured:variable",
        scalar_fn(|x| 1.0 + x),
        scalar_fn(|_| 1.0),
        Some(scalar_fn(|x| x + 0.5 * x * x)),
        scalar_fn(|x| (PI * x).sin()),
        scalar_fn(|x| PI * (PI * x).cos()),
        scalar_fn(|x| -PI * PI * (PI * x).sin()),
    )
}

/// Problem whose exact solution is `u`, with `f = -a' u' - a u''` and
/// boundary data taken from `u`.
pub fn manufactured(
    name: &str,
    a: ScalarFn,
    a_prime: ScalarFn,
    a_antiderivative: Option<ScalarFn>,
    u: ScalarFn,
    du: ScalarFn,
    d2u: ScalarFn,
) -> ProblemSpec {
    let (a2, ap2, du2) = (a.clone(), a_prime.clone(), du.clone());
    let f = scalar_fn(move |x| -ap2(x) * du2(x) - a2(x) * d2u(x));
    let mut p = ProblemSpec::new(name, a, a_prime, f, u(0.0), u(1.0)).with_exact(u, du);
    if let Some(a1) = a_antiderivative {
        p = p.with_a_antiderivative(a1);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tags_round_trip() {
        for id in [
            ProblemId::ExpSolution,
            ProblemId::XTwoThirds,
            ProblemId::Manufactured("linear".into()),
        ] {
            assert_eq!(ProblemId::parse(&id.tag(), None).unwrap(), id);
        }
        assert_eq!(ProblemId::parse("interface", Some(10.0)).unwrap(), ProblemId::Interface { k: 10.0 });
        assert_eq!("interface:100".parse::<ProblemId>().unwrap(), ProblemId::Interface { k: 100.0 });
        assert!(matches!(ProblemId::parse("nope", None), Err(RitzError::UnknownProblem(_))));
        assert!(make_problem(&ProblemId::Manufactured("nope".into())).is_err());
        assert!(make_problem(&ProblemId::Interface { k: -1.0 }).is_err());
    }

    #[test]
    fn exp_solution_has_homogeneous_data() {
        let p = make_problem(&ProblemId::ExpSolution).unwrap();
        assert_eq!(p.alpha(), 0.0);
        assert_eq!(p.beta(), 0.0);
    }

    #[test]
    fn x_two_thirds_source_at_one_eighth() {
        let p = make_problem(&ProblemId::XTwoThirds).unwrap();
        assert_relative_eq!(p.f(0.125), 32.0 / 9.0, max_relative = 1e-14);
        assert_eq!(p.beta(), 1.0);
    }

    #[test]
    fn interface_with_unit_contrast_is_continuous() {
        let p = make_problem(&ProblemId::Interface { k: 1.0 }).unwrap();
        let u = &p.exact().unwrap().u;
        assert_relative_eq!(u(0.5 - 1e-15), 0.5, epsilon = 1e-12);
        assert_relative_eq!(u(0.5), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn antiderivatives_are_continuous_at_interface() {
        for k in [10.0, 1e3, 1e6] {
            let p = make_problem(&ProblemId::Interface { k }).unwrap();
            let f1 = p.f_antiderivative().unwrap();
            let ff = p.f_second_antiderivative().unwrap();
            let h = 1e-12;
            assert_relative_eq!(f1(0.5 - h), f1(0.5), max_relative = 1e-9);
            assert_relative_eq!(ff(0.5 - h), ff(0.5), max_relative = 1e-9);
        }
    }
}
