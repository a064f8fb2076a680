//! Sample average approximation: minimize `(1/N) Σ F(x, ξ_i)` over the
//! feasible set, in closed form when the problem offers one and by projected
//! gradient descent otherwise.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::problem::{Action, FeasibleSet, ScenarioSample, StochasticProblem};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepRule {
    Fixed { step: f64 },
    /// Armijo backtracking along the projection arc.
    Backtracking { c: f64, rho: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking { c: 1e-4, rho: 0.5 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialPoint {
    /// The projection of the origin.
    #[default]
    Zero,
    User { coords: Action },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Stop once `‖x - P(x - ∇f̂(x))‖₂` falls below this.
    pub tolerance: f64,
    pub initial_point: InitialPoint,
    /// Use the problem's closed form when it has one.
    pub use_closed_form: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 10_000,
            step_rule: StepRule::default(),
            tolerance: 1e-10,
            initial_point: InitialPoint::Zero,
            use_closed_form: true,
        }
    }
}

impl SolverOptions {
    pub fn iterative() -> Self {
        SolverOptions {
            use_closed_form: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        match self.step_rule {
            StepRule::Fixed { step } if !(step > 0.0 && step.is_finite()) => {
                Err(Error::param("step", "must be positive"))
            }
            StepRule::Backtracking { c, rho } if !(c > 0.0 && c < 1.0 && rho > 0.0 && rho < 1.0) => {
                Err(Error::param("step_rule", "backtracking needs c and rho in (0, 1)"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SaaReport {
    pub iterations: usize,
    pub projected_gradient_norm: f64,
    pub converged: bool,
    pub closed_form: bool,
    /// Closed form only: the unconstrained solution was projected.
    pub projected: bool,
    /// Closed form only: singular normal equations, least-norm solution used.
    pub least_norm: bool,
    /// Iterative only: `f̂_N(x_k)` for every iterate, starting with `x_0`.
    pub objective_trace: Vec<f64>,
    /// Steps accepted because `f̂` was flat to rounding and the directional
    /// derivative at the new point certified descent.
    pub rounding_steps: usize,
}

/// Minimizer of the empirical objective of `sample`.
///
/// A non-converged iterative run still returns its last iterate; check
/// `report.converged`.
pub fn saa_minimize(
    problem: &dyn StochasticProblem,
    sample: &ScenarioSample,
    options: &SolverOptions,
) -> Result<(Action, SaaReport)> {
    options.validate()?;
    problem.check_sample(sample)?;
    if options.use_closed_form {
        if let Some(closed) = problem.closed_form_saa(sample) {
            let closed = closed?;
            let converged = !closed.projected || closed.exact_under_constraints;
            let report = SaaReport {
                converged,
                closed_form: true,
                projected: closed.projected,
                least_norm: closed.least_norm,
                ..SaaReport::default()
            };
            return Ok((closed.action, report));
        }
    }
    let set = problem.feasible_set();
    let x0 = match &options.initial_point {
        InitialPoint::Zero => DVector::zeros(problem.dim()),
        InitialPoint::User { coords } => {
            problem.check_action(coords)?;
            coords.as_vector().clone()
        }
    };
    let scenarios = &sample.scenarios[..];
    let f = |x: &DVector<f64>| problem.empirical_objective(&Action::from_vector_unchecked(x.clone()), scenarios);
    let g = |x: &DVector<f64>| problem.empirical_gradient(&Action::from_vector_unchecked(x.clone()), scenarios);
    let (x, report) = projected_gradient(f, g, set, x0, options);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("SAA iterate for `{}`", problem.name())));
    }
    Ok((Action::from_vector_unchecked(x), report))
}

/// `‖x - P(x - g)‖₂`, zero exactly at constrained stationary points.
pub fn projected_gradient_norm(set: &FeasibleSet, x: &DVector<f64>, g: &DVector<f64>) -> f64 {
    (x - set.project(&(x - g))).norm()
}

/// Projected gradient descent on a smooth convex `f` over `set`.
pub(crate) fn projected_gradient(
    f: impl Fn(&DVector<f64>) -> f64,
    grad: impl Fn(&DVector<f64>) -> DVector<f64>,
    set: &FeasibleSet,
    x0: DVector<f64>,
    options: &SolverOptions,
) -> (DVector<f64>, SaaReport) {
    let mut x = set.project(&x0);
    let mut fx = f(&x);
    let mut g = grad(&x);
    let mut report = SaaReport {
        objective_trace: vec![fx],
        ..SaaReport::default()
    };
    let mut step = 1.0;
    let mut previous: Option<(DVector<f64>, DVector<f64>)> = None;
    for iter in 0..options.max_iters {
        report.projected_gradient_norm = projected_gradient_norm(set, &x, &g);
        if report.projected_gradient_norm < options.tolerance {
            report.converged = true;
            report.iterations = iter;
            return (x, report);
        }
        let next = match options.step_rule {
            StepRule::Fixed { step } => {
                let xn = set.project(&(&x - &g * step));
                let fxn = f(&xn);
                Some((xn, fxn))
            }
            StepRule::Backtracking { c, rho } => {
                if let Some((dx, dg)) = &previous {
                    let sy = dx.dot(dg);
                    if sy > 0.0 {
                        step = dx.norm_squared() / sy;
                    }
                }
                backtrack(&f, &grad, set, &x, fx, &g, &mut step, c, rho, &mut report.rounding_steps)
            }
        };
        let Some((xn, fxn)) = next else {
            report.iterations = iter;
            return (x, report);
        };
        let gn = grad(&xn);
        previous = Some((&xn - &x, &gn - &g));
        x = xn;
        fx = fxn;
        g = gn;
        report.objective_trace.push(fx);
    }
    report.iterations = options.max_iters;
    report.projected_gradient_norm = projected_gradient_norm(set, &x, &g);
    report.converged = report.projected_gradient_norm < options.tolerance;
    (x, report)
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    f: &impl Fn(&DVector<f64>) -> f64,
    grad: &impl Fn(&DVector<f64>) -> DVector<f64>,
    set: &FeasibleSet,
    x: &DVector<f64>,
    fx: f64,
    g: &DVector<f64>,
    step: &mut f64,
    c: f64,
    rho: f64,
    rounding_steps: &mut usize,
) -> Option<(DVector<f64>, f64)> {
    if !(step.is_finite() && *step > 0.0) {
        *step = 1.0;
    }
    for _ in 0..200 {
        let xn = set.project(&(x - g * *step));
        let dx = &xn - x;
        if dx.norm() == 0.0 {
            return None;
        }
        let fxn = f(&xn);
        if fxn.is_finite() {
            if fxn <= fx + c * g.dot(&dx) {
                return Some((xn, fxn));
            }
            // Flat to rounding: convexity gives f(x⁺) <= f(x) + <∇f(x⁺), x⁺ - x>.
            if (fxn - fx).abs() <= 8.0 * f64::EPSILON * fx.abs().max(fxn.abs()) && grad(&xn).dot(&dx) <= 0.0 {
                *rounding_steps += 1;
                return Some((xn, fxn));
            }
        }
        *step *= rho;
    }
    None
}
