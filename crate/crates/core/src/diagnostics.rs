//! Sample-complexity parameters and runtime checks of the structural
//! assumptions (derivative consistency, convexity, Hessian lower bounds).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::norm::HNorm;
use crate::problem::{Action, Scenario, StochasticProblem};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Radius the sample-size benchmark refers to.
    pub r: f64,
    /// `N_G(r) = trace(H⁻¹G) / r²`.
    pub n_g: f64,
    /// `σ² = λ_max(H⁻¹G)`.
    pub sigma2: f64,
    /// Curvature constant `c_H`.
    pub c_h: f64,
    /// `N_{H,ε}`, when known.
    pub n_he: Option<f64>,
    /// Norm-equivalence constant `L`, when known.
    pub l: Option<f64>,
}

/// `N_G(r)` and `σ²` from the ground truth of `problem`; `c_H` from its closed
/// form (defaulting to 1, the constant-Hessian value).
pub fn compute_diagnostics(problem: &dyn StochasticProblem, r: f64) -> Result<Diagnostics> {
    let truth = problem.ground_truth().ok_or(Error::MissingGroundTruth)?;
    let c_h = problem.curvature_constant().unwrap_or(1.0);
    diagnostics_from_matrices(&truth.h, &truth.g, r, c_h)
}

/// Same as [`compute_diagnostics`] for explicit `H` and `G`. The spectrum of
/// `H⁻¹G` is read off the symmetric similarity `H^{-1/2} G H^{-1/2}`.
pub fn diagnostics_from_matrices(h: &DMatrix<f64>, g: &DMatrix<f64>, r: f64, c_h: f64) -> Result<Diagnostics> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", "radius must be positive"));
    }
    let norm = HNorm::new(h.clone()).map_err(|e| Error::NotPositiveDefinite(format!("H is singular: {e}")))?;
    let whitened = norm.whiten(g)?;
    let trace = whitened.trace();
    let sigma2 = linalg::lambda_max(&whitened).max(0.0);
    Ok(Diagnostics {
        r,
        n_g: trace.max(0.0) / (r * r),
        sigma2,
        c_h,
        n_he: None,
        l: None,
    })
}

/// Relative errors of analytic derivatives against central differences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeCheck {
    pub gradient_rel_err: f64,
    pub hessian_rel_err: f64,
}

/// `‖a - b‖ / max(‖a‖, 1)`: relative error with a unit floor so that
/// vanishing derivatives do not blow the ratio up.
fn rel_err(diff_norm: f64, exact_norm: f64) -> f64 {
    diff_norm / exact_norm.max(1.0)
}

/// Compares `gradient` against central differences of `objective`, and
/// `hessian` against central differences of `gradient`.
pub fn check_derivatives(problem: &dyn StochasticProblem, x: &Action, s: &Scenario) -> DerivativeCheck {
    let d = problem.dim();
    let grad = problem.gradient(x, s);
    let hess = problem.hessian(x, s);
    let mut fd_grad = DVector::zeros(d);
    let mut fd_hess = DMatrix::zeros(d, d);
    for i in 0..d {
        let h = 1e-5 * x[i].abs().max(1.0);
        let mut plus = x.as_vector().clone();
        let mut minus = x.as_vector().clone();
        plus[i] += h;
        minus[i] -= h;
        let plus = Action::from_vector_unchecked(plus);
        let minus = Action::from_vector_unchecked(minus);
        fd_grad[i] = (problem.objective(&plus, s) - problem.objective(&minus, s)) / (2.0 * h);
        let column = (problem.gradient(&plus, s) - problem.gradient(&minus, s)) / (2.0 * h);
        fd_hess.set_column(i, &column);
    }
    DerivativeCheck {
        gradient_rel_err: rel_err((&fd_grad - &grad).norm(), grad.norm()),
        hessian_rel_err: rel_err((&fd_hess - &hess).norm(), hess.norm()),
    }
}

/// Midpoint convexity `F((x+y)/2) <= (F(x)+F(y))/2` up to rounding.
pub fn midpoint_convex(problem: &dyn StochasticProblem, x: &Action, y: &Action, s: &Scenario) -> bool {
    let mid = Action::from_vector_unchecked((x.as_vector() + y.as_vector()) * 0.5);
    let fx = problem.objective(x, s);
    let fy = problem.objective(y, s);
    let fm = problem.objective(&mid, s);
    fm <= 0.5 * (fx + fy) + 1e-12 * (1.0 + fx.abs() + fy.abs())
}

/// Whether `∇²F(x, ξ) - ε·H` is PSD up to rounding, i.e. the deterministic
/// Hessian lower bound holds at this point.
pub fn hessian_dominates(problem: &dyn StochasticProblem, x: &Action, s: &Scenario, eps: f64, h: &DMatrix<f64>) -> bool {
    let diff = problem.hessian(x, s) - h * eps;
    let scale = linalg::max_abs(h).max(1.0);
    linalg::lambda_min(&diff) >= -1e-10 * scale
}
