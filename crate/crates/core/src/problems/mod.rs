//! Built-in problems with closed-form ground truth.

mod linreg;
mod mean;
mod portfolio;
mod quadratic;
mod ridge;

pub use linreg::{ground_truth_linreg, LinearRegressionProblem, LinregTruth};
pub use mean::{ground_truth_mean, MeanEstimationProblem};
pub use portfolio::{
    portfolio_diagnostics, BachelierModel, Estimate, Loss, PortfolioDiagnostics, PortfolioProblem,
};
pub use quadratic::{QuadraticModel, QuadraticProblem};
pub use ridge::RidgeRegressionProblem;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::problem::{Action, ClosedFormSaa, FeasibleSet, ScenarioSample, StochasticProblem};
use crate::saa::{self, SolverOptions};
use crate::samplers::{matrix_from_rows, DistributionKind, DistributionSpec};
use crate::{Error, Result};

/// Problem descriptor of the experiment config format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    MeanEstimation {
        #[serde(default)]
        feasible_set: FeasibleSet,
    },
    LinearRegression {
        #[serde(default)]
        feasible_set: FeasibleSet,
    },
    RidgeRegression {
        #[serde(default)]
        feasible_set: FeasibleSet,
    },
    Quadratic {
        #[serde(default)]
        feasible_set: FeasibleSet,
    },
    Portfolio {
        loss: Loss,
        /// Defaults to the mean price of a Bachelier model.
        #[serde(default)]
        prices: Option<Vec<f64>>,
        #[serde(default)]
        feasible_set: FeasibleSet,
    },
}

/// Names accepted in the `kind` field of a problem descriptor.
pub const PROBLEM_KINDS: [(&str, &str); 5] = [
    ("mean_estimation", "F(x, ξ) = ½‖x − ξ‖²; point scenarios"),
    ("linear_regression", "F(x, (X, Y)) = ½(⟨X, x⟩ − Y)²; regression_pair scenarios"),
    ("ridge_regression", "F(x, (X, Y)) = (⟨X, x⟩ − Y)² + ‖x‖²; regression_pair scenarios"),
    ("quadratic", "F(x, (b, A)) = ⟨b, x⟩ + ½⟨Ax, x⟩; quadratic_coefficients scenarios"),
    ("portfolio", "F(x, (X, Y)) = ℓ(−Y − ⟨X − π, x⟩); regression_pair or bachelier_pair scenarios"),
];

/// Instantiates `spec` for scenarios drawn from `dist`, attaching ground truth
/// whenever the pair admits a closed form.
pub fn build_problem(spec: &ProblemSpec, dist: &DistributionSpec) -> Result<Box<dyn StochasticProblem>> {
    dist.validate()?;
    let d = dist.dim();
    let mismatch = |problem: &str| Error::Unsupported(format!("problem `{problem}` cannot use a `{}` distribution", dist.generator_id()));
    Ok(match spec {
        ProblemSpec::MeanEstimation { feasible_set } => match dist.moments() {
            Ok((mean, cov)) => Box::new(MeanEstimationProblem::with_moments(mean, cov, feasible_set.clone())?),
            Err(_) if dist.scenario_kind() == crate::problem::ScenarioKind::Point => {
                Box::new(MeanEstimationProblem::new(d, feasible_set.clone())?)
            }
            Err(_) => return Err(mismatch("mean_estimation")),
        },
        ProblemSpec::LinearRegression { feasible_set } => match &dist.kind {
            DistributionKind::RegressionPair { features, noise, x_tilde } => Box::new(LinearRegressionProblem::well_specified(
                features.clone(),
                noise.clone(),
                DVector::from_column_slice(x_tilde),
                feasible_set.clone(),
            )?),
            _ => return Err(mismatch("linear_regression")),
        },
        ProblemSpec::RidgeRegression { feasible_set } => match &dist.kind {
            DistributionKind::RegressionPair { features, noise, x_tilde } => Box::new(RidgeRegressionProblem::well_specified(
                features.clone(),
                noise.clone(),
                DVector::from_column_slice(x_tilde),
                feasible_set.clone(),
            )?),
            _ => return Err(mismatch("ridge_regression")),
        },
        ProblemSpec::Quadratic { feasible_set } => match &dist.kind {
            DistributionKind::QuadraticCoefficients { b_mean, b_cov, a_mean, wishart_dof } => {
                let model = QuadraticModel {
                    b_mean: DVector::from_column_slice(b_mean),
                    b_cov: matrix_from_rows(b_cov, d, "b_cov")?,
                    a_mean: matrix_from_rows(a_mean, d, "a_mean")?,
                    wishart_dof: *wishart_dof,
                };
                Box::new(QuadraticProblem::with_model(model, feasible_set.clone())?)
            }
            _ => return Err(mismatch("quadratic")),
        },
        ProblemSpec::Portfolio { loss, prices, feasible_set } => {
            let prices = prices.as_ref().map(|p| DVector::from_column_slice(p));
            match &dist.kind {
                DistributionKind::BachelierPair { mean, cov, x_tilde, noise }
                    if *loss == Loss::Exponential && noise.gaussian_sd().is_some() =>
                {
                    let model = BachelierModel {
                        mean: DVector::from_column_slice(mean),
                        cov: matrix_from_rows(cov, d, "cov")?,
                        x_tilde: DVector::from_column_slice(x_tilde),
                        noise_sd: noise.gaussian_sd().unwrap_or(0.0),
                    };
                    Box::new(PortfolioProblem::bachelier_exponential(model, prices, feasible_set.clone())?)
                }
                DistributionKind::BachelierPair { mean, .. } => Box::new(PortfolioProblem::new(
                    loss.clone(),
                    prices.unwrap_or_else(|| DVector::from_column_slice(mean)),
                    feasible_set.clone(),
                )?),
                DistributionKind::RegressionPair { .. } => Box::new(PortfolioProblem::new(
                    loss.clone(),
                    prices.unwrap_or_else(|| DVector::zeros(d)),
                    feasible_set.clone(),
                )?),
                _ => return Err(mismatch("portfolio")),
            }
        }
    })
}

/// Closed-form minimizer of the empirical objective.
pub fn exact_saa_solution(problem: &dyn StochasticProblem, sample: &ScenarioSample) -> Result<ClosedFormSaa> {
    problem.check_sample(sample)?;
    problem
        .closed_form_saa(sample)
        .unwrap_or_else(|| Err(Error::Unsupported(format!("`{}` has no closed-form SAA", problem.name()))))
}

/// Shared tail of the linear closed forms: solve, then project if needed.
fn closed_form_from_system(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    set: &FeasibleSet,
    exact_projection: bool,
) -> Result<ClosedFormSaa> {
    let (x, least_norm) = crate::linalg::solve_or_least_norm(a, b);
    let projected = !set.contains(&x);
    let x = if projected { set.project(&x) } else { x };
    Ok(ClosedFormSaa {
        action: Action::new(x)?,
        projected,
        least_norm,
        exact_under_constraints: !projected || exact_projection,
    })
}

/// Minimizer of `½⟨Ax, x⟩ + ⟨b, x⟩` over `set` for positive definite `A`.
fn minimize_quadratic(a: &DMatrix<f64>, b: &DVector<f64>, set: &FeasibleSet) -> Result<DVector<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("quadratic objective is not strongly convex".into()))?;
    let unconstrained = chol.solve(&(-b));
    if set.contains(&unconstrained) {
        return Ok(unconstrained);
    }
    let options = SolverOptions {
        max_iters: 200_000,
        tolerance: 1e-13 * (1.0 + b.norm()),
        ..SolverOptions::default()
    };
    let f = |x: &DVector<f64>| 0.5 * x.dot(&(a * x)) + b.dot(x);
    let g = |x: &DVector<f64>| a * x + b;
    let (x, report) = saa::projected_gradient(f, g, set, unconstrained, &options);
    if !report.converged {
        return Err(Error::NonFinite("constrained population minimizer did not converge".into()));
    }
    Ok(x)
}

fn check_x_tilde(x_tilde: &DVector<f64>, d: usize) -> Result<()> {
    if x_tilde.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x_tilde.len() });
    }
    if x_tilde.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("x_tilde".into()));
    }
    Ok(())
}

/// `E[(⟨X,u⟩ − W)² X Xᵀ] − u uᵀ` type covariance for unit-variance features with
/// independent coordinates of fourth moment `kurtosis`.
fn residual_gradient_cov(u: &DVector<f64>, noise_var: f64, kurtosis: f64) -> DMatrix<f64> {
    let d = u.len();
    let mut g = DMatrix::identity(d, d) * (noise_var + u.norm_squared());
    for i in 0..d {
        g[(i, i)] += (kurtosis - 3.0) * u[i] * u[i];
    }
    g + u * u.transpose()
}

/// `E[(⟨X,u⟩ − W)⁴]` for the same feature model with independent noise.
fn residual_fourth_moment(u: &DVector<f64>, noise_var: f64, noise_m4: f64, kurtosis: f64) -> f64 {
    let u2 = u.norm_squared();
    let a4 = 3.0 * u2 * u2 + (kurtosis - 3.0) * u.iter().map(|v| v.powi(4)).sum::<f64>();
    a4 + 6.0 * u2 * noise_var + noise_m4
}
