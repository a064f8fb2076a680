use nalgebra::{DMatrix, DVector};

use super::{check_x_tilde, closed_form_from_system, residual_gradient_cov};
use crate::linalg;
use crate::problem::{shape_panic, Action, ClosedFormSaa, FeasibleSet, GroundTruth, Scenario, ScenarioKind, ScenarioSample, StochasticProblem};
use crate::samplers::{FeatureSpec, NoiseSpec};
use crate::{Error, Result};

/// `F(x, (X, Y)) = (⟨X, x⟩ − Y)² + ‖x‖₂²`.
#[derive(Clone, Debug)]
pub struct RidgeRegressionProblem {
    d: usize,
    feasible: FeasibleSet,
    model: Option<(NoiseSpec, DVector<f64>)>,
    truth: Option<GroundTruth>,
}

impl RidgeRegressionProblem {
    pub fn new(d: usize, feasible: FeasibleSet) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        feasible.validate(d)?;
        Ok(RidgeRegressionProblem {
            d,
            feasible,
            model: None,
            truth: None,
        })
    }

    /// `Y = ⟨X, x̃⟩ + W` with centred isotropic `X`: `f(x) = ‖x − x̃‖² + ‖x‖² + E[W²]`,
    /// so `x* = P(x̃/2)` and `∇²f = 4 Id`.
    pub fn well_specified(features: FeatureSpec, noise: NoiseSpec, x_tilde: DVector<f64>, feasible: FeasibleSet) -> Result<Self> {
        let mut p = Self::new(features.dim(), feasible)?;
        check_x_tilde(&x_tilde, p.d)?;
        if let Ok(noise_var) = noise.moment(2) {
            let x_star = p.feasible.project(&(&x_tilde * 0.5));
            let u = &x_star - &x_tilde;
            if let Some(k) = features.coordinate_kurtosis() {
                // ∇F(x*) = 2(⟨X,u⟩ − W)X + 2x*; the constant shift has no variance.
                let g = residual_gradient_cov(&u, noise_var, k) * 4.0;
                let f_star = u.norm_squared() + x_star.norm_squared() + noise_var;
                p.truth = Some(GroundTruth::new(Action::new(x_star)?, DMatrix::identity(p.d, p.d) * 4.0, g, f_star)?);
            }
        }
        p.model = Some((noise, x_tilde));
        Ok(p)
    }

    fn pair<'a>(&self, s: &'a Scenario) -> (&'a DVector<f64>, f64) {
        match s {
            Scenario::Pair { x, y } => (x, *y),
            _ => shape_panic(self.name()),
        }
    }
}

impl StochasticProblem for RidgeRegressionProblem {
    fn name(&self) -> &str {
        "ridge_regression"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.feasible
    }

    fn scenario_kind(&self) -> ScenarioKind {
        ScenarioKind::Pair
    }

    fn objective(&self, x: &Action, s: &Scenario) -> f64 {
        let (xi, y) = self.pair(s);
        (xi.dot(x.as_vector()) - y).powi(2) + x.norm_squared()
    }

    fn gradient(&self, x: &Action, s: &Scenario) -> DVector<f64> {
        let (xi, y) = self.pair(s);
        xi * (2.0 * (xi.dot(x.as_vector()) - y)) + x.as_vector() * 2.0
    }

    fn hessian(&self, _x: &Action, s: &Scenario) -> DMatrix<f64> {
        linalg::outer(self.pair(s).0) * 2.0 + DMatrix::identity(self.d, self.d) * 2.0
    }

    fn ground_truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    fn curvature_constant(&self) -> Option<f64> {
        Some(1.0)
    }

    fn population_objective(&self, x: &Action) -> Option<f64> {
        let (noise, x_tilde) = self.model.as_ref()?;
        Some((x.as_vector() - x_tilde).norm_squared() + x.norm_squared() + noise.moment(2).ok()?)
    }

    fn closed_form_saa(&self, sample: &ScenarioSample) -> Option<Result<ClosedFormSaa>> {
        let n = sample.len() as f64;
        let mut a = DMatrix::identity(self.d, self.d) * n;
        let mut b = DVector::zeros(self.d);
        for s in sample.iter() {
            let (xi, y) = self.pair(s);
            a += linalg::outer(xi);
            b += xi * y;
        }
        Some(closed_form_from_system(&a, &b, &self.feasible, false))
    }
}
