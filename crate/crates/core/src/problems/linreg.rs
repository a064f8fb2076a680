use nalgebra::{DMatrix, DVector};

use super::{check_x_tilde, closed_form_from_system, residual_fourth_moment, residual_gradient_cov};
use crate::linalg;
use crate::problem::{shape_panic, Action, ClosedFormSaa, FeasibleSet, GroundTruth, Scenario, ScenarioKind, ScenarioSample, StochasticProblem};
use crate::samplers::{FeatureSpec, NoiseSpec};
use crate::{Error, Result};

/// `F(x, (X, Y)) = ½(⟨X, x⟩ − Y)²`.
#[derive(Clone, Debug)]
pub struct LinearRegressionProblem {
    d: usize,
    feasible: FeasibleSet,
    model: Option<(FeatureSpec, NoiseSpec, DVector<f64>)>,
    truth: Option<GroundTruth>,
}

/// Ground truth of a well-specified regression together with the bounds
/// `σ² <= L_X² σ̄²` and `N_G(r) <= σ̄² L_X² d / r²`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinregTruth {
    pub truth: GroundTruth,
    /// `E[(⟨X, x*⟩ − Y)⁴]^{1/2}`.
    pub sigma_bar2: f64,
    /// `L₄–L₂` equivalence constant of `X`, when finite.
    pub l_x: Option<f64>,
    pub sigma2_bound: Option<f64>,
    pub n_g_bound: Option<f64>,
}

impl LinearRegressionProblem {
    pub fn new(d: usize, feasible: FeasibleSet) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        feasible.validate(d)?;
        Ok(LinearRegressionProblem {
            d,
            feasible,
            model: None,
            truth: None,
        })
    }

    /// `Y = ⟨X, x̃⟩ + W` with centred isotropic `X` and independent `W`.
    pub fn well_specified(features: FeatureSpec, noise: NoiseSpec, x_tilde: DVector<f64>, feasible: FeasibleSet) -> Result<Self> {
        let mut p = Self::new(features.dim(), feasible)?;
        check_x_tilde(&x_tilde, p.d)?;
        // Isotropy makes f(x) = ½‖x − x̃‖² + ½E[W²], so x* projects x̃.
        if let Ok(noise_var) = noise.moment(2) {
            let x_star = p.feasible.project(&x_tilde);
            let u = &x_star - &x_tilde;
            let kurtosis = if u.norm() == 0.0 { Some(3.0) } else { features.coordinate_kurtosis() };
            if let Some(k) = kurtosis {
                let g = residual_gradient_cov(&u, noise_var, k);
                let f_star = 0.5 * (u.norm_squared() + noise_var);
                p.truth = Some(GroundTruth::new(Action::new(x_star)?, DMatrix::identity(p.d, p.d), g, f_star)?);
            }
        }
        p.model = Some((features, noise, x_tilde));
        Ok(p)
    }

    fn pair<'a>(&self, s: &'a Scenario) -> (&'a DVector<f64>, f64) {
        match s {
            Scenario::Pair { x, y } => (x, *y),
            _ => shape_panic(self.name()),
        }
    }
}

pub fn ground_truth_linreg(problem: &LinearRegressionProblem, r: f64) -> Result<LinregTruth> {
    if !(r > 0.0) {
        return Err(Error::param("r", "radius must be positive"));
    }
    let truth = problem.truth.clone().ok_or(Error::MissingGroundTruth)?;
    let (features, noise, x_tilde) = problem.model.as_ref().ok_or(Error::MissingGroundTruth)?;
    let u = truth.x_star.as_vector() - x_tilde;
    let kurtosis = if u.norm() == 0.0 { Some(3.0) } else { features.coordinate_kurtosis() };
    let fourth = match (kurtosis, noise.moment(2), noise.moment(4)) {
        (Some(k), Ok(v2), Ok(v4)) => residual_fourth_moment(&u, v2, v4, k),
        _ => return Err(Error::Unsupported("residual fourth moment is infinite".into())),
    };
    let sigma_bar2 = fourth.sqrt();
    let l_x = features.l4_l2_constant();
    Ok(LinregTruth {
        truth,
        sigma_bar2,
        l_x,
        sigma2_bound: l_x.map(|l| l * l * sigma_bar2),
        n_g_bound: l_x.map(|l| l * l * sigma_bar2 * problem.d as f64 / (r * r)),
    })
}

impl StochasticProblem for LinearRegressionProblem {
    fn name(&self) -> &str {
        "linear_regression"
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
        0.5 * (xi.dot(x.as_vector()) - y).powi(2)
    }

    fn gradient(&self, x: &Action, s: &Scenario) -> DVector<f64> {
        let (xi, y) = self.pair(s);
        xi * (xi.dot(x.as_vector()) - y)
    }

    fn hessian(&self, _x: &Action, s: &Scenario) -> DMatrix<f64> {
        linalg::outer(self.pair(s).0)
    }

    fn ground_truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    fn curvature_constant(&self) -> Option<f64> {
        Some(1.0)
    }

    fn population_objective(&self, x: &Action) -> Option<f64> {
        let (_, noise, x_tilde) = self.model.as_ref()?;
        Some(0.5 * ((x.as_vector() - x_tilde).norm_squared() + noise.moment(2).ok()?))
    }

    fn closed_form_saa(&self, sample: &ScenarioSample) -> Option<Result<ClosedFormSaa>> {
        let mut a = DMatrix::zeros(self.d, self.d);
        let mut b = DVector::zeros(self.d);
        for s in sample.iter() {
            let (xi, y) = self.pair(s);
            a += linalg::outer(xi);
            b += xi * y;
        }
        Some(closed_form_from_system(&a, &b, &self.feasible, false))
    }
}
