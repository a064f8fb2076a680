use nalgebra::{DMatrix, DVector};

use super::{closed_form_from_system, minimize_quadratic};
use crate::linalg;
use crate::problem::{shape_panic, Action, ClosedFormSaa, FeasibleSet, GroundTruth, Scenario, ScenarioKind, ScenarioSample, StochasticProblem};
use crate::{Error, Result};

/// Law of the coefficients: `b ~ N(b_mean, b_cov)` and either `A = a_mean`
/// or `A = (1/k) Σ_{i<=k} Z_i Z_iᵀ` with `Z_i ~ N(0, a_mean)` independent of `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticModel {
    pub b_mean: DVector<f64>,
    pub b_cov: DMatrix<f64>,
    pub a_mean: DMatrix<f64>,
    pub wishart_dof: Option<usize>,
}

/// `F(x, (b, A)) = ⟨b, x⟩ + ½⟨Ax, x⟩`.
#[derive(Clone, Debug)]
pub struct QuadraticProblem {
    d: usize,
    feasible: FeasibleSet,
    model: Option<QuadraticModel>,
    truth: Option<GroundTruth>,
}

impl QuadraticProblem {
    pub fn new(d: usize, feasible: FeasibleSet) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        feasible.validate(d)?;
        Ok(QuadraticProblem {
            d,
            feasible,
            model: None,
            truth: None,
        })
    }

    pub fn with_model(model: QuadraticModel, feasible: FeasibleSet) -> Result<Self> {
        let mut p = Self::new(model.b_mean.len(), feasible)?;
        linalg::check_square(&model.b_cov, p.d)?;
        linalg::check_square(&model.a_mean, p.d)?;
        let a = linalg::symmetrize(&model.a_mean);
        let x_star = minimize_quadratic(&a, &model.b_mean, &p.feasible)?;
        // ∇F(x*) = b + A x*, with b and A independent.
        let mut g = model.b_cov.clone();
        if let Some(k) = model.wishart_dof {
            let v = &a * &x_star;
            g += (&a * x_star.dot(&v) + &v * v.transpose()) / k as f64;
        }
        let f_star = model.b_mean.dot(&x_star) + 0.5 * x_star.dot(&(&a * &x_star));
        p.truth = Some(GroundTruth::new(Action::new(x_star)?, a, g, f_star)?);
        p.model = Some(model);
        Ok(p)
    }

    fn coefficients<'a>(&self, s: &'a Scenario) -> (&'a DVector<f64>, &'a DMatrix<f64>) {
        match s {
            Scenario::Quadratic { b, a } => (b, a),
            _ => shape_panic(self.name()),
        }
    }
}

impl StochasticProblem for QuadraticProblem {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.feasible
    }

    fn scenario_kind(&self) -> ScenarioKind {
        ScenarioKind::Quadratic
    }

    fn objective(&self, x: &Action, s: &Scenario) -> f64 {
        let (b, a) = self.coefficients(s);
        let x = x.as_vector();
        b.dot(x) + 0.5 * x.dot(&(a * x))
    }

    fn gradient(&self, x: &Action, s: &Scenario) -> DVector<f64> {
        let (b, a) = self.coefficients(s);
        b + a * x.as_vector()
    }

    fn hessian(&self, _x: &Action, s: &Scenario) -> DMatrix<f64> {
        self.coefficients(s).1.clone()
    }

    fn ground_truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    fn curvature_constant(&self) -> Option<f64> {
        Some(1.0)
    }

    fn population_objective(&self, x: &Action) -> Option<f64> {
        let m = self.model.as_ref()?;
        let x = x.as_vector();
        Some(m.b_mean.dot(x) + 0.5 * x.dot(&(&m.a_mean * x)))
    }

    fn closed_form_saa(&self, sample: &ScenarioSample) -> Option<Result<ClosedFormSaa>> {
        let n = sample.len() as f64;
        let mut a = DMatrix::zeros(self.d, self.d);
        let mut b = DVector::zeros(self.d);
        for s in sample.iter() {
            let (bi, ai) = self.coefficients(s);
            a += ai;
            b += bi;
        }
        Some(closed_form_from_system(&(a / n), &(-b / n), &self.feasible, false))
    }
}
