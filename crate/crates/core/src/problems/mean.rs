use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::problem::{shape_panic, Action, ClosedFormSaa, FeasibleSet, GroundTruth, Scenario, ScenarioKind, ScenarioSample, StochasticProblem};
use crate::{Error, Result};

/// `F(x, ξ) = ½‖x − ξ‖₂²`: its minimizer is the (projected) mean of `ξ`.
#[derive(Clone, Debug)]
pub struct MeanEstimationProblem {
    d: usize,
    feasible: FeasibleSet,
    moments: Option<(DVector<f64>, DMatrix<f64>)>,
    truth: Option<GroundTruth>,
}

impl MeanEstimationProblem {
    pub fn new(d: usize, feasible: FeasibleSet) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        feasible.validate(d)?;
        Ok(MeanEstimationProblem {
            d,
            feasible,
            moments: None,
            truth: None,
        })
    }

    /// With known `E[ξ]` and `Cov[ξ]`, enabling ground truth.
    pub fn with_moments(mean: DVector<f64>, cov: DMatrix<f64>, feasible: FeasibleSet) -> Result<Self> {
        let mut p = Self::new(mean.len(), feasible)?;
        linalg::check_square(&cov, p.d)?;
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mean-estimation moments".into()));
        }
        let x_star = p.feasible.project(&mean);
        let f_star = 0.5 * (&x_star - &mean).norm_squared() + 0.5 * cov.trace();
        p.truth = Some(GroundTruth::new(Action::new(x_star)?, DMatrix::identity(p.d, p.d), cov.clone(), f_star)?);
        p.moments = Some((mean, cov));
        Ok(p)
    }

    fn point<'a>(&self, s: &'a Scenario) -> &'a DVector<f64> {
        match s {
            Scenario::Point(v) => v,
            _ => shape_panic(self.name()),
        }
    }
}

/// `x* = P(E[ξ])`, `H = Id`, `G = Cov[ξ]`.
pub fn ground_truth_mean(problem: &MeanEstimationProblem) -> Result<GroundTruth> {
    problem.truth.clone().ok_or(Error::MissingGroundTruth)
}

impl StochasticProblem for MeanEstimationProblem {
    fn name(&self) -> &str {
        "mean_estimation"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.feasible
    }

    fn scenario_kind(&self) -> ScenarioKind {
        ScenarioKind::Point
    }

    fn objective(&self, x: &Action, s: &Scenario) -> f64 {
        0.5 * (x.as_vector() - self.point(s)).norm_squared()
    }

    fn gradient(&self, x: &Action, s: &Scenario) -> DVector<f64> {
        x.as_vector() - self.point(s)
    }

    fn hessian(&self, _x: &Action, _s: &Scenario) -> DMatrix<f64> {
        DMatrix::identity(self.d, self.d)
    }

    fn ground_truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    fn curvature_constant(&self) -> Option<f64> {
        Some(1.0)
    }

    fn population_objective(&self, x: &Action) -> Option<f64> {
        let (mean, cov) = self.moments.as_ref()?;
        Some(0.5 * (x.as_vector() - mean).norm_squared() + 0.5 * cov.trace())
    }

    fn closed_form_saa(&self, sample: &ScenarioSample) -> Option<Result<ClosedFormSaa>> {
        let mut total = DVector::zeros(self.d);
        for s in sample.iter() {
            total += self.point(s);
        }
        let mean = total / sample.len() as f64;
        let projected = !self.feasible.contains(&mean);
        let x = if projected { self.feasible.project(&mean) } else { mean };
        // The empirical objective is ½‖x − ξ̄‖² + const, so projecting ξ̄ is exact.
        Some(Action::new(x).map(|action| ClosedFormSaa {
            action,
            projected,
            least_norm: false,
            exact_under_constraints: true,
        }))
    }
}
