//! Problem abstraction: actions, scenarios, feasible sets and the
//! [`StochasticProblem`] evaluation surface.

use std::ops::{Deref, Range};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// A point `x` of the action space `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct Action(DVector<f64>);

impl Action {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("action coordinates".into()));
        }
        Ok(Action(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn zeros(d: usize) -> Self {
        Action(DVector::zeros(d))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    pub(crate) fn from_vector_unchecked(v: DVector<f64>) -> Self {
        Action(v)
    }
}

impl Deref for Action {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl From<Action> for Vec<f64> {
    fn from(a: Action) -> Vec<f64> {
        a.0.iter().copied().collect()
    }
}

impl TryFrom<Vec<f64>> for Action {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Action::new(DVector::from_vec(v))
    }
}

/// One draw of `ξ`. The variant is fixed per problem instance.
#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    /// A vector `ξ`, as in mean estimation.
    Point(DVector<f64>),
    /// A feature/response pair `(X, Y)`, as in regression and portfolio problems.
    Pair { x: DVector<f64>, y: f64 },
    /// Linear and quadratic coefficients `(b, A)` of a quadratic objective.
    Quadratic { b: DVector<f64>, a: DMatrix<f64> },
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Scenario::Point(_) => ScenarioKind::Point,
            Scenario::Pair { .. } => ScenarioKind::Pair,
            Scenario::Quadratic { .. } => ScenarioKind::Quadratic,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Scenario::Point(v) => v.len(),
            Scenario::Pair { x, .. } => x.len(),
            Scenario::Quadratic { b, .. } => b.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    Point,
    Pair,
    Quadratic,
}

/// Ordered i.i.d. draws together with the seed lineage that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSample {
    pub scenarios: Vec<Scenario>,
    pub seed: u64,
    pub generator_id: String,
}

impl ScenarioSample {
    pub fn new(scenarios: Vec<Scenario>, seed: u64, generator_id: impl Into<String>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::Empty("scenario sample"));
        }
        Ok(ScenarioSample {
            scenarios,
            seed,
            generator_id: generator_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Scenario> {
        self.scenarios.iter()
    }

    /// Contiguous sub-sample; keeps the parent's lineage with the range appended.
    pub fn slice(&self, range: Range<usize>) -> Result<ScenarioSample> {
        if range.end > self.len() || range.start >= range.end {
            return Err(Error::OutOfRange {
                index: range.end,
                len: self.len(),
            });
        }
        Ok(ScenarioSample {
            scenarios: self.scenarios[range.clone()].to_vec(),
            seed: self.seed,
            generator_id: format!("{}[{}..{}]", self.generator_id, range.start, range.end),
        })
    }

    /// Splits into a leading part and a trailing part of length `tail`.
    pub fn split_tail(&self, tail: usize) -> Result<(ScenarioSample, ScenarioSample)> {
        if tail == 0 || tail >= self.len() {
            return Err(Error::param("split", format!("cannot reserve {tail} of {} scenarios", self.len())));
        }
        let head = self.len() - tail;
        Ok((self.slice(0..head)?, self.slice(head..self.len())?))
    }
}

/// A half-space `<a, x> <= b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

/// Closed convex feasible set with an exact Euclidean projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    #[default]
    AllOfSpace,
    /// Coordinate box; infinite bounds are allowed.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    NonnegOrthant,
    HalfspaceIntersection { halfspaces: Vec<Halfspace> },
}

const MEMBERSHIP_TOL: f64 = 1e-9;

impl FeasibleSet {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            FeasibleSet::AllOfSpace | FeasibleSet::NonnegOrthant => Ok(()),
            FeasibleSet::Box { lower, upper } => {
                if lower.len() != d || upper.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: lower.len().min(upper.len()),
                    });
                }
                if lower.iter().zip(upper).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
                    return Err(Error::param("feasible_set", "box requires lower <= upper"));
                }
                Ok(())
            }
            FeasibleSet::HalfspaceIntersection { halfspaces } => {
                for h in halfspaces {
                    if h.a.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, got: h.a.len() });
                    }
                    if h.a.iter().all(|v| *v == 0.0) || !h.b.is_finite() {
                        return Err(Error::param("feasible_set", "half-space normal must be nonzero and offset finite"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        matches!(self, FeasibleSet::AllOfSpace)
            || matches!(self, FeasibleSet::HalfspaceIntersection { halfspaces } if halfspaces.is_empty())
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        match self {
            FeasibleSet::AllOfSpace => true,
            FeasibleSet::NonnegOrthant => x.iter().all(|&v| v >= -MEMBERSHIP_TOL),
            FeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&v, (&l, &u))| v >= l - MEMBERSHIP_TOL && v <= u + MEMBERSHIP_TOL),
            FeasibleSet::HalfspaceIntersection { halfspaces } => halfspaces.iter().all(|h| {
                let dot: f64 = h.a.iter().zip(x.iter()).map(|(a, v)| a * v).sum();
                dot <= h.b + MEMBERSHIP_TOL * (1.0 + h.b.abs())
            }),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            FeasibleSet::AllOfSpace => x.clone(),
            FeasibleSet::NonnegOrthant => x.map(|v| v.max(0.0)),
            FeasibleSet::Box { lower, upper } => DVector::from_iterator(
                x.len(),
                x.iter().zip(lower.iter().zip(upper)).map(|(&v, (&l, &u))| v.clamp(l, u)),
            ),
            FeasibleSet::HalfspaceIntersection { halfspaces } => project_halfspaces(halfspaces, x),
        }
    }
}

fn project_onto_halfspace(h: &Halfspace, x: &DVector<f64>) -> DVector<f64> {
    let a = DVector::from_column_slice(&h.a);
    let excess = a.dot(x) - h.b;
    if excess <= 0.0 {
        x.clone()
    } else {
        x - a.scale(excess / a.norm_squared())
    }
}

/// Dykstra's alternating projections; converges to the exact projection onto
/// the intersection.
fn project_halfspaces(halfspaces: &[Halfspace], x: &DVector<f64>) -> DVector<f64> {
    match halfspaces {
        [] => return x.clone(),
        [h] => return project_onto_halfspace(h, x),
        _ => {}
    }
    let mut current = x.clone();
    let mut increments = vec![DVector::zeros(x.len()); halfspaces.len()];
    for _ in 0..100_000 {
        let previous = current.clone();
        for (h, inc) in halfspaces.iter().zip(increments.iter_mut()) {
            let shifted = &current + &*inc;
            let projected = project_onto_halfspace(h, &shifted);
            *inc = shifted - &projected;
            current = projected;
        }
        if (&current - &previous).norm() <= 1e-15 * (1.0 + current.norm()) {
            break;
        }
    }
    current
}

/// Population quantities at the optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub x_star: Action,
    /// `∇²f(x*)`.
    pub h: DMatrix<f64>,
    /// `Cov[∇F(x*, ξ)]`.
    pub g: DMatrix<f64>,
    pub f_star: f64,
}

impl GroundTruth {
    pub fn new(x_star: Action, h: DMatrix<f64>, g: DMatrix<f64>, f_star: f64) -> Result<Self> {
        let d = x_star.dim();
        linalg::check_square(&h, d)?;
        linalg::check_square(&g, d)?;
        let scale = linalg::max_abs(&h).max(1.0);
        if linalg::asymmetry(&h) > 1e-10 * scale {
            return Err(Error::NotPositiveDefinite("Hessian at optimum is not symmetric".into()));
        }
        let h = linalg::symmetrize(&h);
        let lmin = linalg::lambda_min(&h);
        if !(lmin > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "Hessian at optimum has smallest eigenvalue {lmin:e}"
            )));
        }
        Ok(GroundTruth {
            x_star,
            h,
            g: linalg::symmetrize(&g),
            f_star,
        })
    }
}

/// A closed-form SAA minimizer together with how it was obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormSaa {
    pub action: Action,
    /// The unconstrained minimizer was projected onto the feasible set.
    pub projected: bool,
    /// The normal equations were singular and the least-norm solution was used.
    pub least_norm: bool,
    /// The projected solution is the exact constrained minimizer.
    pub exact_under_constraints: bool,
}

/// The evaluation surface of `F(x, ξ)` and its derivatives.
///
/// Implementations must be convex in `x` for every scenario and supply
/// analytic derivatives consistent with `objective`.
pub trait StochasticProblem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn feasible_set(&self) -> &FeasibleSet;

    fn scenario_kind(&self) -> ScenarioKind;

    fn objective(&self, x: &Action, s: &Scenario) -> f64;

    fn gradient(&self, x: &Action, s: &Scenario) -> DVector<f64>;

    fn hessian(&self, x: &Action, s: &Scenario) -> DMatrix<f64>;

    fn ground_truth(&self) -> Option<&GroundTruth> {
        None
    }

    /// Closed-form curvature constant `c_H`, when the problem has one.
    fn curvature_constant(&self) -> Option<f64> {
        None
    }

    /// Exact `f(x) = E[F(x, ξ)]`, when available.
    fn population_objective(&self, _x: &Action) -> Option<f64> {
        None
    }

    /// Closed-form minimizer of the empirical objective, when available.
    fn closed_form_saa(&self, _sample: &ScenarioSample) -> Option<Result<ClosedFormSaa>> {
        None
    }

    /// Shape check for a whole sample; evaluation methods assume it passed.
    fn check_sample(&self, sample: &ScenarioSample) -> Result<()> {
        for s in sample.iter() {
            if s.kind() != self.scenario_kind() || s.dim() != self.dim() {
                return Err(Error::ScenarioShape {
                    problem: self.name().to_string(),
                });
            }
        }
        Ok(())
    }

    fn check_action(&self, x: &Action) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// Empirical mean of `F(x, ·)` over the given scenarios.
    fn empirical_objective(&self, x: &Action, scenarios: &[Scenario]) -> f64 {
        let total: f64 = scenarios.iter().map(|s| self.objective(x, s)).sum();
        total / scenarios.len() as f64
    }

    fn empirical_gradient(&self, x: &Action, scenarios: &[Scenario]) -> DVector<f64> {
        let mut total = DVector::zeros(self.dim());
        for s in scenarios {
            total += self.gradient(x, s);
        }
        total / scenarios.len() as f64
    }

    fn empirical_hessian(&self, x: &Action, scenarios: &[Scenario]) -> DMatrix<f64> {
        let d = self.dim();
        let mut total = DMatrix::zeros(d, d);
        for s in scenarios {
            total += self.hessian(x, s);
        }
        total / scenarios.len() as f64
    }
}

/// Panics with a uniform message when a problem receives the wrong scenario shape.
pub(crate) fn shape_panic(problem: &str) -> ! {
    panic!("scenario shape does not match problem `{problem}`; call check_sample first")
}
