//! The Hessian-induced norm `‖z‖ = <H z, z>^{1/2}` and its dual.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::problem::{Action, ScenarioSample, StochasticProblem};
use crate::{Error, Result};

/// Relative PSD floor for empirical Hessians: `ε_reg = floor · mean diagonal`.
pub const DEFAULT_REGULARIZATION_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct HNorm {
    matrix: DMatrix<f64>,
    cholesky: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
}

impl HNorm {
    /// Builds the norm from a symmetric positive definite `H`.
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch {
                expected: h.nrows(),
                got: h.ncols(),
            });
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("norm matrix".into()));
        }
        let scale = linalg::max_abs(&h).max(f64::MIN_POSITIVE);
        if linalg::asymmetry(&h) > 1e-10 * scale {
            return Err(Error::NotPositiveDefinite("matrix is not symmetric".into()));
        }
        let h = linalg::symmetrize(&h);
        let chol = h
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        let inv_sqrt = linalg::sym_inv_sqrt(&h)?;
        Ok(HNorm {
            cholesky: chol.l(),
            matrix: h,
            inv_sqrt,
        })
    }

    pub fn identity(d: usize) -> Self {
        HNorm {
            matrix: DMatrix::identity(d, d),
            cholesky: DMatrix::identity(d, d),
            inv_sqrt: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular `L` with `H = L Lᵀ`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    /// `H^{-1/2}`.
    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    fn check(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    pub fn norm(&self, z: &DVector<f64>) -> Result<f64> {
        self.check(z)?;
        Ok(self.norm_unchecked(z))
    }

    pub(crate) fn norm_unchecked(&self, z: &DVector<f64>) -> f64 {
        (self.cholesky.transpose() * z).norm()
    }

    pub fn distance(&self, x: &Action, y: &Action) -> Result<f64> {
        self.norm(&(x.as_vector() - y.as_vector()))
    }

    /// `‖y‖_* = <H⁻¹ y, y>^{1/2}`.
    pub fn dual_norm(&self, y: &DVector<f64>) -> Result<f64> {
        self.check(y)?;
        Ok((&self.inv_sqrt * y).norm())
    }

    /// `H^{-1/2} B H^{-1/2}`, symmetrized.
    pub fn whiten(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        linalg::check_square(b, self.dim())?;
        Ok(linalg::symmetrize(&(&self.inv_sqrt * b * &self.inv_sqrt)))
    }

    /// Maps a Euclidean unit vector onto the unit sphere of this norm.
    pub fn unit_direction(&self, euclidean: &DVector<f64>) -> DVector<f64> {
        let u = &self.inv_sqrt * euclidean;
        let n = self.norm_unchecked(&u);
        u / n
    }
}

/// `‖z‖` for a given norm.
pub fn h_norm(h: &HNorm, z: &DVector<f64>) -> Result<f64> {
    h.norm(z)
}

/// Where the tournament's norm and variance proxy came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterTier {
    /// Computed from the problem's ground truth.
    Exact,
    /// Supplied by the caller.
    UserSupplied,
    /// Estimated from the sample at an SAA pilot.
    Empirical,
}

/// Empirical Hessian norm at `pilot`, regularized by `ε_reg·Id` when its
/// smallest eigenvalue falls below `ε_reg = floor · mean diagonal`.
pub fn estimate_hessian_norm(
    problem: &dyn StochasticProblem,
    pilot: &Action,
    sample: &ScenarioSample,
) -> Result<HNorm> {
    estimate_hessian_norm_with_floor(problem, pilot, sample, DEFAULT_REGULARIZATION_FLOOR)
}

pub fn estimate_hessian_norm_with_floor(
    problem: &dyn StochasticProblem,
    pilot: &Action,
    sample: &ScenarioSample,
    floor: f64,
) -> Result<HNorm> {
    problem.check_action(pilot)?;
    problem.check_sample(sample)?;
    if !problem.feasible_set().contains(pilot) {
        return Err(Error::param("pilot", "pilot action is infeasible"));
    }
    if !(floor >= 0.0) {
        return Err(Error::param("floor", "regularization floor must be non-negative"));
    }
    let h = linalg::symmetrize(&problem.empirical_hessian(pilot, &sample.scenarios));
    regularized_norm(h, floor)
}

pub(crate) fn regularized_norm(h: DMatrix<f64>, floor: f64) -> Result<HNorm> {
    let d = h.nrows();
    if h.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateNorm("all sampled Hessians are zero".into()));
    }
    let mean_diag = h.diagonal().sum() / d as f64;
    if !(mean_diag > 0.0) {
        return Err(Error::DegenerateNorm(format!("mean Hessian diagonal is {mean_diag:e}")));
    }
    let eps = floor * mean_diag;
    let lmin = linalg::lambda_min(&h);
    let h = if lmin < eps { h + DMatrix::identity(d, d) * eps } else { h };
    HNorm::new(h).map_err(|e| Error::DegenerateNorm(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn euclidean_case() {
        let h = HNorm::identity(3);
        assert_eq!(h_norm(&h, &v(&[3.0, 4.0, 0.0])).unwrap(), 5.0);
    }

    #[test]
    fn diagonal_scaling() {
        let h = HNorm::new(DMatrix::from_diagonal(&v(&[4.0, 1.0]))).unwrap();
        assert!((h_norm(&h, &v(&[1.0, 0.0])).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn coupled_quadratic_form() {
        // (1,1) [[2,1],[1,2]] (1,1)ᵀ = 2 + 1 + 1 + 2 = 6.
        let h = HNorm::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((h_norm(&h, &v(&[1.0, 1.0])).unwrap() - 6.0_f64.sqrt()).abs() < 1e-14);
        // H⁻¹ = [[2,-1],[-1,2]]/3, so ‖(1,1)‖_*² = 2/3.
        assert!((h.dual_norm(&v(&[1.0, 1.0])).unwrap() - (2.0_f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let h = HNorm::identity(2);
        assert!(matches!(h_norm(&h, &v(&[1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(HNorm::new(DMatrix::from_diagonal(&v(&[1.0, 0.0]))).is_err());
    }

    #[test]
    fn regularization_rescues_rank_deficient_estimate() {
        let h = DMatrix::from_diagonal(&v(&[2.0, 0.0]));
        let n = regularized_norm(h, 1e-10).unwrap();
        assert!((n.matrix()[(1, 1)] - 1e-10).abs() < 1e-20);
        assert!(matches!(
            regularized_norm(DMatrix::zeros(2, 2), 1e-10),
            Err(Error::DegenerateNorm(_))
        ));
    }

    #[test]
    fn unit_direction_has_unit_norm() {
        let h = HNorm::new(DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0])).unwrap();
        let u = h.unit_direction(&v(&[0.6, 0.8]));
        assert!((h.norm(&u).unwrap() - 1.0).abs() < 1e-14);
    }
}
