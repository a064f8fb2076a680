//! Monte-Carlo checks for lower bounds on the smallest eigenvalue of
//! averages of random PSD matrices, in plain and median-of-means form.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::mom::BlockPartition;
use crate::norm::{regularized_norm, HNorm, DEFAULT_REGULARIZATION_FLOOR};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stats::{mean_and_stderr, normal_critical_value, wilson_interval};
use crate::{Error, Result};

/// Where the reference mean `𝔸 = E[A]` of an ensemble came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanSource {
    Exact,
    /// Empirical mean of an independent calibration draw.
    Calibration,
    /// Empirical mean of the draw itself (PSD-regularized).
    SameDraw,
}

/// A batch of PSD matrices with a reference mean.
#[derive(Clone, Debug)]
pub struct EnsembleDraw {
    matrices: Vec<DMatrix<f64>>,
    /// `A_i = v_i v_iᵀ` when built from vectors; speeds up quadratic forms.
    factors: Option<Vec<DVector<f64>>>,
    mean: DMatrix<f64>,
    mean_source: MeanSource,
    pub seed: u64,
}

fn check_psd(m: &DMatrix<f64>, d: usize, index: usize) -> Result<()> {
    linalg::check_square(m, d)?;
    let scale = linalg::max_abs(m).max(1.0);
    if linalg::asymmetry(m) > 1e-12 * scale {
        return Err(Error::param("matrices", format!("matrix {index} is not symmetric")));
    }
    let lmin = linalg::lambda_min(m);
    if lmin < -1e-10 * scale {
        return Err(Error::NotPositiveDefinite(format!("matrix {index} has eigenvalue {lmin:e}")));
    }
    Ok(())
}

fn mean_of(matrices: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = matrices[0].nrows();
    matrices.iter().fold(DMatrix::zeros(d, d), |a, m| a + m) / matrices.len() as f64
}

impl EnsembleDraw {
    /// `mean = None` uses the draw's own regularized empirical mean.
    pub fn new(matrices: Vec<DMatrix<f64>>, mean: Option<DMatrix<f64>>, seed: u64) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Empty("ensemble"));
        }
        let d = matrices[0].nrows();
        for (i, m) in matrices.iter().enumerate() {
            check_psd(m, d, i)?;
        }
        let matrices: Vec<_> = matrices.iter().map(linalg::symmetrize).collect();
        let (mean, mean_source) = match mean {
            Some(m) => {
                check_psd(&m, d, usize::MAX)?;
                (linalg::symmetrize(&m), MeanSource::Exact)
            }
            None => (regularized_norm(mean_of(&matrices), DEFAULT_REGULARIZATION_FLOOR)?.matrix().clone(), MeanSource::SameDraw),
        };
        Ok(EnsembleDraw {
            matrices,
            factors: None,
            mean,
            mean_source,
            seed,
        })
    }

    /// Reference mean estimated on an independent calibration draw.
    pub fn with_calibration(matrices: Vec<DMatrix<f64>>, calibration: &[DMatrix<f64>], seed: u64) -> Result<Self> {
        if calibration.is_empty() {
            return Err(Error::Empty("calibration draw"));
        }
        let mut draw = Self::new(matrices, Some(mean_of(calibration)), seed)?;
        draw.mean_source = MeanSource::Calibration;
        Ok(draw)
    }

    /// `A_i = v_i v_iᵀ`, PSD by construction.
    pub fn from_outer_products(vectors: Vec<DVector<f64>>, mean: Option<DMatrix<f64>>, seed: u64) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Empty("ensemble"));
        }
        let d = vectors[0].len();
        if let Some(v) = vectors.iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
        if vectors.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("ensemble vectors".into()));
        }
        let matrices: Vec<_> = vectors.iter().map(linalg::outer).collect();
        let (mean, mean_source) = match mean {
            Some(m) => {
                check_psd(&m, d, usize::MAX)?;
                (linalg::symmetrize(&m), MeanSource::Exact)
            }
            None => (regularized_norm(mean_of(&matrices), DEFAULT_REGULARIZATION_FLOOR)?.matrix().clone(), MeanSource::SameDraw),
        };
        Ok(EnsembleDraw {
            matrices,
            factors: Some(vectors),
            mean,
            mean_source,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.mean.nrows()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn mean(&self) -> &DMatrix<f64> {
        &self.mean
    }

    pub fn mean_source(&self) -> MeanSource {
        self.mean_source
    }

    pub fn empirical_mean(&self) -> DMatrix<f64> {
        mean_of(&self.matrices)
    }

    /// `⟨A_i x, x⟩` for every member.
    pub fn quadratic_forms(&self, x: &DVector<f64>) -> Vec<f64> {
        match &self.factors {
            Some(vs) => vs.iter().map(|v| v.dot(x).powi(2)).collect(),
            None => self.matrices.iter().map(|a| x.dot(&(a * x))).collect(),
        }
    }

    fn mean_norm(&self) -> Result<HNorm> {
        HNorm::new(self.mean.clone()).map_err(|e| Error::NotPositiveDefinite(format!("reference mean is singular: {e}")))
    }
}

/// `λ_min(mean of A_i) / λ_min(𝔸)`.
pub fn empirical_min_eig_ratio(draw: &EnsembleDraw) -> Result<f64> {
    let reference = linalg::lambda_min(draw.mean());
    if !(reference > 0.0) {
        return Err(Error::NotPositiveDefinite("reference mean is singular".into()));
    }
    Ok(linalg::lambda_min(&draw.empirical_mean()) / reference)
}

/// Parameters of a stable lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlbParams {
    /// Block size.
    pub m: usize,
    /// Allowed relative shrinkage, in (0, 1).
    pub gamma: f64,
    /// Number of terms an adversary may remove.
    pub l: usize,
    /// Confidence exponent: failure probability at most `2 e^{-k}`.
    pub k: f64,
}

impl SlbParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::param("m", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::param("gamma", "must lie in (0, 1)"));
        }
        if self.l > self.m {
            return Err(Error::param("l", "cannot exceed m"));
        }
        if !(self.k >= 0.0) {
            return Err(Error::param("k", "must be non-negative"));
        }
        Ok(())
    }

    /// `2 e^{-k}`.
    pub fn failure_bound(&self) -> f64 {
        2.0 * (-self.k).exp()
    }
}

/// Result of a stable-lower-bound frequency test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlbCertificate {
    pub trials: usize,
    pub failures: usize,
    pub frequency: f64,
    /// 95% Wilson interval of the failure frequency.
    pub ci: (f64, f64),
    pub bound: f64,
    pub passes: bool,
}

/// Sum of `terms` after removing the `l` largest (the worst admissible `J`).
fn trimmed_sum(terms: &mut [f64], l: usize) -> f64 {
    if l >= terms.len() {
        return 0.0;
    }
    if l > 0 {
        let cut = terms.len() - l;
        terms.select_nth_unstable_by(cut, f64::total_cmp);
        terms[..cut].iter().sum()
    } else {
        terms.iter().sum()
    }
}

/// Frequency with which `(1/m) Σ_{i∉J} h_i² < (1−γ) E[h²]` for the worst `J`
/// with `|J| <= l`, over `trials` blocks of `m` draws of `h`.
///
/// Trial `t` draws from `rng_from_seed(derive_seed(seed, t))`; `expected_h2`
/// must come from the law of `h` or an independent calibration draw.
pub fn slb_certify<F>(draw_h: F, expected_h2: f64, params: &SlbParams, trials: usize, seed: u64) -> Result<SlbCertificate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    params.validate()?;
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if !(expected_h2 > 0.0 && expected_h2.is_finite()) {
        return Err(Error::DegenerateNorm("E[h²] must be positive".into()));
    }
    let threshold = (1.0 - params.gamma) * expected_h2;
    let failures = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let mut terms: Vec<f64> = (0..params.m).map(|_| draw_h(&mut rng).powi(2)).collect();
            trimmed_sum(&mut terms, params.l) / (params.m as f64) < threshold
        })
        .filter(|&failed| failed)
        .count();
    let frequency = failures as f64 / trials as f64;
    let bound = params.failure_bound();
    Ok(SlbCertificate {
        trials,
        failures,
        frequency,
        ci: wilson_interval(failures, trials, 0.95)?,
        bound,
        passes: frequency <= bound,
    })
}

/// Whether at least `(1−τ) n` blocks satisfy
/// `(1/m) Σ_{i ∈ I_j \ J_j} ⟨A_i x, x⟩ >= (1−γ) ‖x‖²_𝔸`, with `J_j` the `l`
/// largest terms of block `j`.
pub fn mom_quadratic_lower(draw: &EnsembleDraw, partition: &BlockPartition, x: &DVector<f64>, gamma: f64, tau: f64, l: usize) -> Result<bool> {
    if x.len() != draw.dim() {
        return Err(Error::DimensionMismatch { expected: draw.dim(), got: x.len() });
    }
    if partition.total() != draw.len() {
        return Err(Error::DimensionMismatch { expected: draw.len(), got: partition.total() });
    }
    if !(gamma >= 0.0) || !(0.0..=1.0).contains(&tau) {
        return Err(Error::param("gamma", "need gamma >= 0 and tau in [0, 1]"));
    }
    let norm2 = x.dot(&(draw.mean() * x));
    if !(norm2 > 0.0) {
        return Err(Error::param("x", "must have positive norm under the reference mean"));
    }
    let forms = draw.quadratic_forms(x);
    let m = partition.block_size();
    let threshold = (1.0 - gamma) * norm2;
    let good = (0..partition.block_count())
        .filter(|&j| {
            let mut terms: Vec<f64> = partition.indices(j).map(|i| forms[i]).collect();
            trimmed_sum(&mut terms, l) / m as f64 >= threshold
        })
        .count();
    let n = partition.block_count() as f64;
    Ok(good as f64 >= (1.0 - tau) * n - 1e-9)
}

/// `‖H^{-1/2} B H^{-1/2}‖₂`, the norm of `B` as a map from `(ℝ^d, ‖·‖)` to
/// its dual.
pub fn op_norm_under_h(b: &DMatrix<f64>, h: &HNorm) -> Result<f64> {
    linalg::check_square(b, h.dim())?;
    if linalg::asymmetry(b) > 1e-10 * linalg::max_abs(b).max(1.0) {
        return Err(Error::param("b", "must be symmetric"));
    }
    Ok(linalg::sym_spectral_norm(&h.whiten(b)?))
}

/// Empirical terms of `‖E[A𝔸⁻¹A]‖ <= E‖A𝔸⁻¹A‖ <= d ‖E[A𝔸⁻¹A]‖`, operator
/// norms taken under `𝔸`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichBounds {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    /// 99% normal half-width of `mid` as a Monte-Carlo mean.
    pub mc_half_width: f64,
}

pub fn sandwich_bounds_check(draw: &EnsembleDraw) -> Result<SandwichBounds> {
    let norm = draw.mean_norm()?;
    let d = draw.dim();
    let mut total = DMatrix::zeros(d, d);
    let mut norms = Vec::with_capacity(draw.len());
    for a in draw.matrices() {
        // Under 𝔸, A𝔸⁻¹A whitens to F² with F = 𝔸^{-1/2} A 𝔸^{-1/2}.
        let f = norm.whiten(a)?;
        let f2 = &f * &f;
        norms.push(linalg::sym_spectral_norm(&linalg::symmetrize(&f2)));
        total += f2;
    }
    let lhs = linalg::sym_spectral_norm(&linalg::symmetrize(&(total / draw.len() as f64)));
    let (mid, se) = mean_and_stderr(&norms)?;
    Ok(SandwichBounds {
        lhs,
        mid,
        rhs: d as f64 * lhs,
        mc_half_width: normal_critical_value(0.99)? * se,
    })
}
