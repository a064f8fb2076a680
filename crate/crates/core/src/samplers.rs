//! Seeded scenario generators.
//!
//! A sample of size `count` is drawn sequentially from one `ChaCha8Rng`
//! stream seeded by the spec's seed, so `draw(spec, a + b)` starts with
//! `draw(spec, a)` and identical specs give bit-identical samples on any
//! thread count. Independent streams for trials come from
//! [`crate::rng::derive_seed`].

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::problem::{Scenario, ScenarioKind, ScenarioSample};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Additive noise `W` of a regression or portfolio pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    Zero,
    Gaussian { sd: f64 },
    StudentT { dof: f64, scale: f64 },
}

impl NoiseSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Zero => Ok(()),
            NoiseSpec::Gaussian { sd } if sd >= 0.0 && sd.is_finite() => Ok(()),
            NoiseSpec::StudentT { dof, scale } if dof > 0.0 && scale > 0.0 => Ok(()),
            _ => Err(Error::param("noise", "invalid noise parameters")),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            NoiseSpec::Zero => 0.0,
            NoiseSpec::Gaussian { sd } => sd * rng.sample::<f64, _>(StandardNormal),
            NoiseSpec::StudentT { dof, scale } => scale * StudentT::new(dof).expect("validated").sample(rng),
        }
    }

    /// `E[W^k]` for `k` in 1..=4 (odd moments vanish by symmetry).
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k % 2 == 1 {
            return Ok(0.0);
        }
        match *self {
            NoiseSpec::Zero => Ok(0.0),
            NoiseSpec::Gaussian { sd } => Ok(match k {
                2 => sd * sd,
                4 => 3.0 * sd.powi(4),
                _ => return Err(Error::Unsupported(format!("Gaussian moment {k}"))),
            }),
            NoiseSpec::StudentT { dof, scale } => {
                if dof <= k as f64 {
                    return Err(Error::param("dof", format!("Student-t moment {k} requires dof > {k}")));
                }
                Ok(match k {
                    2 => scale * scale * dof / (dof - 2.0),
                    4 => scale.powi(4) * 3.0 * dof * dof / ((dof - 2.0) * (dof - 4.0)),
                    _ => return Err(Error::Unsupported(format!("Student-t moment {k}"))),
                })
            }
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, NoiseSpec::Zero | NoiseSpec::Gaussian { .. })
    }

    /// Standard deviation of Gaussian noise (0 for `Zero`).
    pub fn gaussian_sd(&self) -> Option<f64> {
        match *self {
            NoiseSpec::Zero => Some(0.0),
            NoiseSpec::Gaussian { sd } => Some(sd),
            _ => None,
        }
    }
}

/// Centred isotropic feature vectors `X` for regression pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpec {
    StandardGaussian { dim: usize },
    /// i.i.d. Student-t coordinates rescaled to unit variance.
    StudentT { dim: usize, dof: f64 },
}

impl FeatureSpec {
    pub fn dim(&self) -> usize {
        match *self {
            FeatureSpec::StandardGaussian { dim } | FeatureSpec::StudentT { dim, .. } => dim,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, FeatureSpec::StandardGaussian { .. })
    }

    /// `E[X_i⁴]` of a single coordinate, when finite.
    pub fn coordinate_kurtosis(&self) -> Option<f64> {
        match *self {
            FeatureSpec::StandardGaussian { .. } => Some(3.0),
            FeatureSpec::StudentT { dof, .. } if dof > 4.0 => Some(3.0 * (dof - 2.0) / (dof - 4.0)),
            FeatureSpec::StudentT { .. } => None,
        }
    }

    /// `L_X` in `E[<X,z>⁴]^{1/4} <= L_X E[<X,z>²]^{1/2}`, when known in closed form.
    pub fn l4_l2_constant(&self) -> Option<f64> {
        // Over unit z, E<X,z>⁴ = 3 + (κ − 3) Σ z_i⁴, maximal on an axis when κ > 3.
        self.coordinate_kurtosis().map(|k| k.max(3.0).powf(0.25))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    /// Scalar taking `±N r` with probability `1/(2(N r)²)` each and 0 otherwise.
    TwoPointAdversarial {
        n_design: usize,
        r_design: f64,
    },
    /// i.i.d. Pareto(`alpha`, `scale`) coordinates.
    Pareto {
        alpha: f64,
        scale: f64,
        #[serde(default = "one")]
        dim: usize,
    },
    /// i.i.d. `scale · t(dof)` coordinates.
    StudentT {
        dof: f64,
        scale: f64,
        #[serde(default = "one")]
        dim: usize,
    },
    /// `exp(Z)` with `Z ~ N(mu, sigma)`: log-normal prices.
    LognormalReturns {
        mu: Vec<f64>,
        sigma: Vec<Vec<f64>>,
    },
    /// `(X, Y)` with `Y = <X, x̃> + W`.
    RegressionPair {
        features: FeatureSpec,
        noise: NoiseSpec,
        x_tilde: Vec<f64>,
    },
    /// Gaussian prices `X ~ N(mean, cov)` with payoff `Y = <X - mean, x̃> + W`.
    BachelierPair {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
        x_tilde: Vec<f64>,
        noise: NoiseSpec,
    },
    /// Quadratic coefficients: `b ~ N(b_mean, b_cov)` and either `A = a_mean`
    /// or `A = (1/k) Σ Z Zᵀ` with `Z ~ N(0, a_mean)`, `k = wishart_dof`.
    QuadraticCoefficients {
        b_mean: Vec<f64>,
        b_cov: Vec<Vec<f64>>,
        a_mean: Vec<Vec<f64>>,
        #[serde(default)]
        wishart_dof: Option<usize>,
    },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub kind: DistributionKind,
    #[serde(default)]
    pub seed: u64,
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], d: usize, field: &'static str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::param(field, format!("expected a {d}x{d} matrix")));
    }
    let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(field.into()));
    }
    Ok(m)
}

/// Symmetric square-root factor of a PSD covariance.
fn covariance_factor(cov: &DMatrix<f64>, field: &'static str) -> Result<DMatrix<f64>> {
    let scale = linalg::max_abs(cov).max(1.0);
    if linalg::asymmetry(cov) > 1e-12 * scale {
        return Err(Error::param(field, "covariance must be symmetric"));
    }
    if linalg::lambda_min(cov) < -1e-10 * scale {
        return Err(Error::param(field, "covariance must be positive semidefinite"));
    }
    Ok(linalg::sym_sqrt_psd(cov))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, mean: &DVector<f64>, factor: &DMatrix<f64>) -> DVector<f64> {
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + factor * z
}

enum Compiled {
    Gaussian { mean: DVector<f64>, factor: DMatrix<f64> },
    TwoPoint { value: f64, p: f64 },
    Pareto { dist: Pareto<f64>, dim: usize },
    StudentT { dist: StudentT<f64>, scale: f64, dim: usize },
    Lognormal { mu: DVector<f64>, factor: DMatrix<f64> },
    Regression { features: FeatureSpec, noise: NoiseSpec, x_tilde: DVector<f64> },
    Bachelier { mean: DVector<f64>, factor: DMatrix<f64>, x_tilde: DVector<f64>, noise: NoiseSpec },
    Quadratic { b_mean: DVector<f64>, b_factor: DMatrix<f64>, a_mean: DMatrix<f64>, a_factor: Option<(DMatrix<f64>, usize)> },
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind, seed: u64) -> Self {
        DistributionSpec { kind, seed }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        DistributionSpec {
            kind: self.kind.clone(),
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DistributionKind::Gaussian { mean, .. } => mean.len(),
            DistributionKind::TwoPointAdversarial { .. } => 1,
            DistributionKind::Pareto { dim, .. } | DistributionKind::StudentT { dim, .. } => *dim,
            DistributionKind::LognormalReturns { mu, .. } => mu.len(),
            DistributionKind::RegressionPair { features, .. } => features.dim(),
            DistributionKind::BachelierPair { mean, .. } => mean.len(),
            DistributionKind::QuadraticCoefficients { b_mean, .. } => b_mean.len(),
        }
    }

    pub fn scenario_kind(&self) -> ScenarioKind {
        match &self.kind {
            DistributionKind::RegressionPair { .. } | DistributionKind::BachelierPair { .. } => ScenarioKind::Pair,
            DistributionKind::QuadraticCoefficients { .. } => ScenarioKind::Quadratic,
            _ => ScenarioKind::Point,
        }
    }

    pub fn generator_id(&self) -> String {
        let name = match &self.kind {
            DistributionKind::Gaussian { .. } => "gaussian",
            DistributionKind::TwoPointAdversarial { .. } => "two_point_adversarial",
            DistributionKind::Pareto { .. } => "pareto",
            DistributionKind::StudentT { .. } => "student_t",
            DistributionKind::LognormalReturns { .. } => "lognormal_returns",
            DistributionKind::RegressionPair { .. } => "regression_pair",
            DistributionKind::BachelierPair { .. } => "bachelier_pair",
            DistributionKind::QuadraticCoefficients { .. } => "quadratic_coefficients",
        };
        format!("{name}/d={}", self.dim())
    }

    pub fn validate(&self) -> Result<()> {
        self.compile().map(|_| ())
    }

    fn compile(&self) -> Result<Compiled> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::param("dim", "dimension must be positive"));
        }
        Ok(match &self.kind {
            DistributionKind::Gaussian { mean, cov } => Compiled::Gaussian {
                mean: DVector::from_column_slice(mean),
                factor: covariance_factor(&matrix_from_rows(cov, d, "cov")?, "cov")?,
            },
            &DistributionKind::TwoPointAdversarial { n_design, r_design } => {
                let nr = n_design as f64 * r_design;
                if n_design == 0 || !(r_design > 0.0) || nr * r_design < 1.0 {
                    return Err(Error::param("r_design", "two-point design requires N r² >= 1"));
                }
                Compiled::TwoPoint { value: nr, p: 1.0 / (nr * nr) }
            }
            &DistributionKind::Pareto { alpha, scale, dim } => Compiled::Pareto {
                dist: Pareto::new(scale, alpha).map_err(|e| Error::param("pareto", e.to_string()))?,
                dim,
            },
            &DistributionKind::StudentT { dof, scale, dim } => {
                if !(scale > 0.0) {
                    return Err(Error::param("scale", "must be positive"));
                }
                Compiled::StudentT {
                    dist: StudentT::new(dof).map_err(|e| Error::param("dof", e.to_string()))?,
                    scale,
                    dim,
                }
            }
            DistributionKind::LognormalReturns { mu, sigma } => Compiled::Lognormal {
                mu: DVector::from_column_slice(mu),
                factor: covariance_factor(&matrix_from_rows(sigma, d, "sigma")?, "sigma")?,
            },
            DistributionKind::RegressionPair { features, noise, x_tilde } => {
                noise.validate()?;
                if let FeatureSpec::StudentT { dof, .. } = features {
                    if !(*dof > 2.0) {
                        return Err(Error::param("dof", "unit-variance Student-t features require dof > 2"));
                    }
                }
                if x_tilde.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: x_tilde.len() });
                }
                Compiled::Regression {
                    features: features.clone(),
                    noise: noise.clone(),
                    x_tilde: DVector::from_column_slice(x_tilde),
                }
            }
            DistributionKind::BachelierPair { mean, cov, x_tilde, noise } => {
                noise.validate()?;
                if x_tilde.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: x_tilde.len() });
                }
                Compiled::Bachelier {
                    mean: DVector::from_column_slice(mean),
                    factor: covariance_factor(&matrix_from_rows(cov, d, "cov")?, "cov")?,
                    x_tilde: DVector::from_column_slice(x_tilde),
                    noise: noise.clone(),
                }
            }
            DistributionKind::QuadraticCoefficients { b_mean, b_cov, a_mean, wishart_dof } => {
                let a = matrix_from_rows(a_mean, d, "a_mean")?;
                let a_factor = match wishart_dof {
                    None => None,
                    Some(0) => return Err(Error::param("wishart_dof", "must be positive")),
                    Some(k) => Some((covariance_factor(&a, "a_mean")?, *k)),
                };
                Compiled::Quadratic {
                    b_mean: DVector::from_column_slice(b_mean),
                    b_factor: covariance_factor(&matrix_from_rows(b_cov, d, "b_cov")?, "b_cov")?,
                    a_mean: a,
                    a_factor,
                }
            }
        })
    }

    /// Population mean and covariance of a point distribution.
    pub fn moments(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let d = self.dim();
        match &self.kind {
            DistributionKind::Gaussian { mean, cov } => {
                Ok((DVector::from_column_slice(mean), matrix_from_rows(cov, d, "cov")?))
            }
            DistributionKind::TwoPointAdversarial { .. } => {
                self.validate()?;
                Ok((DVector::zeros(1), DMatrix::identity(1, 1)))
            }
            &DistributionKind::Pareto { alpha, scale, dim } => {
                if !(alpha > 2.0) {
                    return Err(Error::param("alpha", "finite variance requires alpha > 2"));
                }
                let mean = alpha * scale / (alpha - 1.0);
                let var = scale * scale * alpha / ((alpha - 1.0).powi(2) * (alpha - 2.0));
                Ok((DVector::from_element(dim, mean), DMatrix::identity(dim, dim) * var))
            }
            &DistributionKind::StudentT { dof, scale, dim } => {
                if !(dof > 2.0) {
                    return Err(Error::param("dof", "finite variance requires dof > 2"));
                }
                Ok((DVector::zeros(dim), DMatrix::identity(dim, dim) * (scale * scale * dof / (dof - 2.0))))
            }
            DistributionKind::LognormalReturns { mu, sigma } => {
                let s = matrix_from_rows(sigma, d, "sigma")?;
                let mean = DVector::from_fn(d, |i, _| (mu[i] + 0.5 * s[(i, i)]).exp());
                let cov = DMatrix::from_fn(d, d, |i, j| mean[i] * mean[j] * (s[(i, j)].exp() - 1.0));
                Ok((mean, cov))
            }
            _ => Err(Error::Unsupported(format!("point moments of {}", self.generator_id()))),
        }
    }
}

/// `count` i.i.d. scenarios from `spec`.
pub fn draw(spec: &DistributionSpec, count: usize) -> Result<ScenarioSample> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let compiled = spec.compile()?;
    let mut rng = rng_from_seed(spec.seed);
    let scenarios = (0..count).map(|_| draw_one(&compiled, &mut rng)).collect();
    ScenarioSample::new(scenarios, spec.seed, spec.generator_id())
}

/// Scalar draws of a one-dimensional point distribution.
pub fn draw_scalars(spec: &DistributionSpec, count: usize) -> Result<Vec<f64>> {
    if spec.dim() != 1 || spec.scenario_kind() != ScenarioKind::Point {
        return Err(Error::Unsupported("scalar draws need a one-dimensional point distribution".into()));
    }
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let compiled = spec.compile()?;
    let mut rng = rng_from_seed(spec.seed);
    Ok((0..count)
        .map(|_| match draw_one(&compiled, &mut rng) {
            Scenario::Point(v) => v[0],
            _ => unreachable!(),
        })
        .collect())
}

fn draw_one(c: &Compiled, rng: &mut ChaCha8Rng) -> Scenario {
    match c {
        Compiled::Gaussian { mean, factor } => Scenario::Point(gaussian_vector(rng, mean, factor)),
        &Compiled::TwoPoint { value, p } => {
            let u: f64 = rng.random();
            let v = if u < 0.5 * p {
                -value
            } else if u < p {
                value
            } else {
                0.0
            };
            Scenario::Point(DVector::from_element(1, v))
        }
        Compiled::Pareto { dist, dim } => Scenario::Point(DVector::from_fn(*dim, |_, _| dist.sample(rng))),
        Compiled::StudentT { dist, scale, dim } => {
            Scenario::Point(DVector::from_fn(*dim, |_, _| scale * dist.sample(rng)))
        }
        Compiled::Lognormal { mu, factor } => Scenario::Point(gaussian_vector(rng, mu, factor).map(f64::exp)),
        Compiled::Regression { features, noise, x_tilde } => {
            let x = match *features {
                FeatureSpec::StandardGaussian { dim } => DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal)),
                FeatureSpec::StudentT { dim, dof } => {
                    let t = StudentT::new(dof).expect("validated");
                    let unit = ((dof - 2.0) / dof).sqrt();
                    DVector::from_fn(dim, |_, _| unit * t.sample(rng))
                }
            };
            let y = x.dot(x_tilde) + noise.sample(rng);
            Scenario::Pair { x, y }
        }
        Compiled::Bachelier { mean, factor, x_tilde, noise } => {
            let x = gaussian_vector(rng, mean, factor);
            let y = (&x - mean).dot(x_tilde) + noise.sample(rng);
            Scenario::Pair { x, y }
        }
        Compiled::Quadratic { b_mean, b_factor, a_mean, a_factor } => {
            let b = gaussian_vector(rng, b_mean, b_factor);
            let a = match a_factor {
                None => a_mean.clone(),
                Some((factor, k)) => {
                    let d = b_mean.len();
                    let zero = DVector::zeros(d);
                    let mut acc = DMatrix::zeros(d, d);
                    for _ in 0..*k {
                        let z = gaussian_vector(rng, &zero, factor);
                        acc += linalg::outer(&z);
                    }
                    acc / *k as f64
                }
            };
            Scenario::Quadratic { b, a }
        }
    }
}

/// Probability that exactly one of `N` two-point draws (designed for `(N, r)`)
/// is nonzero: `N p (1-p)^{N-1}` with `p = 1/(N r)²`.
pub fn adversarial_failure_probability(n: usize, r: f64) -> Result<f64> {
    if n == 0 || !(r > 0.0) || (n as f64) * r * r < 1.0 {
        return Err(Error::param("r", "requires N r² >= 1"));
    }
    let p = 1.0 / (n as f64 * r).powi(2);
    Ok(n as f64 * p * (1.0 - p).powi(n as i32 - 1))
}

/// Exact `P[|μ̂_N| >= threshold]` for the empirical mean of `n` draws from the
/// two-point law designed for `(n_design, r_design)`.
///
/// With `K` nonzero draws and signs summing to `S`, `μ̂ = S · n_design r_design / n`.
pub fn two_point_mean_tail(n_design: usize, r_design: f64, n: usize, threshold: f64) -> Result<f64> {
    let value = n_design as f64 * r_design;
    if n_design == 0 || !(r_design > 0.0) || value * r_design < 1.0 {
        return Err(Error::param("r_design", "two-point design requires N r² >= 1"));
    }
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    let p = 1.0 / (value * value);
    let step = value / n as f64;
    // |S| must reach this many units.
    let needed = (threshold / step - 1e-12).ceil().max(0.0) as i64;
    let mut total = 0.0;
    let mut pk = (1.0 - p).powi(n as i32);
    for k in 0..=n {
        if k > 0 {
            pk *= (n - k + 1) as f64 / k as f64 * p / (1.0 - p);
        }
        if pk < 1e-300 && k as f64 > n as f64 * p {
            break;
        }
        total += pk * sign_sum_tail(k, needed);
    }
    Ok(total.min(1.0))
}

/// `P[|S_k| >= t]` for a sum of `k` independent fair signs.
fn sign_sum_tail(k: usize, t: i64) -> f64 {
    if t <= 0 {
        return 1.0;
    }
    // Number of +1s is Binomial(k, 1/2); S = 2j - k.
    let mut pj = 0.5_f64.powi(k as i32);
    let mut acc = 0.0;
    for j in 0..=k {
        if j > 0 {
            pj *= (k - j + 1) as f64 / j as f64;
        }
        if (2 * j as i64 - k as i64).abs() >= t {
            acc += pj;
        }
    }
    acc
}

/// Tail index below which [`terms_diverge`] flags divergence: the mean of a
/// law with a Pareto-type tail of index at most one is infinite.
pub const DIVERGENCE_TAIL_INDEX: f64 = 1.0;

/// Below this many terms only non-finite values are flagged.
pub const DIVERGENCE_MIN_TERMS: usize = 1000;

/// Hill estimate of the tail index of `|terms|` from the largest `⌈√n⌉`
/// values. Returns `+inf` when fewer than two terms are positive.
pub fn hill_tail_index(terms: &[f64]) -> f64 {
    let mut pos: Vec<f64> = terms.iter().map(|t| t.abs()).filter(|t| *t > 0.0).collect();
    if pos.len() < 2 {
        return f64::INFINITY;
    }
    pos.sort_unstable_by(|a, b| b.total_cmp(a));
    let k = ((terms.len() as f64).sqrt().ceil() as usize).clamp(1, pos.len() - 1);
    let threshold = pos[k].ln();
    let mean_excess = pos[..k].iter().map(|t| t.ln() - threshold).sum::<f64>() / k as f64;
    if mean_excess <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / mean_excess
    }
}

/// Flags the mean of `terms` as an estimate of an infinite expectation:
/// some term is non-finite, or at least [`DIVERGENCE_MIN_TERMS`] terms have
/// a [`hill_tail_index`] of at most [`DIVERGENCE_TAIL_INDEX`].
pub fn terms_diverge(terms: &[f64]) -> bool {
    terms.iter().any(|t| !t.is_finite())
        || (terms.len() >= DIVERGENCE_MIN_TERMS && hill_tail_index(terms) <= DIVERGENCE_TAIL_INDEX)
}

/// [`terms_diverge`] applied to `|v|^power`.
pub fn moment_diverges(values: &[f64], power: i32) -> bool {
    let terms: Vec<f64> = values.iter().map(|v| v.abs().powi(power)).collect();
    terms_diverge(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(d: usize, seed: u64) -> DistributionSpec {
        DistributionSpec::new(
            DistributionKind::Gaussian {
                mean: vec![0.0; d],
                cov: (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
            },
            seed,
        )
    }

    #[test]
    fn two_point_values_and_moments() {
        let r = (100.0_f64 / 1000.0).sqrt();
        let big = 1000.0 * r;
        let p = 1.0 / (big * big);
        // Population moments of the law itself: symmetric, E[X²] = p (N r)² = 1.
        assert_eq!(p * big * big, 1.0);
        let spec = DistributionSpec::new(DistributionKind::TwoPointAdversarial { n_design: 1000, r_design: r }, 11);
        let v = draw_scalars(&spec, 1_000_000).unwrap();
        assert!(v.iter().all(|&x| x == 0.0 || x == big || x == -big));
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        assert!(mean.abs() < 0.01, "mean {mean}");
        // The variance estimate is (count of nonzero draws) / 10 with the count
        // ~ Poisson(10), so its standard deviation is about 0.32.
        let var = v.iter().map(|x| x * x).sum::<f64>() / n - mean * mean;
        assert!((var - 1.0).abs() < 4.0 * (big.powi(4) * p / n).sqrt(), "var {var}");
        let freq = v.iter().filter(|&&x| x != 0.0).count() as f64 / n;
        assert!((freq - p).abs() <= 3.0 * (p * (1.0 - p) / n).sqrt());
    }

    #[test]
    fn gaussian_covariance_converges() {
        let s = draw(&gaussian(3, 5), 20_000).unwrap();
        let mut cov = DMatrix::<f64>::zeros(3, 3);
        for sc in s.iter() {
            if let Scenario::Point(v) = sc {
                cov += linalg::outer(v);
            }
        }
        cov /= s.len() as f64;
        assert!((cov - DMatrix::identity(3, 3)).amax() < 5.0 / (20_000f64).sqrt());
    }

    #[test]
    fn prefix_property_and_reproducibility() {
        let spec = gaussian(2, 99);
        let a = draw(&spec, 50).unwrap();
        let b = draw(&spec, 80).unwrap();
        assert_eq!(a.scenarios[..], b.scenarios[..50]);
        assert_eq!(a, draw(&spec, 50).unwrap());
        assert_ne!(a.scenarios, draw(&spec.with_seed(100), 50).unwrap().scenarios);
    }

    #[test]
    fn pareto_fourth_moment_diverges_but_mean_converges() {
        let spec = DistributionSpec::new(DistributionKind::Pareto { alpha: 2.5, scale: 1.0, dim: 1 }, 3);
        let v = draw_scalars(&spec, 200_000).unwrap();
        assert!(moment_diverges(&v, 4));
        assert!(!moment_diverges(&v, 1));
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean - 2.5 / 1.5).abs() < 0.02, "mean {mean}");
        let g = draw_scalars(&gaussian(1, 4), 200_000).unwrap();
        assert!(!moment_diverges(&g, 4));
    }

    #[test]
    fn lognormal_is_positive_with_gaussian_logs() {
        let spec = DistributionSpec::new(
            DistributionKind::LognormalReturns { mu: vec![0.1, -0.2], sigma: vec![vec![0.04, 0.01], vec![0.01, 0.09]] },
            8,
        );
        let s = draw(&spec, 50_000).unwrap();
        let logs: Vec<DVector<f64>> = s
            .iter()
            .map(|sc| match sc {
                Scenario::Point(v) => {
                    assert!(v.iter().all(|&x| x > 0.0));
                    v.map(f64::ln)
                }
                _ => unreachable!(),
            })
            .collect();
        let n = logs.len() as f64;
        let mean = logs.iter().fold(DVector::zeros(2), |a, v| a + v) / n;
        assert!((mean[0] - 0.1).abs() < 0.005 && (mean[1] + 0.2).abs() < 0.005);
        let var1 = logs.iter().map(|v| (v[1] - mean[1]).powi(2)).sum::<f64>() / n;
        assert!((var1 - 0.09).abs() < 0.003);
        let (m, c) = spec.moments().unwrap();
        assert!((m[0] - (0.1_f64 + 0.02).exp()).abs() < 1e-12);
        assert!(c[(0, 1)] > 0.0);
    }

    #[test]
    fn parameter_validation() {
        let bad = DistributionSpec::new(DistributionKind::Pareto { alpha: 1.5, scale: 1.0, dim: 1 }, 0);
        assert!(bad.moments().is_err());
        assert!(bad.validate().is_ok());
        let t = DistributionSpec::new(DistributionKind::StudentT { dof: 2.0, scale: 1.0, dim: 1 }, 0);
        assert!(t.moments().is_err());
        let two = DistributionSpec::new(DistributionKind::TwoPointAdversarial { n_design: 10, r_design: 0.1 }, 0);
        assert!(draw(&two, 5).is_err());
        assert!(draw(&gaussian(2, 0), 0).is_err());
    }

    #[test]
    fn failure_probability_examples() {
        let p = adversarial_failure_probability(100, 1.0).unwrap();
        let expected = 100.0 * 1e-4 * (1.0 - 1e-4_f64).powi(99);
        assert!((p - expected).abs() < 1e-15);
        assert!((p - 9.90e-3).abs() < 1e-5);
        // N = 1: the single draw is nonzero with probability p = 1/r².
        assert!((adversarial_failure_probability(1, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(adversarial_failure_probability(10, 0.1).is_err());
    }

    #[test]
    fn failure_probability_large_n_limit() {
        // With N r² = c fixed, p = 1/(cN) and N p (1-p)^{N-1} -> (1/c) e^{-1/c}.
        let c = 4.0;
        let n = 1_000_000;
        let r = (c / n as f64).sqrt();
        let p = adversarial_failure_probability(n, r).unwrap();
        let limit = (1.0 / c) * (-1.0 / c).exp();
        assert!((p - limit).abs() < 1e-6, "{p} vs {limit}");
    }

    #[test]
    fn exact_tail_brackets_the_one_point_formula() {
        let n = 1024;
        let r = (100.0 / n as f64).sqrt();
        let exact = two_point_mean_tail(n, r, n, r).unwrap();
        let one = adversarial_failure_probability(n, r).unwrap();
        let p = 1.0 / (n as f64 * r).powi(2);
        let at_least_two = 1.0 - (1.0 - p).powi(n as i32) - one;
        assert!(exact >= one && exact <= one + at_least_two + 1e-15);
        // Single draw with threshold r: nonzero draw lands exactly at ±N r.
        assert!((two_point_mean_tail(4, 0.5, 1, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(sign_sum_tail(2, 1), 0.5);
        assert_eq!(sign_sum_tail(3, 1), 1.0);
    }
}
