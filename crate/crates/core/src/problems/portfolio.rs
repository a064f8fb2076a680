use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_x_tilde, minimize_quadratic};
use crate::linalg;
use crate::norm::{estimate_hessian_norm, HNorm};
use crate::problem::{shape_panic, Action, FeasibleSet, GroundTruth, Scenario, ScenarioKind, ScenarioSample, StochasticProblem};
use crate::rng::{derive_seed, rng_from_seed};
use crate::samplers::terms_diverge;
use crate::stats::mean_and_stderr;
use crate::{Error, Result};

/// Strictly convex increasing loss `ℓ` with three continuous derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    /// `ℓ(t) = exp(t)`, i.e. exponential utility.
    Exponential,
    /// `ℓ(t) = softplus(t)^p` with `p >= 3`: polynomial growth on the right.
    SoftplusPower { p: f64 },
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Loss {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Loss::SoftplusPower { p } if !(p >= 3.0 && p.is_finite()) => Err(Error::param("p", "softplus power needs p >= 3")),
            _ => Ok(()),
        }
    }

    /// `[ℓ, ℓ′, ℓ″, ℓ‴]` at `t`.
    pub fn derivatives(&self, t: f64) -> [f64; 4] {
        match *self {
            Loss::Exponential => {
                let e = t.exp();
                [e; 4]
            }
            Loss::SoftplusPower { p } => {
                let s = softplus(t);
                let q = sigmoid(t);
                let dq = q * (1.0 - q);
                let ddq = dq * (1.0 - 2.0 * q);
                let s1 = s.powf(p - 1.0);
                let s2 = s.powf(p - 2.0);
                let s3 = s.powf(p - 3.0);
                [
                    s.powf(p),
                    p * s1 * q,
                    p * (p - 1.0) * s2 * q * q + p * s1 * dq,
                    p * (p - 1.0) * (p - 2.0) * s3 * q.powi(3) + 3.0 * p * (p - 1.0) * s2 * q * dq + p * s1 * ddq,
                ]
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivatives(t)[0]
    }

    /// Whether `ℓ‴` is known to be non-negative and increasing, which turns
    /// the suprema in the portfolio constants into endpoint evaluations.
    pub fn third_derivative_monotone(&self) -> bool {
        matches!(self, Loss::Exponential)
    }
}

/// Gaussian prices `X ~ N(mean, cov)` and payoff `Y = ⟨X − mean, x̃⟩ + W`
/// with `W ~ N(0, noise_sd²)` independent of `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct BachelierModel {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub x_tilde: DVector<f64>,
    pub noise_sd: f64,
}

/// `F(x, (X, Y)) = ℓ(V_x)` with terminal loss argument `V_x = −Y − ⟨X − π, x⟩`.
#[derive(Clone, Debug)]
pub struct PortfolioProblem {
    d: usize,
    loss: Loss,
    prices: DVector<f64>,
    feasible: FeasibleSet,
    model: Option<BachelierModel>,
    truth: Option<GroundTruth>,
    c_h: Option<f64>,
}

impl PortfolioProblem {
    pub fn new(loss: Loss, prices: DVector<f64>, feasible: FeasibleSet) -> Result<Self> {
        loss.validate()?;
        let d = prices.len();
        if d == 0 {
            return Err(Error::param("prices", "must be nonempty"));
        }
        if prices.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prices".into()));
        }
        feasible.validate(d)?;
        Ok(PortfolioProblem {
            d,
            loss,
            prices,
            feasible,
            model: None,
            truth: None,
            c_h: None,
        })
    }

    /// Exponential loss in the Bachelier model, where `f` has a closed form.
    /// Prices default to the mean, which makes `x* = −x̃` when feasible.
    pub fn bachelier_exponential(model: BachelierModel, prices: Option<DVector<f64>>, feasible: FeasibleSet) -> Result<Self> {
        let prices = prices.unwrap_or_else(|| model.mean.clone());
        let mut p = Self::new(Loss::Exponential, prices, feasible)?;
        let d = p.d;
        if model.mean.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: model.mean.len() });
        }
        check_x_tilde(&model.x_tilde, d)?;
        linalg::check_square(&model.cov, d)?;
        if !(model.noise_sd >= 0.0) {
            return Err(Error::param("noise_sd", "must be non-negative"));
        }
        let sigma = linalg::symmetrize(&model.cov);
        let delta = &model.mean - &p.prices;
        // log f(x) = ½⟨Σx, x⟩ + ⟨Σx̃ − δ, x⟩ + const.
        let x_star = minimize_quadratic(&sigma, &(&sigma * &model.x_tilde - &delta), &p.feasible)?;
        let (f_star, h, g) = bachelier_moments(&model, &sigma, &delta, &x_star);
        p.truth = Some(GroundTruth::new(Action::new(x_star)?, h, g, f_star)?);
        p.model = Some(model);
        p.c_h = Some(p.sampled_curvature_constant()?);
        Ok(p)
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn prices(&self) -> &DVector<f64> {
        &self.prices
    }

    fn pair<'a>(&self, s: &'a Scenario) -> (&'a DVector<f64>, f64) {
        match s {
            Scenario::Pair { x, y } => (x, *y),
            _ => shape_panic(self.name()),
        }
    }

    /// `(V_x, X − π)`.
    fn wealth_argument(&self, x: &DVector<f64>, s: &Scenario) -> (f64, DVector<f64>) {
        let (xi, y) = self.pair(s);
        let centred = xi - &self.prices;
        (-y - centred.dot(x), centred)
    }

    /// `max(1, ½ sup ‖∇²f(y)‖_op)` over `y = x* + u` with `u` on a fixed set of
    /// directions of the unit `‖·‖`-sphere, scaled by 0.25…1 and kept when feasible.
    fn sampled_curvature_constant(&self) -> Result<f64> {
        let truth = self.truth.as_ref().ok_or(Error::MissingGroundTruth)?;
        let model = self.model.as_ref().ok_or(Error::MissingGroundTruth)?;
        let norm = HNorm::new(truth.h.clone())?;
        let sigma = linalg::symmetrize(&model.cov);
        let delta = &model.mean - &self.prices;
        let x_star = truth.x_star.as_vector();
        let mut best: f64 = 0.5;
        for u in unit_directions(&norm, 256, 0x5eed) {
            for scale in [0.25, 0.5, 0.75, 0.999] {
                let y = x_star + &u * scale;
                if !self.feasible.contains(&y) {
                    continue;
                }
                let (_, h, _) = bachelier_moments(model, &sigma, &delta, &y);
                best = best.max(0.5 * linalg::lambda_max(&norm.whiten(&h)?));
            }
        }
        Ok(best.max(1.0))
    }
}

/// `(f(x), ∇²f(x), Cov[∇F(x, ξ)])` in the Bachelier model with exponential loss.
fn bachelier_moments(model: &BachelierModel, sigma: &DMatrix<f64>, delta: &DVector<f64>, x: &DVector<f64>) -> (f64, DMatrix<f64>, DMatrix<f64>) {
    let z = x + &model.x_tilde;
    let sz = sigma * &z;
    let quad = z.dot(&sz);
    let s2 = model.noise_sd * model.noise_sd;
    let f = (-delta.dot(x) + 0.5 * quad + 0.5 * s2).exp();
    let nu = delta - &sz;
    let hess = (sigma + &nu * nu.transpose()) * f;
    // Tilting X by e^{2V} shifts the mean of X − π to δ − 2Σz.
    let nu2 = delta - &sz * 2.0;
    let second = (-2.0 * delta.dot(x) + 2.0 * quad + 2.0 * s2).exp();
    let g = (sigma + &nu2 * nu2.transpose()) * second - &nu * nu.transpose() * (f * f);
    (f, hess, g)
}

/// `count` deterministic directions on the unit `‖·‖`-sphere plus the
/// whitened coordinate axes and their negatives.
fn unit_directions(norm: &HNorm, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let d = norm.dim();
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(count + 2 * d);
    for i in 0..d {
        let e = DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 });
        let w = norm.inv_sqrt() * e;
        out.push(-&w);
        out.push(w);
    }
    for _ in 0..count {
        let g = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let w: DVector<f64> = norm.inv_sqrt() * g;
        out.push(norm.unit_direction(&w));
    }
    out
}

impl StochasticProblem for PortfolioProblem {
    fn name(&self) -> &str {
        "portfolio"
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
        let (v, _) = self.wealth_argument(x.as_vector(), s);
        self.loss.value(v)
    }

    fn gradient(&self, x: &Action, s: &Scenario) -> DVector<f64> {
        let (v, centred) = self.wealth_argument(x.as_vector(), s);
        centred * -self.loss.derivatives(v)[1]
    }

    fn hessian(&self, x: &Action, s: &Scenario) -> DMatrix<f64> {
        let (v, centred) = self.wealth_argument(x.as_vector(), s);
        linalg::outer(&centred) * self.loss.derivatives(v)[2]
    }

    fn ground_truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    fn curvature_constant(&self) -> Option<f64> {
        self.c_h
    }

    fn population_objective(&self, x: &Action) -> Option<f64> {
        let model = self.model.as_ref()?;
        let z = x.as_vector() + &model.x_tilde;
        let delta = &model.mean - &self.prices;
        let quad = z.dot(&(&model.cov * &z));
        Some((-delta.dot(x.as_vector()) + 0.5 * quad + 0.5 * model.noise_sd * model.noise_sd).exp())
    }
}

/// A Monte-Carlo estimate of a population constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub diverged: bool,
}

impl Estimate {
    /// `mean(terms)^{1/q}` with a delta-method standard error.
    fn root_of_mean(terms: &[f64], q: f64) -> Self {
        let diverged = terms_diverge(terms);
        match mean_and_stderr(terms) {
            Ok((m, se)) if m.is_finite() => {
                let value = m.powf(1.0 / q);
                let stderr = if m > 0.0 { value / (q * m) * se } else { 0.0 };
                Estimate { value, stderr, diverged }
            }
            _ => Estimate {
                value: f64::INFINITY,
                stderr: f64::INFINITY,
                diverged: true,
            },
        }
    }
}

/// Integrability constants of the portfolio problem at `x*`:
/// `σ̄² = E[(ℓ′²/ℓ″)²]^{1/2}`, `v₁ = E|V|`, `v₂ = E[ℓ″⁶]^{1/6}`,
/// `v_K = E[sup_B ℓ‴(V_x)²]^{1/2}` and `v_E = sup_B E[sup_t ℓ‴(V_{x*+t(x−x*)})²]^{1/2}`,
/// with `B` the unit `‖·‖`-ball around `x*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioDiagnostics {
    pub sigma_bar2: Estimate,
    pub v1: Estimate,
    pub v2: Estimate,
    pub v_k: Estimate,
    pub v_e: Estimate,
    /// Names of the constants whose estimates look infinite.
    pub diverged: Vec<String>,
    /// Directions searched for the outer supremum of `v_E`.
    pub directions: usize,
}

const GRID: usize = 64;

/// Monte-Carlo estimates of [`PortfolioDiagnostics`] on `sample`, which should
/// be independent of the data that produced `x_star`.
///
/// The balls are taken over all of `ℝ^d` (an upper bound when `𝒳` is smaller).
/// On that ball `{⟨X, u⟩ : ‖u‖ <= 1} = [−‖X‖_*, ‖X‖_*]`, so the inner suprema are
/// one-dimensional: endpoint evaluations when `ℓ‴` is non-negative increasing,
/// a grid search otherwise. The outer supremum of `v_E` is a maximum over
/// deterministic random directions.
pub fn portfolio_diagnostics(problem: &PortfolioProblem, x_star: &Action, sample: &ScenarioSample) -> Result<PortfolioDiagnostics> {
    problem.check_action(x_star)?;
    problem.check_sample(sample)?;
    let norm = match problem.ground_truth() {
        Some(t) => HNorm::new(t.h.clone())?,
        None => estimate_hessian_norm(problem, x_star, sample)?,
    };
    let loss = problem.loss();
    let monotone = loss.third_derivative_monotone();
    let third_sq = |t: f64| loss.derivatives(t)[3].powi(2);
    let sup_third_sq = |lo: f64, hi: f64| {
        if monotone {
            third_sq(hi)
        } else {
            (0..=GRID).map(|k| third_sq(lo + (hi - lo) * k as f64 / GRID as f64)).fold(0.0, f64::max)
        }
    };

    let n = sample.len();
    let mut args = Vec::with_capacity(n);
    let (mut sb, mut v1, mut v2, mut vk) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for s in sample.iter() {
        let (v, centred) = problem.wealth_argument(x_star.as_vector(), s);
        let [_, d1, d2, _] = loss.derivatives(v);
        let dual = norm.dual_norm(&centred)?;
        sb.push((d1 * d1 / d2).powi(2));
        v1.push(v.abs());
        v2.push(d2.powi(6));
        vk.push(sup_third_sq(v - dual, v + dual));
        args.push((v, centred));
    }

    let directions = unit_directions(&norm, 64, derive_seed(sample.seed, 0xd1ec));
    let mut v_e: Option<Estimate> = None;
    for u in &directions {
        let terms: Vec<f64> = args
            .iter()
            .map(|(v, centred)| {
                let shift = centred.dot(u);
                // V_{x*+t u} = V* − t⟨X − π, u⟩ for t in [0, 1].
                if monotone {
                    third_sq(v + shift.abs())
                } else {
                    let (a, b) = if shift >= 0.0 { (v - shift, *v) } else { (*v, v - shift) };
                    sup_third_sq(a, b)
                }
            })
            .collect();
        let est = Estimate::root_of_mean(&terms, 2.0);
        let better = match &v_e {
            None => true,
            Some(best) => est.value > best.value || (est.diverged && !best.diverged),
        };
        if better {
            v_e = Some(est);
        }
    }

    let out = PortfolioDiagnostics {
        sigma_bar2: Estimate::root_of_mean(&sb, 2.0),
        v1: Estimate::root_of_mean(&v1, 1.0),
        v2: Estimate::root_of_mean(&v2, 6.0),
        v_k: Estimate::root_of_mean(&vk, 2.0),
        v_e: v_e.expect("direction set is nonempty"),
        diverged: Vec::new(),
        directions: directions.len(),
    };
    let diverged = [
        ("sigma_bar2", &out.sigma_bar2),
        ("v1", &out.v1),
        ("v2", &out.v2),
        ("v_k", &out.v_k),
        ("v_e", &out.v_e),
    ]
    .iter()
    .filter(|(_, e)| e.diverged)
    .map(|(name, _)| name.to_string())
    .collect();
    Ok(PortfolioDiagnostics { diverged, ..out })
}
