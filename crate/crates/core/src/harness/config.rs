use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::problems::{build_problem, ProblemSpec};
use crate::samplers::DistributionSpec;
use crate::tournament::CandidatePolicy;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Saa,
    MomTournament,
    /// Coordinate-wise median of means; mean estimation only.
    MomScalar,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Saa => "saa",
            Method::MomTournament => "mom_tournament",
            Method::MomScalar => "mom_scalar",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// A sweep over `methods × n_grid × r_grid`, `trials` repetitions per cell.
///
/// Trial `t` at the `i`-th sample size draws its sample with seed
/// `derive_path(seed, [i, t])`, shared by every method and radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    /// Scenario law; its own `seed` field is ignored in favour of trial seeds.
    pub distribution: DistributionSpec,
    pub methods: Vec<Method>,
    pub n_grid: Vec<usize>,
    pub r_grid: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub c_h: Option<f64>,
    #[serde(default)]
    pub sigma2: Option<f64>,
    /// Block count of `mom_scalar`; defaults to the tournament's `θ N min(1, r²/σ²)`.
    #[serde(default)]
    pub mom_blocks: Option<usize>,
    #[serde(default)]
    pub candidate_policy: Option<CandidatePolicy>,
    #[serde(default)]
    pub split_fraction: Option<f64>,
    /// Size of the evaluation sample used when `f` has no closed form;
    /// defaults to `10 · max(n_grid)`.
    #[serde(default)]
    pub evaluation_size: Option<usize>,
    /// Record wall-clock time per cell (makes output non-reproducible).
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("method list", "must name at least one method"));
        }
        for (k, m) in self.methods.iter().enumerate() {
            if self.methods[..k].contains(m) {
                return Err(Error::config("method list", format!("`{}` listed twice", m.as_str())));
            }
        }
        if self.n_grid.is_empty() {
            return Err(Error::config("n_grid", "must be nonempty"));
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            return Err(Error::config("n_grid", "every sample size must be at least 2"));
        }
        if self.r_grid.is_empty() {
            return Err(Error::config("r_grid", "must be nonempty"));
        }
        if self.r_grid.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::config("r_grid", "radii must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if let Some(t) = self.theta {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::config("theta", "must lie in (0, 1)"));
            }
        }
        if let Some(c) = self.c_h {
            if !(c >= 1.0 && c.is_finite()) {
                return Err(Error::config("c_h", "must be at least 1"));
            }
        }
        if let Some(s) = self.sigma2 {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("sigma2", "must be positive"));
            }
        }
        if let Some(s) = self.split_fraction {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::config("split_fraction", "must lie in (0, 1)"));
            }
        }
        if self.mom_blocks == Some(0) {
            return Err(Error::config("mom_blocks", "must be positive"));
        }
        if let Some(n) = self.mom_blocks {
            if self.n_grid.iter().any(|&size| size < n) {
                return Err(Error::config("mom_blocks", "exceeds a sample size in n_grid"));
            }
        }
        if self.evaluation_size == Some(0) {
            return Err(Error::config("evaluation_size", "must be positive"));
        }
        self.distribution.validate().map_err(|e| Error::config("distribution", e.to_string()))?;
        let problem = build_problem(&self.problem, &self.distribution).map_err(|e| Error::config("problem", e.to_string()))?;
        if self.methods.contains(&Method::MomScalar) && problem.name() != "mean_estimation" {
            return Err(Error::config("method list", "mom_scalar requires the mean_estimation problem"));
        }
        Ok(())
    }

    pub fn evaluation_size(&self) -> usize {
        self.evaluation_size
            .unwrap_or_else(|| 10 * self.n_grid.iter().copied().max().unwrap_or(1))
    }
}
