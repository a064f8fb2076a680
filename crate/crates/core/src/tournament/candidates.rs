use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::mom::make_partition;
use crate::norm::HNorm;
use crate::problem::{Action, ScenarioSample, StochasticProblem};
use crate::rng::{derive_seed, rng_from_seed};
use crate::saa::{saa_minimize, SolverOptions};
use crate::{Error, Result};

/// How the finite pool the tournament runs over is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidatePolicy {
    UserPool { pool: Vec<Action> },
    /// SAA minimizers of `count` disjoint contiguous sub-samples plus the full-sample SAA.
    BlockwiseSaa { count: usize },
    /// The full-sample SAA plus `count` feasible points at `‖·‖`-distance
    /// `scale · r` from it in random directions.
    SaaPlusPerturbations { count: usize, scale: f64 },
}

impl Default for CandidatePolicy {
    fn default() -> Self {
        CandidatePolicy::BlockwiseSaa { count: 2 }
    }
}

/// A candidate pool with the origin of every member.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePool {
    pub actions: Vec<Action>,
    pub sources: Vec<String>,
    /// Dropped candidates, never silently.
    pub warnings: Vec<String>,
}

impl CandidatePool {
    fn push_dedup(&mut self, x: Action, source: String, dedup: Option<(&HNorm, f64)>) {
        if let Some((norm, tol)) = dedup {
            if let Some(k) = self.actions.iter().position(|a| norm.norm_unchecked(&(a.as_vector() - x.as_vector())) < tol) {
                self.warnings.push(format!("{source} merged into {} (within r/10)", self.sources[k]));
                return;
            }
        }
        self.actions.push(x);
        self.sources.push(source);
    }
}

/// Feasibility and shape check of user-supplied actions; errors name the index.
pub(crate) fn check_user_actions(problem: &dyn StochasticProblem, pool: &[Action]) -> Result<()> {
    for (index, x) in pool.iter().enumerate() {
        problem.check_action(x)?;
        if !problem.feasible_set().contains(x.as_vector()) {
            return Err(Error::InfeasibleCandidate { index });
        }
    }
    Ok(())
}

/// Builds the pool for `policy`. Generated candidates closer than `r / 10`
/// in `norm` to an earlier one are merged; user pools pass through unchanged.
pub fn generate_candidates(
    problem: &dyn StochasticProblem,
    sample: &ScenarioSample,
    policy: &CandidatePolicy,
    norm: &HNorm,
    r: f64,
    solver: &SolverOptions,
) -> Result<CandidatePool> {
    problem.check_sample(sample)?;
    if norm.dim() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: norm.dim() });
    }
    let mut pool = CandidatePool {
        actions: Vec::new(),
        sources: Vec::new(),
        warnings: Vec::new(),
    };
    let dedup = Some((norm, r / 10.0));
    let set = problem.feasible_set();
    let solve = |sub: &ScenarioSample, source: String, pool: &mut CandidatePool| -> Result<Option<Action>> {
        let (x, report) = saa_minimize(problem, sub, solver)?;
        if !report.converged {
            pool.warnings.push(format!(
                "{source} dropped: SAA did not converge (projected gradient norm {:e} after {} iterations)",
                report.projected_gradient_norm, report.iterations
            ));
            return Ok(None);
        }
        Ok(Some(Action::new(set.project(x.as_vector()))?))
    };
    match policy {
        CandidatePolicy::UserPool { pool: user } => {
            check_user_actions(problem, user)?;
            for (k, x) in user.iter().enumerate() {
                pool.actions.push(x.clone());
                pool.sources.push(format!("user_{k}"));
            }
        }
        &CandidatePolicy::BlockwiseSaa { count } => {
            if count == 0 || count > sample.len() {
                return Err(Error::param("count", "blockwise SAA needs 1 <= count <= N"));
            }
            if count > 1 {
                let partition = make_partition(sample.len(), count)?;
                for j in 0..count {
                    let source = format!("saa_block_{j}");
                    if let Some(x) = solve(&sample.slice(partition.range(j))?, source.clone(), &mut pool)? {
                        pool.push_dedup(x, source, dedup);
                    }
                }
            }
            if let Some(x) = solve(sample, "saa_full".into(), &mut pool)? {
                pool.push_dedup(x, "saa_full".into(), dedup);
            }
        }
        &CandidatePolicy::SaaPlusPerturbations { count, scale } => {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::param("scale", "must be positive"));
            }
            if let Some(centre) = solve(sample, "saa_full".into(), &mut pool)? {
                let mut rng = rng_from_seed(derive_seed(sample.seed, 0xca4d));
                pool.push_dedup(centre.clone(), "saa_full".into(), dedup);
                for k in 0..count {
                    let g = DVector::from_fn(problem.dim(), |_, _| StandardNormal.sample(&mut rng));
                    let u = norm.unit_direction(&(norm.inv_sqrt() * g));
                    let x = set.project(&(centre.as_vector() + u * (scale * r)));
                    pool.push_dedup(Action::new(x)?, format!("perturbation_{k}"), dedup);
                }
            }
        }
    }
    if pool.actions.is_empty() {
        return Err(Error::Empty("candidate pool"));
    }
    Ok(pool)
}
