//! The two-phase median-of-means tournament over a finite candidate pool.
//!
//! Phase 1 (estimation) partitions the first part of the sample into `n`
//! blocks; `x` defeats `y` on a block when its block mean of `F` is strictly
//! smaller, and wins the match on a strict majority of blocks. Champions win
//! every match against pool members at `‖·‖`-distance at least `r`.
//! Phase 2 (prediction) replays the champions against each other on the
//! held-out part with the non-strict comparison `f̂(x) <= f̂(y) + c_H r² / 4`.

mod candidates;
mod report;

pub use candidates::{generate_candidates, CandidatePolicy, CandidatePool};
pub use report::{Fallback, MatchRecord, Partitions, Provenance, TournamentReport, SCHEMA_VERSION};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::diagnostics::compute_diagnostics;
use crate::linalg;
use crate::mom::{choose_block_count, make_partition, median, BlockPartition};
use crate::norm::{estimate_hessian_norm, HNorm, ParameterTier};
use crate::problem::{Action, ScenarioSample, StochasticProblem};
use crate::saa::{saa_minimize, SolverOptions};
use crate::{Error, Result};

pub const DEFAULT_THETA: f64 = 0.1;
pub const DEFAULT_SPLIT_FRACTION: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct TournamentConfig {
    /// Radius in `‖·‖` units.
    pub r: f64,
    pub theta: f64,
    /// Variance proxy `σ²` in the block count `θ N min(1, r²/σ²)`.
    pub sigma2: f64,
    pub c_h: f64,
    pub norm: HNorm,
    pub candidate_policy: CandidatePolicy,
    /// Actions appended to the generated pool (e.g. planted decoys).
    pub extra_candidates: Vec<Action>,
    /// Fraction of the sample reserved for phase 2.
    pub split_fraction: f64,
    pub tier: ParameterTier,
    pub solver: SolverOptions,
}

impl TournamentConfig {
    /// User-supplied parameters with default `θ`, split and candidate policy.
    pub fn new(r: f64, sigma2: f64, c_h: f64, norm: HNorm) -> Self {
        TournamentConfig {
            r,
            theta: DEFAULT_THETA,
            sigma2,
            c_h,
            norm,
            candidate_policy: CandidatePolicy::default(),
            extra_candidates: Vec::new(),
            split_fraction: DEFAULT_SPLIT_FRACTION,
            tier: ParameterTier::UserSupplied,
            solver: SolverOptions::default(),
        }
    }

    /// Parameters read off the problem's ground truth.
    pub fn exact(problem: &dyn StochasticProblem, r: f64) -> Result<Self> {
        let diag = compute_diagnostics(problem, r)?;
        let truth = problem.ground_truth().ok_or(Error::MissingGroundTruth)?;
        let mut config = Self::new(r, diag.sigma2, diag.c_h.max(1.0), HNorm::new(truth.h.clone())?);
        config.tier = ParameterTier::Exact;
        Ok(config)
    }

    /// Parameters estimated from `sample`: `‖·‖` from the empirical Hessian at
    /// the SAA pilot, `σ²` from the whitened empirical gradient covariance
    /// there, and `c_H` from the problem's closed form (else 1).
    pub fn empirical(problem: &dyn StochasticProblem, sample: &ScenarioSample, r: f64) -> Result<Self> {
        let (pilot, _) = saa_minimize(problem, sample, &SolverOptions::default())?;
        let norm = estimate_hessian_norm(problem, &pilot, sample)?;
        let d = problem.dim();
        let grads: Vec<_> = sample.iter().map(|s| problem.gradient(&pilot, s)).collect();
        let mean = grads.iter().fold(nalgebra::DVector::zeros(d), |a, g| a + g) / grads.len() as f64;
        let mut cov = DMatrix::zeros(d, d);
        for g in &grads {
            cov += linalg::outer(&(g - &mean));
        }
        cov /= grads.len() as f64;
        let sigma2 = linalg::lambda_max(&norm.whiten(&cov)?).max(f64::MIN_POSITIVE);
        let c_h = problem.curvature_constant().unwrap_or(1.0).max(1.0);
        let mut config = Self::new(r, sigma2, c_h, norm);
        config.tier = ParameterTier::Empirical;
        Ok(config)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::param("r", "radius must be positive"));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::param("theta", "must lie in (0, 1)"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::param("sigma2", "must be positive"));
        }
        if !(self.c_h >= 1.0 && self.c_h.is_finite()) {
            return Err(Error::param("c_h", "must be at least 1"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::param("split_fraction", "must lie in (0, 1)"));
        }
        if self.norm.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.norm.dim() });
        }
        self.solver.validate()
    }

    /// Additive phase-2 slack `c_H r² / 4`.
    pub fn home_slack(&self) -> f64 {
        self.c_h * self.r * self.r / 4.0
    }

    /// Block partition used on a phase sample of `len` scenarios.
    pub fn partition_for(&self, len: usize) -> Result<BlockPartition> {
        make_partition(len, choose_block_count(len, self.r, self.sigma2, self.theta)?)
    }
}

fn check_block(partition: &BlockPartition, sample: &ScenarioSample, j: usize) -> Result<()> {
    if partition.total() != sample.len() {
        return Err(Error::DimensionMismatch { expected: partition.total(), got: sample.len() });
    }
    if j >= partition.block_count() {
        return Err(Error::OutOfRange { index: j, len: partition.block_count() });
    }
    Ok(())
}

fn block_mean(problem: &dyn StochasticProblem, sample: &ScenarioSample, partition: &BlockPartition, x: &Action, j: usize) -> f64 {
    let total: f64 = partition.indices(j).map(|i| problem.objective(x, &sample.scenarios[i])).sum();
    total / partition.block_size() as f64
}

/// `f̂_{I_j}(x)`: mean of `F(x, ξ_i)` over block `j`.
pub fn block_objective(problem: &dyn StochasticProblem, sample: &ScenarioSample, partition: &BlockPartition, x: &Action, j: usize) -> Result<f64> {
    check_block(partition, sample, j)?;
    problem.check_action(x)?;
    Ok(block_mean(problem, sample, partition, x, j))
}

/// `f̂_{I_j}(x) < f̂_{I_j}(y)`.
pub fn defeats_on_block(
    problem: &dyn StochasticProblem,
    sample: &ScenarioSample,
    partition: &BlockPartition,
    x: &Action,
    y: &Action,
    j: usize,
) -> Result<bool> {
    Ok(block_objective(problem, sample, partition, x, j)? < block_objective(problem, sample, partition, y, j)?)
}

/// Phase-1 match of `x` (index 0) against `y` (index 1).
pub fn wins_match(problem: &dyn StochasticProblem, sample: &ScenarioSample, partition: &BlockPartition, x: &Action, y: &Action) -> Result<MatchRecord> {
    let table = BlockTable::compute(problem, sample, partition, &[x.clone(), y.clone()])?;
    Ok(table.phase1_match(0, 1))
}

/// Phase-2 match of `x` (index 0) against `y` (index 1) with slack `c_H r² / 4`.
pub fn wins_home_match(
    problem: &dyn StochasticProblem,
    sample2: &ScenarioSample,
    partition2: &BlockPartition,
    x: &Action,
    y: &Action,
    c_h: f64,
    r: f64,
) -> Result<MatchRecord> {
    let table = BlockTable::compute(problem, sample2, partition2, &[x.clone(), y.clone()])?;
    Ok(table.home_match(0, 1, c_h * r * r / 4.0))
}

/// Block objectives of every pool member, `values[k][j] = f̂_{I_j}(pool[k])`.
struct BlockTable {
    values: Vec<Vec<f64>>,
}

impl BlockTable {
    fn compute(problem: &dyn StochasticProblem, sample: &ScenarioSample, partition: &BlockPartition, pool: &[Action]) -> Result<Self> {
        if partition.total() != sample.len() {
            return Err(Error::DimensionMismatch { expected: partition.total(), got: sample.len() });
        }
        problem.check_sample(sample)?;
        for x in pool {
            problem.check_action(x)?;
        }
        let values = pool
            .par_iter()
            .map(|x| (0..partition.block_count()).map(|j| block_mean(problem, sample, partition, x, j)).collect())
            .collect();
        Ok(BlockTable { values })
    }

    fn phase1_match(&self, x: usize, y: usize) -> MatchRecord {
        let (a, b) = (&self.values[x], &self.values[y]);
        let won = a.iter().zip(b).filter(|(fx, fy)| fx < fy).count();
        MatchRecord::new(x, y, won, a.len())
    }

    fn home_match(&self, x: usize, y: usize, slack: f64) -> MatchRecord {
        let (a, b) = (&self.values[x], &self.values[y]);
        let won = a.iter().zip(b).filter(|(fx, fy)| **fx <= **fy + slack).count();
        MatchRecord::new(x, y, won, a.len())
    }

    fn median_objective(&self, x: usize) -> f64 {
        median(&self.values[x]).unwrap_or(f64::INFINITY)
    }
}

fn pairwise_distances(norm: &HNorm, pool: &[Action]) -> Vec<Vec<f64>> {
    pool.iter()
        .map(|x| pool.iter().map(|y| norm.norm_unchecked(&(x.as_vector() - y.as_vector()))).collect())
        .collect()
}

fn champions_from(table: &BlockTable, dist: &[Vec<f64>], r: f64) -> (Vec<usize>, Vec<MatchRecord>) {
    let k = dist.len();
    let mut matches = Vec::new();
    let mut champions = Vec::new();
    for x in 0..k {
        let mut champion = true;
        for y in 0..k {
            if x != y && dist[x][y] >= r {
                let m = table.phase1_match(x, y);
                champion &= m.won;
                matches.push(m);
            }
        }
        if champion {
            champions.push(x);
        }
    }
    (champions, matches)
}

/// Pool indices that win every phase-1 match against members at distance `>= r`.
pub fn champion_set(problem: &dyn StochasticProblem, sample: &ScenarioSample, config: &TournamentConfig, pool: &[Action]) -> Result<Vec<usize>> {
    if pool.is_empty() {
        return Err(Error::Empty("candidate pool"));
    }
    config.validate(problem.dim())?;
    let partition = config.partition_for(sample.len())?;
    let table = BlockTable::compute(problem, sample, &partition, pool)?;
    Ok(champions_from(&table, &pairwise_distances(&config.norm, pool), config.r).0)
}

/// Runs both phases on `sample`, split by `config.split_fraction`.
///
/// The pool is generated from the whole sample. If no candidate is a
/// champion, the full-sample SAA is returned; if no champion wins all home
/// matches, selection runs over the champions. Both cases are flagged.
pub fn run_tournament(problem: &dyn StochasticProblem, sample: &ScenarioSample, config: &TournamentConfig) -> Result<TournamentReport> {
    config.validate(problem.dim())?;
    problem.check_sample(sample)?;
    let total = sample.len();
    if total < 2 {
        return Err(Error::param("sample", "the tournament needs at least two scenarios"));
    }
    let phase2_len = ((total as f64 * config.split_fraction).round() as usize).clamp(1, total - 1);
    let (first, second) = sample.split_tail(phase2_len)?;

    let mut generated = generate_candidates(problem, sample, &config.candidate_policy, &config.norm, config.r, &config.solver)?;
    candidates::check_user_actions(problem, &config.extra_candidates)?;
    for (k, x) in config.extra_candidates.iter().enumerate() {
        generated.actions.push(x.clone());
        generated.sources.push(format!("extra_{k}"));
    }
    let CandidatePool { actions: pool, sources, mut warnings } = generated;

    let partition1 = config.partition_for(first.len())?;
    let partition2 = config.partition_for(second.len())?;
    let table1 = BlockTable::compute(problem, &first, &partition1, &pool)?;
    let dist = pairwise_distances(&config.norm, &pool);
    let (champions, phase1_matches) = champions_from(&table1, &dist, config.r);

    let mut fallback = Fallback::default();
    let table2 = BlockTable::compute(problem, &second, &partition2, &pool)?;
    let slack = config.home_slack();
    let mut phase2_matches = Vec::new();
    let mut winners = Vec::new();
    for &x in &champions {
        let mut all = true;
        for &y in &champions {
            if x != y {
                let m = table2.home_match(x, y, slack);
                all &= m.won;
                phase2_matches.push(m);
            }
        }
        if all {
            winners.push(x);
        }
    }
    let champion_scores: Vec<f64> = champions.iter().map(|&c| table2.median_objective(c)).collect();

    let (selected, selected_index) = if champions.is_empty() {
        fallback.champions_empty = true;
        warnings.push("no champion found; returning the full-sample SAA".into());
        let (x, report) = saa_minimize(problem, sample, &config.solver)?;
        if !report.converged {
            warnings.push("fallback SAA did not converge".into());
        }
        (x, None)
    } else {
        let finalists = if winners.is_empty() {
            fallback.winners_empty = true;
            warnings.push("no champion won all home matches; selecting among champions".into());
            &champions
        } else {
            &winners
        };
        // Lowest score, ties to the lowest pool index (finalists are ascending).
        let best = finalists
            .iter()
            .copied()
            .min_by(|&a, &b| table2.median_objective(a).total_cmp(&table2.median_objective(b)).then(a.cmp(&b)))
            .expect("finalists nonempty");
        (pool[best].clone(), Some(best))
    };

    Ok(TournamentReport {
        schema_version: SCHEMA_VERSION,
        pool,
        pool_sources: sources,
        phase1_matches,
        champions,
        phase2_matches,
        winners,
        selected,
        selected_index,
        champion_scores,
        partition_meta: Partitions {
            phase1: partition1.meta(),
            phase2: partition2.meta(),
        },
        provenance: Provenance {
            tier: config.tier,
            r: config.r,
            theta: config.theta,
            theta_is_default: config.theta == DEFAULT_THETA,
            sigma2: config.sigma2,
            c_h: config.c_h,
            split_fraction: config.split_fraction,
            home_slack: slack,
        },
        fallback,
        warnings,
    })
}
