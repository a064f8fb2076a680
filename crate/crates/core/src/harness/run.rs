use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use crate::diagnostics::compute_diagnostics;
use crate::mom::{choose_block_count, make_partition, median};
use crate::norm::HNorm;
use crate::problem::{Action, Scenario, ScenarioSample, StochasticProblem};
use crate::problems::build_problem;
use crate::rng::{derive_path, derive_seed};
use crate::saa::{saa_minimize, SolverOptions};
use crate::samplers::draw;
use crate::stats::{mean_and_stderr, quantile, wilson_interval};
use crate::tournament::{run_tournament, TournamentConfig, DEFAULT_THETA};
use crate::{Error, Result};

/// Stream of the shared evaluation sample, disjoint from trial streams.
const EVALUATION_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: Method,
    #[serde(rename = "N")]
    pub n: usize,
    pub r: f64,
    pub trial: usize,
    pub seed: u64,
    /// `‖x̂ − x*‖` in the ground-truth norm; `+inf` for errored trials.
    pub estimation_error: Option<f64>,
    /// `f(x̂) − f(x*)`, exact or on the evaluation sample.
    pub prediction_gap: Option<f64>,
    /// Standard error of an evaluation-sample gap.
    pub gap_stderr: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub winners_empty: bool,
    pub champions_empty: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    #[serde(rename = "N")]
    pub n: usize,
    pub r: f64,
    pub trials: usize,
    /// Frequency of `estimation_error >= r`.
    pub fail_freq: Option<f64>,
    /// 95% Wilson interval of `fail_freq`.
    pub fail_ci_lo: Option<f64>,
    pub fail_ci_hi: Option<f64>,
    pub median_err: Option<f64>,
    pub q90_err: Option<f64>,
    pub median_gap: Option<f64>,
    pub runtime_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub schema_version: u32,
    /// Method-major, then `N`, then `r`, in config order.
    pub cells: Vec<CellSummary>,
    /// Same order as `cells`, trials ascending within a cell.
    pub trials: Vec<TrialResult>,
}

/// How the prediction gap is measured.
enum GapOracle {
    Exact { f_star: f64 },
    Evaluation { sample: ScenarioSample, reference: Action },
}

impl GapOracle {
    fn gap(&self, problem: &dyn StochasticProblem, x: &Action) -> (Option<f64>, Option<f64>) {
        match self {
            GapOracle::Exact { f_star } => (problem.population_objective(x).map(|f| f - f_star), None),
            GapOracle::Evaluation { sample, reference } => {
                let diffs: Vec<f64> = sample.iter().map(|s| problem.objective(x, s) - problem.objective(reference, s)).collect();
                match mean_and_stderr(&diffs) {
                    Ok((m, se)) => (Some(m), Some(se)),
                    Err(_) => (None, None),
                }
            }
        }
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    problem: Box<dyn StochasticProblem>,
    norm: Option<HNorm>,
    gap: GapOracle,
    sigma2: f64,
}

/// Runs the sweep on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let problem = build_problem(&config.problem, &config.distribution)?;
    let truth = problem.ground_truth().cloned();
    let norm = truth.as_ref().map(|t| HNorm::new(t.h.clone())).transpose()?;
    let has_population = truth.is_some() && problem.population_objective(&Action::zeros(problem.dim())).is_some();
    let gap = match (&truth, has_population) {
        (Some(t), true) => GapOracle::Exact { f_star: t.f_star },
        _ => {
            let sample = draw(&config.distribution.with_seed(derive_seed(config.seed, EVALUATION_STREAM)), config.evaluation_size())?;
            let reference = match &truth {
                Some(t) => t.x_star.clone(),
                None => saa_minimize(problem.as_ref(), &sample, &SolverOptions::default())?.0,
            };
            GapOracle::Evaluation { sample, reference }
        }
    };
    let sigma2 = match (config.sigma2, truth.is_some()) {
        (Some(s), _) => s,
        (None, true) => compute_diagnostics(problem.as_ref(), 1.0)?.sigma2.max(f64::MIN_POSITIVE),
        (None, false) => 1.0,
    };
    let ctx = Context { config, problem, norm, gap, sigma2 };

    let jobs: Vec<(usize, usize)> = (0..config.n_grid.len()).flat_map(|i| (0..config.trials).map(move |t| (i, t))).collect();
    // Each job yields results indexed [method][r].
    let per_job: Vec<Vec<Vec<TrialResult>>> = jobs.par_iter().map(|&(i, t)| run_job(&ctx, i, t)).collect();

    let mut cells = Vec::new();
    let mut trials = Vec::new();
    for (mi, &method) in config.methods.iter().enumerate() {
        for (i, &n) in config.n_grid.iter().enumerate() {
            for (ri, &r) in config.r_grid.iter().enumerate() {
                let cell: Vec<TrialResult> = (0..config.trials).map(|t| per_job[i * config.trials + t][mi][ri].clone()).collect();
                cells.push(summarize(method, n, r, &cell)?);
                trials.extend(cell);
            }
        }
    }
    Ok(ResultTable {
        schema_version: 1,
        cells,
        trials,
    })
}

/// Runs the sweep on a dedicated pool of `threads` workers (`None`: rayon default).
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<ResultTable> {
    match threads {
        None => run_experiment(config),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            pool.install(|| run_experiment(config))
        }
    }
}

fn run_job(ctx: &Context<'_>, i: usize, t: usize) -> Vec<Vec<TrialResult>> {
    let config = ctx.config;
    let n = config.n_grid[i];
    let seed = derive_path(config.seed, &[i as u64, t as u64]);
    let sample = draw(&config.distribution.with_seed(seed), n);
    config
        .methods
        .iter()
        .map(|&method| {
            let base = |r: f64| TrialResult {
                method,
                n,
                r,
                trial: t,
                seed,
                estimation_error: None,
                prediction_gap: None,
                gap_stderr: None,
                runtime_ms: None,
                winners_empty: false,
                champions_empty: false,
                error: None,
            };
            let sample = match &sample {
                Ok(s) => s,
                Err(e) => return config.r_grid.iter().map(|&r| failed(base(r), e, ctx)).collect(),
            };
            // SAA does not depend on r: solve once.
            let saa = (method == Method::Saa).then(|| {
                let start = Instant::now();
                (saa_minimize(ctx.problem.as_ref(), sample, &SolverOptions::default()), start.elapsed())
            });
            config
                .r_grid
                .iter()
                .map(|&r| {
                    let start = Instant::now();
                    let mut result = base(r);
                    let outcome = match method {
                        Method::Saa => {
                            let (x, elapsed) = saa.as_ref().expect("solved above");
                            result.runtime_ms = config.timing.then(|| elapsed.as_secs_f64() * 1e3);
                            match x {
                                Ok((x, _)) => Ok(x.clone()),
                                Err(e) => Err(Error::Unsupported(e.to_string())),
                            }
                        }
                        Method::MomScalar => coordinate_mom(ctx, sample, r),
                        Method::MomTournament => tournament_trial(ctx, sample, r).map(|(x, winners_empty, champions_empty)| {
                            result.winners_empty = winners_empty;
                            result.champions_empty = champions_empty;
                            x
                        }),
                    };
                    if config.timing && method != Method::Saa {
                        result.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
                    }
                    match outcome {
                        Ok(x) => {
                            result.estimation_error = ctx
                                .problem
                                .ground_truth()
                                .zip(ctx.norm.as_ref())
                                .map(|(truth, norm)| norm.norm_unchecked(&(x.as_vector() - truth.x_star.as_vector())));
                            let (gap, se) = ctx.gap.gap(ctx.problem.as_ref(), &x);
                            result.prediction_gap = gap;
                            result.gap_stderr = se;
                            result
                        }
                        Err(e) => failed(result, &e, ctx),
                    }
                })
                .collect()
        })
        .collect()
}

fn failed(mut result: TrialResult, e: &Error, ctx: &Context<'_>) -> TrialResult {
    result.error = Some(e.to_string());
    if ctx.problem.ground_truth().is_some() {
        result.estimation_error = Some(f64::INFINITY);
    }
    result
}

fn coordinate_mom(ctx: &Context<'_>, sample: &ScenarioSample, r: f64) -> Result<Action> {
    let config = ctx.config;
    let blocks = match config.mom_blocks {
        Some(b) => b,
        None => choose_block_count(sample.len(), r, ctx.sigma2, config.theta.unwrap_or(DEFAULT_THETA))?,
    };
    let partition = make_partition(sample.len(), blocks)?;
    let d = ctx.problem.dim();
    let mut x = DVector::zeros(d);
    let mut column = vec![0.0; sample.len()];
    for k in 0..d {
        for (slot, s) in column.iter_mut().zip(sample.iter()) {
            *slot = match s {
                Scenario::Point(v) => v[k],
                _ => return Err(Error::Unsupported("mom_scalar needs point scenarios".into())),
            };
        }
        x[k] = median(&crate::mom::block_means(&column, &partition)?)?;
    }
    Action::new(ctx.problem.feasible_set().project(&x))
}

fn tournament_trial(ctx: &Context<'_>, sample: &ScenarioSample, r: f64) -> Result<(Action, bool, bool)> {
    let config = ctx.config;
    let problem = ctx.problem.as_ref();
    let mut tc = if problem.ground_truth().is_some() {
        TournamentConfig::exact(problem, r)?
    } else {
        TournamentConfig::empirical(problem, sample, r)?
    };
    if let Some(s) = config.sigma2 {
        tc.sigma2 = s;
        tc.tier = crate::norm::ParameterTier::UserSupplied;
    }
    if let Some(c) = config.c_h {
        tc.c_h = c;
        tc.tier = crate::norm::ParameterTier::UserSupplied;
    }
    if let Some(theta) = config.theta {
        tc.theta = theta;
    }
    if let Some(split) = config.split_fraction {
        tc.split_fraction = split;
    }
    if let Some(policy) = &config.candidate_policy {
        tc.candidate_policy = policy.clone();
    }
    let report = run_tournament(problem, sample, &tc)?;
    Ok((report.selected, report.fallback.winners_empty, report.fallback.champions_empty))
}

fn summarize(method: Method, n: usize, r: f64, cell: &[TrialResult]) -> Result<CellSummary> {
    let errors: Vec<f64> = cell.iter().filter_map(|t| t.estimation_error).collect();
    let gaps: Vec<f64> = cell.iter().filter_map(|t| t.prediction_gap).collect();
    let (fail_freq, ci) = if errors.len() == cell.len() {
        let failures = errors.iter().filter(|&&e| e >= r).count();
        (Some(failures as f64 / cell.len() as f64), Some(wilson_interval(failures, cell.len(), 0.95)?))
    } else {
        (None, None)
    };
    let times: Vec<f64> = cell.iter().filter_map(|t| t.runtime_ms).collect();
    Ok(CellSummary {
        method,
        n,
        r,
        trials: cell.len(),
        fail_freq,
        fail_ci_lo: ci.map(|c| c.0),
        fail_ci_hi: ci.map(|c| c.1),
        median_err: quantile(&errors, 0.5).ok(),
        q90_err: quantile(&errors, 0.9).ok(),
        median_gap: quantile(&gaps, 0.5).ok(),
        runtime_ms: (times.len() == cell.len()).then(|| times.iter().sum::<f64>() / times.len() as f64),
    })
}
