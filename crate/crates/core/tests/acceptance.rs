//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit if
//! any fails. Every criterion uses seeds derived from `ROOT_SEED`.

use std::process::ExitCode;
use std::time::Instant;

use mom_tournament::diagnostics::compute_diagnostics;
use mom_tournament::harness::{run_experiment_with_threads, to_csv_string, to_json_string, ExperimentConfig};
use mom_tournament::matrix_bounds::{empirical_min_eig_ratio, mom_quadratic_lower, EnsembleDraw};
use mom_tournament::mom::make_partition;
use mom_tournament::problem::{Action, FeasibleSet, Scenario, ScenarioSample, StochasticProblem};
use mom_tournament::problems::{build_problem, BachelierModel, Loss, PortfolioProblem, ProblemSpec};
use mom_tournament::rng::{derive_path, rng_from_seed};
use mom_tournament::saa::{saa_minimize, SolverOptions};
use mom_tournament::samplers::{draw, DistributionKind, DistributionSpec, FeatureSpec, NoiseSpec};
use mom_tournament::stats::wilson_interval;
use mom_tournament::tournament::{run_tournament, TournamentConfig};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

const ROOT_SEED: u64 = 0x5eed_acce;

struct Outcome {
    pass: bool,
    detail: String,
}

fn seed(criterion: u64, trial: u64) -> u64 {
    derive_path(ROOT_SEED, &[criterion, trial])
}

fn identity_rows(d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn gaussian(mean: Vec<f64>) -> DistributionSpec {
    let d = mean.len();
    DistributionSpec::new(DistributionKind::Gaussian { mean, cov: identity_rows(d) }, 0)
}

fn random_unit(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    let v: DVector<f64> = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
    let n = v.norm();
    v / n
}

/// `P[K >= 1]` for `K ~ Binomial(n, p)`, split as `P[K = 1] + P[K >= 2]`; and
/// the exact `P[#(+) != #(−)]` with each nonzero draw a fair sign.
fn two_point_oracle(n: usize, p: f64) -> (f64, f64) {
    let log_pmf = |k: usize| ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln();
    let one = log_pmf(1).exp();
    let at_least_two = 1.0 - log_pmf(0).exp() - one;
    let mut balanced = 0.0;
    for j in 0..=n / 2 {
        let k = 2 * j;
        let log_tie = ln_gamma(k as f64 + 1.0) - 2.0 * ln_gamma(j as f64 + 1.0) - k as f64 * 2f64.ln();
        balanced += (log_pmf(k) + log_tie).exp();
    }
    (one + at_least_two, 1.0 - balanced)
}

fn criterion_1() -> Outcome {
    let (n, trials) = (1024usize, 20_000usize);
    let r = (100.0 / n as f64).sqrt();
    let config = ExperimentConfig::from_json(&format!(
        r#"{{
            "problem": {{ "kind": "mean_estimation" }},
            "distribution": {{ "kind": "two_point_adversarial", "n_design": {n}, "r_design": {r} }},
            "methods": ["saa", "mom_scalar"],
            "n_grid": [{n}], "r_grid": [{r}], "trials": {trials},
            "seed": {}, "mom_blocks": 30
        }}"#,
        seed(1, 0)
    ))
    .expect("config");
    let start = Instant::now();
    let table = run_experiment_with_threads(&config, Some(1)).expect("run");
    let elapsed = start.elapsed().as_secs_f64();
    let nr = n as f64 * r;
    let (analytic, exact) = two_point_oracle(n, 1.0 / (nr * nr));
    let saa = table.cells[0].fail_freq.expect("ground truth");
    let mom = table.cells[1].fail_freq.expect("ground truth");
    let failures = (saa * trials as f64).round() as usize;
    let (lo, hi) = wilson_interval(failures, trials, 0.99).expect("interval");
    let pass = lo <= analytic && analytic <= hi && mom < 1e-3 && elapsed < 60.0;
    Outcome {
        pass,
        detail: format!(
            "SAA failure {saa:.5} with 99% Wilson [{lo:.5}, {hi:.5}] vs analytic {analytic:.5} (exact {exact:.5}); MoM(30) failure {mom:.5} < 1e-3; {elapsed:.1} s single-threaded < 60 s"
        ),
    }
}

fn criterion_2() -> Outcome {
    let (d, n, trials) = (4usize, 4000usize, 300u64);
    let spec = gaussian(vec![0.0; d]);
    let problem = build_problem(&ProblemSpec::MeanEstimation { feasible_set: FeasibleSet::AllOfSpace }, &spec).expect("problem");
    let r = (8.0 * d as f64 / n as f64).sqrt();
    let x_star = problem.ground_truth().expect("truth").x_star.clone();
    let start = Instant::now();
    let good: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut config = TournamentConfig::exact(problem.as_ref(), r).expect("config");
            let mut rng = rng_from_seed(seed(2, 1_000_000 + t));
            let decoy = x_star.as_vector() + random_unit(d, &mut rng) * (10.0 * r);
            config.extra_candidates = vec![Action::new(decoy).expect("decoy")];
            let sample = draw(&spec.with_seed(seed(2, t)), n).expect("sample");
            let report = run_tournament(problem.as_ref(), &sample, &config).expect("tournament");
            let decoy_index = report.pool.len() - 1;
            let within = report.champions.iter().all(|&c| (report.pool[c].as_vector() - x_star.as_vector()).norm() <= r);
            within && !report.champions.is_empty() && !report.champions.contains(&decoy_index)
        })
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let rate = good.iter().filter(|&&g| g).count() as f64 / trials as f64;
    Outcome {
        pass: rate >= 0.99 && elapsed < 120.0,
        detail: format!("champions within r and decoy excluded in {:.1}% of {trials} trials (need 99%); {elapsed:.1} s < 120 s", 100.0 * rate),
    }
}

fn criterion_3() -> Outcome {
    let mean = vec![-0.5, 1.0, -1.0, 0.5];
    let d = mean.len();
    let spec = gaussian(mean.clone());
    let problem = build_problem(&ProblemSpec::MeanEstimation { feasible_set: FeasibleSet::NonnegOrthant }, &spec).expect("problem");
    let r = 0.1;
    let diag = compute_diagnostics(problem.as_ref(), r).expect("diagnostics");
    let n = (8.0 * diag.n_g).ceil() as usize;
    let mu = DVector::from_vec(mean);
    // f(x) = ½‖x − μ‖² + ½ trace(Cov), minimized over the orthant at max(μ, 0).
    let f = |x: &DVector<f64>| 0.5 * (x - &mu).norm_squared() + 0.5 * d as f64;
    let f_star = f(&mu.map(|m| m.max(0.0)));
    let bound = 2.0 * diag.c_h * r * r;
    let trials = 300u64;
    let good: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let config = TournamentConfig::exact(problem.as_ref(), r).expect("config");
            let sample = draw(&spec.with_seed(seed(3, t)), n).expect("sample");
            let report = run_tournament(problem.as_ref(), &sample, &config).expect("tournament");
            !report.winners.is_empty()
                && report.winners.iter().all(|&w| f(report.pool[w].as_vector()) <= f_star + bound)
                && f(report.selected.as_vector()) <= f_star + bound
        })
        .collect();
    let rate = good.iter().filter(|&&g| g).count() as f64 / trials as f64;
    Outcome {
        pass: rate >= 0.95,
        detail: format!(
            "N = 8 N_G(r) = {n}, c_H = {}: all winners within 2 c_H r^2 = {bound:.4} of f* in {:.1}% of {trials} trials (need 95%)",
            diag.c_h,
            100.0 * rate
        ),
    }
}

fn gaussian_vectors(count: usize, d: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng))).collect()
}

fn criterion_4() -> Outcome {
    let (d, n, trials, gamma) = (10usize, 5000usize, 200u64, 0.5);
    let start = Instant::now();
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let draw = EnsembleDraw::from_outer_products(gaussian_vectors(n, d, seed(4, t)), Some(DMatrix::identity(d, d)), seed(4, t)).expect("ensemble");
            empirical_min_eig_ratio(&draw).expect("ratio")
        })
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let rate = ratios.iter().filter(|&&q| q >= 1.0 - gamma).count() as f64 / trials as f64;
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Outcome {
        pass: rate >= 0.99 && elapsed < 30.0,
        detail: format!("ratio >= 0.5 in {:.1}% of {trials} trials (need 99%, worst {worst:.3}); {elapsed:.1} s < 30 s", 100.0 * rate),
    }
}

fn criterion_5() -> Outcome {
    let (d, m, blocks, l, gamma, tau, directions, trials) = (10usize, 50usize, 20usize, 5usize, 0.5, 0.25, 50usize, 200u64);
    let partition = make_partition(m * blocks, blocks).expect("partition");
    let per_trial: Vec<(bool, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let draw = EnsembleDraw::from_outer_products(gaussian_vectors(m * blocks, d, seed(5, t)), Some(DMatrix::identity(d, d)), seed(5, t)).expect("ensemble");
            let mut rng = rng_from_seed(seed(5, 1_000_000 + t));
            let held = (0..directions)
                .filter(|_| {
                    let x = random_unit(d, &mut rng);
                    mom_quadratic_lower(&draw, &partition, &x, gamma, tau, l).expect("bound")
                })
                .count();
            (held == directions, held)
        })
        .collect();
    let rate = per_trial.iter().filter(|p| p.0).count() as f64 / trials as f64;
    let mean_held = per_trial.iter().map(|p| p.1 as f64).sum::<f64>() / trials as f64;
    Outcome {
        pass: rate >= 0.99,
        detail: format!(
            "bound held for all {directions} directions in {:.1}% of {trials} trials (need 99%); mean directions held {mean_held:.1}",
            100.0 * rate
        ),
    }
}

/// Central differences for `∇F` and, from the gradient, `∇²F`; relative
/// errors in the Euclidean and Frobenius norms.
fn fd_errors(problem: &dyn StochasticProblem, x: &DVector<f64>, s: &Scenario) -> (f64, f64) {
    let d = x.len();
    let at = |v: &DVector<f64>| Action::new(v.clone()).expect("finite");
    let g = problem.gradient(&at(x), s);
    let h = problem.hessian(&at(x), s);
    let mut fd_g = DVector::zeros(d);
    let mut fd_h = DMatrix::zeros(d, d);
    for i in 0..d {
        let step = 1e-5 * x[i].abs().max(1.0);
        let mut up = x.clone();
        let mut down = x.clone();
        up[i] += step;
        down[i] -= step;
        fd_g[i] = (problem.objective(&at(&up), s) - problem.objective(&at(&down), s)) / (2.0 * step);
        let col = (problem.gradient(&at(&up), s) - problem.gradient(&at(&down), s)) / (2.0 * step);
        fd_h.set_column(i, &col);
    }
    let rel = |err: f64, scale: f64| err / scale.max(1e-8);
    (rel((&fd_g - &g).norm(), g.norm()), rel((&fd_h - &h).norm(), h.norm()))
}

fn criterion_6() -> Outcome {
    let regression = |noise: NoiseSpec| {
        DistributionSpec::new(
            DistributionKind::RegressionPair { features: FeatureSpec::StandardGaussian { dim: 3 }, noise, x_tilde: vec![1.0, -0.5, 0.25] },
            0,
        )
    };
    let cases: Vec<(&str, ProblemSpec, DistributionSpec)> = vec![
        ("mean_estimation", ProblemSpec::MeanEstimation { feasible_set: FeasibleSet::AllOfSpace }, gaussian(vec![0.5, -1.0, 2.0])),
        ("linear_regression", ProblemSpec::LinearRegression { feasible_set: FeasibleSet::AllOfSpace }, regression(NoiseSpec::StudentT { dof: 3.0, scale: 1.0 })),
        ("ridge_regression", ProblemSpec::RidgeRegression { feasible_set: FeasibleSet::AllOfSpace }, regression(NoiseSpec::Gaussian { sd: 1.0 })),
        (
            "quadratic",
            ProblemSpec::Quadratic { feasible_set: FeasibleSet::AllOfSpace },
            DistributionSpec::new(
                DistributionKind::QuadraticCoefficients {
                    b_mean: vec![1.0, 0.0, -1.0],
                    b_cov: identity_rows(3),
                    a_mean: vec![vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.2], vec![0.0, 0.2, 1.5]],
                    wishart_dof: Some(5),
                },
                0,
            ),
        ),
        (
            "portfolio(exponential)",
            ProblemSpec::Portfolio { loss: Loss::Exponential, prices: None, feasible_set: FeasibleSet::AllOfSpace },
            DistributionSpec::new(
                DistributionKind::BachelierPair {
                    mean: vec![1.0, 0.8, 1.2],
                    cov: vec![vec![0.04, 0.01, 0.0], vec![0.01, 0.09, 0.02], vec![0.0, 0.02, 0.06]],
                    x_tilde: vec![0.5, -0.3, 0.2],
                    noise: NoiseSpec::Gaussian { sd: 0.2 },
                },
                0,
            ),
        ),
        (
            "portfolio(softplus^3)",
            ProblemSpec::Portfolio { loss: Loss::SoftplusPower { p: 3.0 }, prices: Some(vec![0.0; 3]), feasible_set: FeasibleSet::AllOfSpace },
            DistributionSpec::new(
                DistributionKind::RegressionPair {
                    features: FeatureSpec::StudentT { dim: 3, dof: 5.0 },
                    noise: NoiseSpec::StudentT { dof: 3.0, scale: 0.5 },
                    x_tilde: vec![0.2, 0.1, -0.3],
                },
                0,
            ),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (name, pspec, dspec)) in cases.into_iter().enumerate() {
        let problem = build_problem(&pspec, &dspec).expect("problem");
        let sample = draw(&dspec.with_seed(seed(6, k as u64)), 200).expect("sample");
        let mut rng = rng_from_seed(seed(6, 100 + k as u64));
        let (mut worst_g, mut worst_h) = (0.0_f64, 0.0_f64);
        for s in sample.iter() {
            let x = DVector::from_fn(problem.dim(), |_, _| rng.random_range(-1.0..1.0));
            let (eg, eh) = fd_errors(problem.as_ref(), &x, s);
            worst_g = worst_g.max(eg);
            worst_h = worst_h.max(eh);
        }
        pass &= worst_g < 1e-5 && worst_h < 1e-4;
        parts.push(format!("{name} {worst_g:.1e}/{worst_h:.1e}"));
    }
    Outcome {
        pass,
        detail: format!("worst gradient/Hessian relative error over 200 pairs (limits 1e-5/1e-4): {}", parts.join(", ")),
    }
}

/// Empirical exponential-utility objective, evaluated without the library.
fn exp_portfolio_objective(sample: &ScenarioSample, prices: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let total: f64 = sample
        .iter()
        .map(|s| match s {
            Scenario::Pair { x: returns, y } => (-y - (returns - prices).dot(x)).exp(),
            _ => unreachable!("pair scenarios"),
        })
        .sum();
    total / sample.len() as f64
}

/// Minimizer by repeated 400 × 400 grid search, each level zooming onto a
/// `±3`-cell window around the previous best point.
fn grid_oracle(objective: impl Fn(&DVector<f64>) -> f64 + Sync, mut lo: [f64; 2], mut hi: [f64; 2]) -> DVector<f64> {
    const K: usize = 400;
    let mut best = DVector::zeros(2);
    while (hi[0] - lo[0]).max(hi[1] - lo[1]) / K as f64 > 1e-8 {
        let h = [(hi[0] - lo[0]) / K as f64, (hi[1] - lo[1]) / K as f64];
        let (_, bi, bj) = (0..=K)
            .into_par_iter()
            .map(|i| {
                (0..=K)
                    .map(|j| (objective(&DVector::from_vec(vec![lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1]])), i, j))
                    .fold((f64::INFINITY, 0, 0), |a, b| if b.0 < a.0 { b } else { a })
            })
            .reduce(|| (f64::INFINITY, 0, 0), |a, b| if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a });
        best = DVector::from_vec(vec![lo[0] + bi as f64 * h[0], lo[1] + bj as f64 * h[1]]);
        lo = [best[0] - 3.0 * h[0], best[1] - 3.0 * h[1]];
        hi = [best[0] + 3.0 * h[0], best[1] + 3.0 * h[1]];
    }
    best
}

fn criterion_7() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let regression = DistributionSpec::new(
        DistributionKind::RegressionPair {
            features: FeatureSpec::StandardGaussian { dim: 4 },
            noise: NoiseSpec::StudentT { dof: 4.5, scale: 1.0 },
            x_tilde: vec![1.0, -2.0, 0.5, 0.0],
        },
        0,
    );
    let quadratic = DistributionSpec::new(
        DistributionKind::QuadraticCoefficients {
            b_mean: vec![1.0, -1.0, 2.0],
            b_cov: identity_rows(3),
            a_mean: vec![vec![3.0, 1.0, 0.0], vec![1.0, 2.0, 0.5], vec![0.0, 0.5, 1.0]],
            wishart_dof: Some(6),
        },
        0,
    );
    let cases = [
        ("mean", ProblemSpec::MeanEstimation { feasible_set: FeasibleSet::AllOfSpace }, gaussian(vec![1.0, 2.0, -3.0, 0.5])),
        ("quadratic", ProblemSpec::Quadratic { feasible_set: FeasibleSet::AllOfSpace }, quadratic),
        ("ridge", ProblemSpec::RidgeRegression { feasible_set: FeasibleSet::AllOfSpace }, regression.clone()),
        ("linreg", ProblemSpec::LinearRegression { feasible_set: FeasibleSet::AllOfSpace }, regression),
    ];
    for (k, (name, pspec, dspec)) in cases.into_iter().enumerate() {
        let problem = build_problem(&pspec, &dspec).expect("problem");
        let mut worst = 0.0_f64;
        for t in 0..20u64 {
            let sample = draw(&dspec.with_seed(seed(7, 100 * k as u64 + t)), 300).expect("sample");
            let (closed, cr) = saa_minimize(problem.as_ref(), &sample, &SolverOptions::default()).expect("closed form");
            let (iter, ir) = saa_minimize(problem.as_ref(), &sample, &SolverOptions::iterative()).expect("iterative");
            assert!(cr.closed_form && !ir.closed_form);
            worst = worst.max((closed.as_vector() - iter.as_vector()).norm());
        }
        pass &= worst <= 1e-8;
        parts.push(format!("{name} {worst:.1e}"));
    }

    let model = BachelierModel {
        mean: DVector::from_vec(vec![1.0, 0.8]),
        cov: DMatrix::from_row_slice(2, 2, &[0.05, 0.01, 0.01, 0.08]),
        x_tilde: DVector::from_vec(vec![0.6, -0.4]),
        noise_sd: 0.3,
    };
    let prices = DVector::from_vec(vec![0.95, 0.82]);
    let portfolio = PortfolioProblem::bachelier_exponential(model.clone(), Some(prices.clone()), FeasibleSet::AllOfSpace).expect("portfolio");
    let spec = DistributionSpec::new(
        DistributionKind::BachelierPair {
            mean: model.mean.iter().copied().collect(),
            cov: vec![vec![0.05, 0.01], vec![0.01, 0.08]],
            x_tilde: model.x_tilde.iter().copied().collect(),
            noise: NoiseSpec::Gaussian { sd: 0.3 },
        },
        seed(7, 999),
    );
    let sample = draw(&spec, 200).expect("sample");
    let (x, report) = saa_minimize(&portfolio, &sample, &SolverOptions::default()).expect("portfolio SAA");
    let oracle = grid_oracle(|z| exp_portfolio_objective(&sample, &prices, z), [-5.0, -5.0], [5.0, 5.0]);
    let gap = (x.as_vector() - &oracle).norm();
    pass &= gap <= 1e-4 && report.converged;
    parts.push(format!("portfolio d=2 vs grid {gap:.1e} (limit 1e-4)"));
    Outcome {
        pass,
        detail: format!("closed form vs iterative, worst l2 over 20 samples (limit 1e-8): {}", parts.join(", ")),
    }
}

const BACHELIER_DISTRIBUTION: &str = r#"{
    "kind": "bachelier_pair",
    "mean": [1.0, 0.8, 1.2],
    "cov": [[0.04, 0.01, 0.0], [0.01, 0.09, 0.02], [0.0, 0.02, 0.06]],
    "x_tilde": [0.5, -0.3, 0.2],
    "noise": { "kind": "gaussian", "sd": 0.2 }
}"#;

fn criterion_8() -> Outcome {
    let spec: DistributionSpec = serde_json::from_str(BACHELIER_DISTRIBUTION).expect("distribution");
    let problem = build_problem(&ProblemSpec::Portfolio { loss: Loss::Exponential, prices: None, feasible_set: FeasibleSet::AllOfSpace }, &spec).expect("problem");
    // N_G(1) = trace(H⁻¹G); r_N = sqrt(8 N_G(1) / N).
    let n_g1 = compute_diagnostics(problem.as_ref(), 1.0).expect("diagnostics").n_g;
    let median_error = |n: usize, k: u64| {
        let r = (8.0 * n_g1 / n as f64).sqrt();
        let config = ExperimentConfig::from_json(&format!(
            r#"{{ "problem": {{ "kind": "portfolio", "loss": {{ "kind": "exponential" }} }},
                 "distribution": {BACHELIER_DISTRIBUTION},
                 "methods": ["mom_tournament"], "n_grid": [{n}], "r_grid": [{r}],
                 "trials": 200, "seed": {} }}"#,
            seed(8, k)
        ))
        .expect("config");
        let table = run_experiment_with_threads(&config, None).expect("run");
        table.cells[0].median_err.expect("errors")
    };
    let small = median_error(500, 0);
    let large = median_error(8000, 1);
    let ratio = large / small;
    Outcome {
        pass: ratio < 0.55,
        detail: format!("median error {small:.4} at N=500, {large:.4} at N=8000, ratio {ratio:.3} < 0.55"),
    }
}

fn criterion_9() -> Outcome {
    let gaussian_sweep = format!(
        r#"{{ "problem": {{ "kind": "mean_estimation", "feasible_set": {{ "kind": "nonneg_orthant" }} }},
             "distribution": {{ "kind": "student_t", "dof": 3.0, "scale": 1.0, "dim": 3 }},
             "methods": ["saa", "mom_tournament", "mom_scalar"], "n_grid": [200, 800], "r_grid": [0.2, 0.4],
             "trials": 40, "seed": {} }}"#,
        seed(9, 0)
    );
    let portfolio = format!(
        r#"{{ "problem": {{ "kind": "portfolio", "loss": {{ "kind": "exponential" }} }},
             "distribution": {BACHELIER_DISTRIBUTION},
             "methods": ["saa", "mom_tournament"], "n_grid": [300], "r_grid": [0.3],
             "trials": 20, "seed": {} }}"#,
        seed(9, 1)
    );
    let mut pass = true;
    let mut rows = 0;
    for text in [gaussian_sweep, portfolio] {
        let config = ExperimentConfig::from_json(&text).expect("config");
        let outputs: Vec<(String, String)> = [Some(1), Some(2), Some(4), Some(8), Some(1)]
            .into_iter()
            .map(|threads| {
                let table = run_experiment_with_threads(&config, threads).expect("run");
                (to_csv_string(&table).expect("csv"), to_json_string(&table).expect("json"))
            })
            .collect();
        rows += outputs[0].0.lines().count() - 1;
        pass &= outputs.iter().all(|o| o == &outputs[0]);
    }
    Outcome {
        pass,
        detail: format!("CSV and JSON byte-identical over 5 runs at 1/2/4/8/1 threads ({rows} rows across 2 configs)"),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("heavy-tail separation", criterion_1),
        ("tournament estimation error", criterion_2),
        ("prediction error with boundary optimum", criterion_3),
        ("smallest-eigenvalue ratio", criterion_4),
        ("MoM-block quadratic lower bound", criterion_5),
        ("derivative consistency", criterion_6),
        ("closed-form vs iterative SAA", criterion_7),
        ("exponential portfolio rate", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {name}: {} [{:.1} s]", k + 1, outcome.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!outcome.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
