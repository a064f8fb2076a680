//! Median-of-means tournaments for convex stochastic optimization.
//!
//! The crate selects a near-optimal action for `min_x E[F(x, ξ)]` from an
//! i.i.d. sample, with confidence that degrades at the Gaussian rate even when
//! `F(x, ξ)` is heavy tailed. It also carries the sample-average-approximation
//! baseline, a set of application problems with closed-form ground truth,
//! sample-complexity diagnostics and Monte-Carlo checks for lower bounds on
//! the smallest singular value of random PSD matrix ensembles.
//!
//! Module map:
//!
//! - [`problem`], [`norm`], [`diagnostics`]: the problem abstraction, the
//!   Hessian-induced norm and the parameters `N_G(r)`, `σ²`, `c_H`.
//! - [`mom`]: block partitions and the scalar median-of-means estimator.
//! - [`tournament`]: champion selection and home matches over a candidate pool.
//! - [`matrix_bounds`]: smallest-eigenvalue and stable-lower-bound experiments.
//! - [`problems`]: mean estimation, regression, ridge, quadratic and portfolio.
//! - [`samplers`]: seeded scenario generators.
//! - [`saa`]: closed-form and projected-gradient SAA.
//! - [`harness`]: Monte-Carlo experiment runner behind the CLI.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod matrix_bounds;
pub mod mom;
pub mod norm;
pub mod problem;
pub mod problems;
pub mod rng;
pub mod saa;
pub mod samplers;
pub mod stats;
pub mod tournament;

pub use error::{Error, Result};
pub use norm::HNorm;
pub use problem::{Action, FeasibleSet, GroundTruth, Scenario, ScenarioSample, StochasticProblem};
