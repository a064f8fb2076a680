//! Monte-Carlo experiment runner comparing SAA, the tournament and the
//! scalar median-of-means estimator over grids of sample sizes and radii.

mod config;
mod emit;
mod run;

pub use config::{ExperimentConfig, Method, OutputFormat};
pub use emit::{emit, to_csv_string, to_json_string, CSV_HEADER};
pub use run::{run_experiment, run_experiment_with_threads, CellSummary, ResultTable, TrialResult};
