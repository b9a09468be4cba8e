//! Steering and trajectory metrics, the three input wirings, and the full
//! train-and-drive protocol.

mod cases;
mod metrics;
mod run;

pub use cases::{case_input, case_threat, CaseError, CaseId, CnnPolicy};
pub use metrics::{
    improvement, lateral_at, mae, paired_t_test, rmse, t_two_sided_p, trajectory_rmse, MetricError, TTest,
};
pub use run::{
    case_rows, comparison_windows, experiment_dataset, open_loop, run_cases, run_experiment, train_case,
    windowed_pair, CaseReport, CaseRun, EvalError, EvalReport, Experiment, Rows, Stage,
};
