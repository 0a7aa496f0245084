//! Experiment protocol: seeded training runs evaluated after every unit,
//! aggregated across seeds into learning-curve statistics.

mod config;
mod io;
mod run;
mod stats;

pub use config::RunConfig;
pub use io::{
    read_metrics, write_metrics, write_summary, MetricsRow, SeedDiagnostics, SummaryDocument,
    METRICS_HEADER,
};
pub use run::{
    evaluate_policy, evaluate_with, map_seeds, run_seeds, run_training, run_training_with,
    EvalRecord, Execution, RunOptions, RunResult, StopFn,
};
pub use stats::{
    aggregate, mean_std, median, moving_average, steps_to_target, target_score, SeedCurves,
    SummaryStats, DEFAULT_SMOOTHING_WINDOW,
};
