//! Simulation designs, evaluation metrics, and benchmark drivers.

mod bench;
mod generate;
mod metrics;

pub use bench::{
    holdout_protocol, holdout_repeated, run_benchmark, run_rep, screening_coverage,
    BenchmarkReport, HoldoutReport, HoldoutSummary, MetricRow, RepRecord,
};
pub use generate::{
    example_response, gen_ar_gaussian, gen_example, poisson_mean, sample_poisson, sample_t2,
    ExampleSpec,
};
pub use metrics::{error_metrics, selection_metrics, ErrorMetrics, MeanStd, SelectionMetrics};
