//! Evaluation: confusion-matrix metrics, grid search, a uniform wrapper
//! over the six methods, and the benchmark runner with its reports.

mod classifier;
mod grid;
mod metrics;
mod reference;
mod runner;
pub mod synthetic;

pub use classifier::{cell_seed, fit_classifier, select_and_fit, Classifier, Example, FitContext, Method, NeuralOptions, Selection};
pub use grid::{grid_search, CellOutcome, GridAxis, GridOutcome, GridSearchSpec, Hyperparameters};
pub use metrics::{accuracy, metrics, per_class_metrics, weighted_f1, ClassMetrics, ConfusionMatrix, Metrics};
pub use reference::{reference_scores, ReferenceScores, REFERENCE_TASKS};
pub use runner::{
    default_grid, load_task_datasets, prepare_task, run_benchmark, task_embeddings, BenchmarkConfig, BenchmarkReport, CellReport, CellStatus,
    PipelineOptions, PreparedTask, Task, TaskSummary, REPORT_VERSION,
};
