//! Experiment orchestration: configs, multi-seed runs and report files.

mod config;
mod report;
mod run;

pub use config::{
    DatasetSource, ExperimentConfig, ModelEntry, Protocol, SeedList, SimSource, WindowPlan, DEFAULT_RATIOS,
    DEFAULT_SEED_COUNT,
};
pub use report::{drift_csv, emit_report, markdown, metrics_csv, ReportFormat, DRIFT_FILE, MARKDOWN_FILE};
pub use run::{
    config_hash, load_report, run_experiment, save_report, ExperimentReport, Provenance, ReportCell, SeedMetrics,
    REPORT_FILE, STRATIFIED_WINDOW,
};
