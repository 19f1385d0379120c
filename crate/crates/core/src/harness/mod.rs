//! Replicated coverage, rate, oversmoothing and empirical-Bayes studies.
//!
//! Every random quantity is drawn from a stream derived from the master seed:
//! data for replication `r` at the `k`-th sample size from
//! `(DATA, k, r)`, radii from a single `RADIUS` (or `EB_RADIUS`) stream shared
//! by all sample sizes, so radii along the `n` grid use common random
//! numbers. Results do not depend on the number of worker threads.

mod config;
mod report;
mod runner;

pub use config::{
    ExperimentConfig, NormChoice, PriorAlpha, RunOptions, ALPHA_LATTICE_SPACING, DEFAULT_RATE_BAND, MIN_REPS,
};
pub use report::{
    emit_report, write_report, AlphaSummary, ArmReport, ArmRole, CalibrationRecord, CellSummary, Check,
    CoverageReport, CoverageRow, CoxFreedmanReport, EbReferenceRow, EbStudyReport, RateRow, RateStudyReport,
    ReportFormat, Tabular, CSV_COLUMNS,
};
pub use runner::{run_coverage, run_cox_freedman_demo, run_eb_study, run_rate_study};
