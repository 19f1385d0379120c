use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::credible::Calibration;
use crate::error::{Error, Result};

/// CSV header written by [`emit_report`].
pub const CSV_COLUMNS: [&str; 11] = [
    "n",
    "rep",
    "alpha_used",
    "gamma",
    "M",
    "norm_kind",
    "radius",
    "effective_radius",
    "error",
    "covered",
    "seed",
];

/// One replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub n: f64,
    pub rep: usize,
    pub alpha_used: f64,
    pub gamma: f64,
    #[serde(rename = "M")]
    pub inflation: f64,
    pub norm_kind: String,
    pub radius: f64,
    pub effective_radius: f64,
    pub error: f64,
    #[serde(with = "bool_as_int")]
    pub covered: bool,
    pub seed: u64,
}

mod bool_as_int {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(serde::de::Error::custom(format!("covered must be 0 or 1, got {v}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub q025: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q975: f64,
    pub interquartile_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub alpha: f64,
    #[serde(flatten)]
    pub calibration: Calibration,
}

/// Aggregates for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: f64,
    pub n_trunc: usize,
    pub grid_size: Option<usize>,
    /// Grid Lipschitz bias bound divided by the contraction rate.
    pub grid_bias_ratio: Option<f64>,
    pub tail_bound: f64,
    pub reps: usize,
    pub covered: usize,
    pub coverage_rate: f64,
    pub mean_radius: f64,
    pub mean_effective_radius: f64,
    pub mean_radius_std_error: f64,
    pub mean_error: f64,
    /// Mean of `radius / eps(n, alpha_used)`.
    pub rate_ratio: f64,
    pub alpha_hat: Option<AlphaSummary>,
    pub calibration: Vec<CalibrationRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub config: ExperimentConfig,
    /// Set when radii come from the empirical-Bayes lattice cache.
    pub alpha_lattice_spacing: Option<f64>,
    pub cells: Vec<CellSummary>,
    pub checks: Vec<Check>,
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn coverage_rates(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.coverage_rate).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: f64,
    pub mean_radius: f64,
    pub rate_ratio: f64,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudyReport {
    pub table: Vec<RateRow>,
    pub band: f64,
    /// max / min rate ratio over the table.
    pub band_ratio: f64,
    pub checks: Vec<Check>,
    pub coverage: CoverageReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmRole {
    Oversmoothing,
    Undersmoothing,
    Matched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub alpha: f64,
    pub role: ArmRole,
    pub report: CoverageReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFreedmanReport {
    pub truth_smoothness: f64,
    pub arms: Vec<ArmReport>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbReferenceRow {
    pub n: f64,
    pub reference_alpha: f64,
    pub reference_radius: f64,
    /// Mean plug-in radius over replications.
    pub plugin_mean_radius: f64,
    /// `plugin_mean_radius / reference_radius`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbStudyReport {
    pub reference: Vec<EbReferenceRow>,
    pub checks: Vec<Check>,
    pub coverage: CoverageReport,
}

/// Reports that can be written by [`emit_report`].
pub trait Tabular: Serialize {
    fn rows(&self) -> Vec<&CoverageRow>;
    fn checks(&self) -> Vec<&Check>;

    fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }
}

impl Tabular for CoverageReport {
    fn rows(&self) -> Vec<&CoverageRow> {
        self.rows.iter().collect()
    }

    fn checks(&self) -> Vec<&Check> {
        self.checks.iter().collect()
    }
}

impl Tabular for RateStudyReport {
    fn rows(&self) -> Vec<&CoverageRow> {
        self.coverage.rows()
    }

    fn checks(&self) -> Vec<&Check> {
        self.checks.iter().chain(&self.coverage.checks).collect()
    }
}

impl Tabular for CoxFreedmanReport {
    fn rows(&self) -> Vec<&CoverageRow> {
        self.arms.iter().flat_map(|a| a.report.rows.iter()).collect()
    }

    fn checks(&self) -> Vec<&Check> {
        self.checks
            .iter()
            .chain(self.arms.iter().flat_map(|a| a.report.checks.iter()))
            .collect()
    }
}

impl Tabular for EbStudyReport {
    fn rows(&self) -> Vec<&CoverageRow> {
        self.coverage.rows()
    }

    fn checks(&self) -> Vec<&Check> {
        self.checks.iter().chain(&self.coverage.checks).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Writes per-replication rows as CSV, or the whole report as JSON.
pub fn emit_report<R: Tabular + ?Sized>(report: &R, path: &Path, format: ReportFormat) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    write_report(report, &mut out, format).map_err(|e| match e {
        Error::Io { source, .. } => io_err(source),
        other => other,
    })?;
    out.flush().map_err(io_err)
}

/// [`emit_report`] into any writer.
pub fn write_report<R: Tabular + ?Sized, W: Write>(report: &R, out: &mut W, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_COLUMNS).map_err(csv_err)?;
            for row in report.rows() {
                w.serialize(row).map_err(csv_err)?;
            }
            w.flush().map_err(stream_err)
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, report).map_err(|e| Error::Serialization(e.to_string()))?;
            out.write_all(b"\n").map_err(stream_err)
        }
    }
}

fn stream_err(source: std::io::Error) -> Error {
    Error::Io {
        path: "<stream>".into(),
        source,
    }
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => stream_err(source),
            other => Error::Serialization(format!("{other:?}")),
        }
    } else {
        Error::Serialization(e.to_string())
    }
}
