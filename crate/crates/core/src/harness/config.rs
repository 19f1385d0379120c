use serde::{Deserialize, Serialize};

use crate::credible::MIN_DRAWS;
use crate::error::{Error, Result};
use crate::inference::AlphaBounds;
use crate::sequence::{KappaSpec, ModelConfig};
use crate::truth::TruthFamily;

/// Smallest replication count accepted for a coverage run.
pub const MIN_REPS: usize = 30;
/// Default max/min band for rate ratios.
pub const DEFAULT_RATE_BAND: f64 = 4.0;
/// Spacing of the `alpha` lattice used to cache empirical-Bayes radii.
pub const ALPHA_LATTICE_SPACING: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PriorAlpha {
    Fixed { alpha: f64 },
    EmpiricalBayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    L2,
    Sup,
}

impl NormChoice {
    pub fn label(&self) -> &'static str {
        match self {
            NormChoice::L2 => "l2",
            NormChoice::Sup => "sup",
        }
    }
}

/// One experiment: an `n` grid crossed with `reps` replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_grid: Vec<f64>,
    pub truth: TruthFamily,
    pub prior_alpha: PriorAlpha,
    pub gamma: f64,
    pub inflation_m: f64,
    pub norm_kind: NormChoice,
    pub reps: usize,
    pub draws: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub kappa: KappaSpec,
    /// Overrides the grid-size policy for sup-norm sets.
    #[serde(default)]
    pub grid_size: Option<usize>,
    #[serde(default)]
    pub alpha_bounds: AlphaBounds,
    #[serde(default = "default_rate_band")]
    pub rate_band: f64,
    /// Fresh posterior draws for the per-cell calibration self-check;
    /// defaults to `max(2000, draws / 10)`.
    #[serde(default)]
    pub calibration_draws: Option<usize>,
    /// Fixed smoothness whose radius the empirical-Bayes study compares
    /// against; defaults to the truth's smoothness.
    #[serde(default)]
    pub reference_alpha: Option<f64>,
    /// Debug mode: observe `Y = kappa theta` without noise.
    #[serde(default)]
    pub noiseless: bool,
}

fn default_rate_band() -> f64 {
    DEFAULT_RATE_BAND
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_grid: vec![1e3, 1e4, 1e5],
            truth: TruthFamily::PolyDecay { alpha: 1.0, c: 1.0 },
            prior_alpha: PriorAlpha::Fixed { alpha: 1.0 },
            gamma: 0.5,
            inflation_m: 3.0,
            norm_kind: NormChoice::Sup,
            reps: 200,
            draws: 100_000,
            master_seed: 0,
            kappa: KappaSpec::Direct,
            grid_size: None,
            alpha_bounds: AlphaBounds::default(),
            rate_band: DEFAULT_RATE_BAND,
            calibration_draws: None,
            reference_alpha: None,
            noiseless: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_grid.is_empty() {
            return bad("n_grid is empty".into());
        }
        for &n in &self.n_grid {
            if !(n.is_finite() && n > 1.0) {
                return bad(format!("n = {n} must be finite and > 1"));
            }
            ModelConfig::with_default_trunc(n, self.kappa)?.check_window(self.alpha_bounds.min)?;
        }
        if !(self.gamma > 0.0 && self.gamma <= 0.5) {
            return Err(Error::InvalidGamma(self.gamma));
        }
        if !(self.inflation_m.is_finite() && self.inflation_m >= 1.0) {
            return Err(Error::InvalidInflation(self.inflation_m));
        }
        if self.reps < MIN_REPS {
            return bad(format!("reps = {} < {MIN_REPS}", self.reps));
        }
        if self.draws < MIN_DRAWS {
            return Err(Error::TooFewDraws {
                draws: self.draws,
                min: MIN_DRAWS,
            });
        }
        AlphaBounds::new(self.alpha_bounds.min, self.alpha_bounds.max)?;
        if let PriorAlpha::Fixed { alpha } = self.prior_alpha {
            if !self.alpha_bounds.contains(alpha) {
                return bad(format!("fixed alpha {alpha} outside the configured bounds"));
            }
        }
        if let Some(a) = self.reference_alpha {
            if !self.alpha_bounds.contains(a) {
                return bad(format!("reference alpha {a} outside the configured bounds"));
            }
        }
        if let Some(g) = self.grid_size {
            if g < 2 {
                return bad(format!("grid_size = {g} < 2"));
            }
        }
        if !(self.rate_band.is_finite() && self.rate_band >= 1.0) {
            return bad(format!("rate_band = {} must be >= 1", self.rate_band));
        }
        Ok(())
    }

    pub fn calibration_draws(&self) -> usize {
        self.calibration_draws.unwrap_or((self.draws / 10).max(2000))
    }
}

/// Execution settings that never change results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default pool.
    pub workers: Option<usize>,
}
