use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::{ExperimentConfig, NormChoice, PriorAlpha, RunOptions, ALPHA_LATTICE_SPACING};
use super::report::{
    AlphaSummary, ArmReport, ArmRole, CalibrationRecord, Check, CellSummary, CoverageReport, CoverageRow,
    CoxFreedmanReport, EbReferenceRow, EbStudyReport, RateRow, RateStudyReport,
};
use crate::credible::{build_credible_set, calibration_check, CredibleSet, NormKind, RadiusEstimate};
use crate::error::{Error, Result};
use crate::fourier::{default_grid_size, grid_bias_ratio, Grid, Synthesizer};
use crate::inference::{contraction_rate, posterior_update, MarginalLikelihood, PosteriorState, PriorSpec};
use crate::rng::{tags, RandomStream};
use crate::sequence::{sample_data, truncation_tail_bound, CoefficientSequence, ModelConfig};
use crate::stats::{mean, order_statistic};
use crate::truth::{generate_truth, TruthSpec};

fn with_pool<T: Send>(opts: RunOptions, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match opts.workers {
        None => f(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(f),
    }
}

struct Cell {
    index: usize,
    model: ModelConfig,
    norm_kind: NormKind,
}

struct Experiment<'a> {
    config: &'a ExperimentConfig,
    master: RandomStream,
    truth: CoefficientSequence,
    cells: Vec<Cell>,
}

/// Radius for one (n, alpha) pair, computed from the data-free posterior.
struct CellRadius {
    alpha: f64,
    estimate: RadiusEstimate,
    set: CredibleSet,
    zero_state: PosteriorState,
}

struct RepOutcome {
    row: CoverageRow,
    radius_std_error: f64,
}

impl<'a> Experiment<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let grid_alpha = match config.prior_alpha {
            PriorAlpha::Fixed { alpha } => alpha,
            PriorAlpha::EmpiricalBayes => reference_alpha(config),
        };
        let cells = config
            .n_grid
            .iter()
            .enumerate()
            .map(|(index, &n)| {
                let model = ModelConfig::with_default_trunc(n, config.kappa)?;
                let norm_kind = match config.norm_kind {
                    NormChoice::L2 => NormKind::L2,
                    NormChoice::Sup => {
                        let size = config
                            .grid_size
                            .unwrap_or_else(|| default_grid_size(grid_alpha, n, model.n_trunc));
                        NormKind::SupGrid { grid: Grid::new(size)? }
                    }
                };
                Ok(Cell { index, model, norm_kind })
            })
            .collect::<Result<Vec<_>>>()?;
        let max_trunc = cells.iter().map(|c| c.model.n_trunc).max().unwrap_or(1);
        let truth = generate_truth(&TruthSpec::new(config.truth, max_trunc))?;
        Ok(Self {
            config,
            master: RandomStream::new(config.master_seed, 0),
            truth,
            cells,
        })
    }

    fn observe(&self, cell: &Cell, rep: usize) -> Result<CoefficientSequence> {
        if self.config.noiseless {
            let y = (1..=cell.model.n_trunc)
                .map(|i| cell.model.kappa.eval(i) * self.truth.get(i))
                .collect();
            return CoefficientSequence::new(y);
        }
        let stream = self.master.derive_path(&[tags::DATA, cell.index as u64, rep as u64]);
        sample_data(&self.truth, &cell.model, stream)
    }

    fn radius(&self, cell: &Cell, alpha: f64, stream: RandomStream) -> Result<CellRadius> {
        let prior = PriorSpec::new(alpha, self.config.alpha_bounds)?;
        let zero_state = posterior_update(&CoefficientSequence::zeros(cell.model.n_trunc), &prior, &cell.model)?;
        let (set, estimate) =
            build_credible_set(&zero_state, self.config.gamma, cell.norm_kind, self.config.draws, stream)?;
        Ok(CellRadius {
            alpha,
            estimate,
            set,
            zero_state,
        })
    }

    fn calibrate(&self, cell: &Cell, radius: &CellRadius) -> Result<CalibrationRecord> {
        let stream = self.master.derive_path(&[tags::CALIBRATION, cell.index as u64]);
        let calibration = calibration_check(
            &radius.set,
            &radius.zero_state,
            self.config.calibration_draws(),
            stream,
        )?;
        Ok(CalibrationRecord {
            alpha: radius.alpha,
            calibration,
        })
    }

    fn synthesizer(cell: &Cell) -> Synthesizer {
        match cell.norm_kind {
            NormKind::SupGrid { grid } => Synthesizer::new(grid),
            NormKind::L2 => Synthesizer::new(Grid::new(2).expect("valid grid")),
        }
    }

    fn replicate(
        &self,
        cell: &Cell,
        rep: usize,
        alpha: f64,
        radius: &CellRadius,
        synth: &mut Synthesizer,
    ) -> Result<RepOutcome> {
        let y = self.observe(cell, rep)?;
        let prior = PriorSpec::new(alpha, self.config.alpha_bounds)?;
        let state = posterior_update(&y, &prior, &cell.model)?;
        let set = CredibleSet {
            center: state.center(),
            ..radius.set.clone()
        }
        .inflate(self.config.inflation_m)?;
        let error = set.distance_with(&self.truth, synth);
        let effective_radius = set.effective_radius();
        Ok(RepOutcome {
            row: CoverageRow {
                n: cell.model.n,
                rep,
                alpha_used: alpha,
                gamma: self.config.gamma,
                inflation: self.config.inflation_m,
                norm_kind: self.config.norm_kind.label().to_string(),
                radius: set.radius,
                effective_radius,
                error,
                covered: error <= effective_radius,
                seed: self.config.master_seed,
            },
            radius_std_error: radius.estimate.std_error,
        })
    }

    fn fixed_cell(&self, cell: &Cell, alpha: f64) -> Result<(CellSummary, Vec<CoverageRow>)> {
        let radius = self.radius(cell, alpha, self.master.derive(tags::RADIUS))?;
        let calibration = self.calibrate(cell, &radius)?;
        let outcomes = (0..self.config.reps)
            .into_par_iter()
            .map_init(
                || Self::synthesizer(cell),
                |synth, rep| self.replicate(cell, rep, alpha, &radius, synth),
            )
            .collect::<Result<Vec<_>>>()?;
        Ok(self.summarize(cell, outcomes, None, vec![calibration], alpha))
    }

    fn eb_alphas(&self, cell: &Cell) -> Result<Vec<f64>> {
        (0..self.config.reps)
            .into_par_iter()
            .map(|rep| {
                let y = self.observe(cell, rep)?;
                Ok(MarginalLikelihood::new(&y, &cell.model).argmax(self.config.alpha_bounds))
            })
            .collect()
    }

    /// Radii on the alpha lattice, one per distinct node, all drawn from the
    /// same stream.
    fn lattice_radii(&self, cell: &Cell, keys: &[i64]) -> Result<BTreeMap<i64, CellRadius>> {
        let stream = self.master.derive(tags::EB_RADIUS);
        let radii = keys
            .par_iter()
            .map(|&key| self.radius(cell, self.lattice_alpha(key), stream))
            .collect::<Result<Vec<_>>>()?;
        Ok(keys.iter().copied().zip(radii).collect())
    }

    fn lattice_alpha(&self, key: i64) -> f64 {
        let b = self.config.alpha_bounds;
        (key as f64 * ALPHA_LATTICE_SPACING).clamp(b.min, b.max)
    }

    fn eb_cell(&self, cell: &Cell) -> Result<(CellSummary, Vec<CoverageRow>)> {
        let alphas = self.eb_alphas(cell)?;
        let keys: Vec<i64> = alphas.iter().map(|&a| lattice_key(a)).collect();
        let mut unique = keys.clone();
        unique.sort_unstable();
        unique.dedup();
        let radii = self.lattice_radii(cell, &unique)?;
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        let median_key = sorted[(sorted.len() - 1) / 2];
        let calibration = self.calibrate(cell, &radii[&median_key])?;
        let outcomes = (0..self.config.reps)
            .into_par_iter()
            .map_init(
                || Self::synthesizer(cell),
                |synth, rep| self.replicate(cell, rep, alphas[rep], &radii[&keys[rep]], synth),
            )
            .collect::<Result<Vec<_>>>()?;
        let tail_alpha = alphas.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(self.summarize(cell, outcomes, Some(alpha_summary(&alphas)), vec![calibration], tail_alpha))
    }

    fn summarize(
        &self,
        cell: &Cell,
        outcomes: Vec<RepOutcome>,
        alpha_hat: Option<AlphaSummary>,
        calibration: Vec<CalibrationRecord>,
        tail_alpha: f64,
    ) -> (CellSummary, Vec<CoverageRow>) {
        let n = cell.model.n;
        let reps = outcomes.len();
        let covered = outcomes.iter().filter(|o| o.row.covered).count();
        let col = |f: &dyn Fn(&RepOutcome) -> f64| mean(&outcomes.iter().map(f).collect::<Vec<_>>());
        let (grid_size, ratio) = match cell.norm_kind {
            NormKind::SupGrid { grid } => {
                let alpha = match self.config.prior_alpha {
                    PriorAlpha::Fixed { alpha } => alpha,
                    PriorAlpha::EmpiricalBayes => tail_alpha,
                };
                (
                    Some(grid.size()),
                    Some(grid_bias_ratio(alpha, n, cell.model.n_trunc, grid.size())),
                )
            }
            NormKind::L2 => (None, None),
        };
        let summary = CellSummary {
            n,
            n_trunc: cell.model.n_trunc,
            grid_size,
            grid_bias_ratio: ratio,
            tail_bound: truncation_tail_bound(tail_alpha, cell.model.n_trunc),
            reps,
            covered,
            coverage_rate: covered as f64 / reps as f64,
            mean_radius: col(&|o| o.row.radius),
            mean_effective_radius: col(&|o| o.row.effective_radius),
            mean_radius_std_error: col(&|o| o.radius_std_error),
            mean_error: col(&|o| o.row.error),
            rate_ratio: col(&|o| o.row.radius / contraction_rate(o.row.alpha_used, n)),
            alpha_hat,
            calibration,
        };
        (summary, outcomes.into_iter().map(|o| o.row).collect())
    }

    fn run(&self) -> Result<CoverageReport> {
        let mut cells = Vec::with_capacity(self.cells.len());
        let mut rows = Vec::new();
        for cell in &self.cells {
            let (summary, mut cell_rows) = match self.config.prior_alpha {
                PriorAlpha::Fixed { alpha } => self.fixed_cell(cell, alpha)?,
                PriorAlpha::EmpiricalBayes => self.eb_cell(cell)?,
            };
            cells.push(summary);
            rows.append(&mut cell_rows);
        }
        let checks = cells
            .iter()
            .flat_map(|c| {
                c.calibration.iter().map(move |rec| {
                    let cal = &rec.calibration;
                    Check::new(
                        format!("calibration n={} alpha={:.3}", c.n, rec.alpha),
                        cal.within_3se,
                        format!(
                            "fraction {:.4} vs {:.4} (se {:.4})",
                            cal.fraction, cal.expected, cal.std_error
                        ),
                    )
                })
            })
            .collect();
        let alpha_lattice_spacing = match self.config.prior_alpha {
            PriorAlpha::EmpiricalBayes => Some(ALPHA_LATTICE_SPACING),
            PriorAlpha::Fixed { .. } => None,
        };
        Ok(CoverageReport {
            config: self.config.clone(),
            alpha_lattice_spacing,
            cells,
            checks,
            rows,
        })
    }
}

fn lattice_key(alpha: f64) -> i64 {
    (alpha / ALPHA_LATTICE_SPACING).round() as i64
}

fn reference_alpha(config: &ExperimentConfig) -> f64 {
    config
        .reference_alpha
        .or_else(|| config.truth.smoothness())
        .unwrap_or(1.0)
        .clamp(config.alpha_bounds.min, config.alpha_bounds.max)
}

fn alpha_summary(alphas: &[f64]) -> AlphaSummary {
    let mut w = alphas.to_vec();
    let mut q = |p| order_statistic(&mut w, p);
    let (q025, q25, median, q75, q975) = (q(0.025), q(0.25), q(0.5), q(0.75), q(0.975));
    AlphaSummary {
        q025,
        q25,
        median,
        q75,
        q975,
        interquartile_width: q75 - q25,
    }
}

/// Coverage of the inflated credible set for every `(n, rep)`.
pub fn run_coverage(config: &ExperimentConfig, opts: RunOptions) -> Result<CoverageReport> {
    with_pool(opts, || Experiment::new(config)?.run())
}

fn band_ratio(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Radius and rate ratio along the `n` grid for a fixed prior smoothness.
pub fn run_rate_study(config: &ExperimentConfig, opts: RunOptions) -> Result<RateStudyReport> {
    if !matches!(config.prior_alpha, PriorAlpha::Fixed { .. }) {
        return Err(Error::InvalidConfig("rate study needs a fixed prior alpha".into()));
    }
    let ns = &config.n_grid;
    let lo = ns.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if ns.len() < 3 || hi / lo < 100.0 {
        return Err(Error::InvalidConfig(
            "rate study needs at least 3 values of n spanning two decades".into(),
        ));
    }
    let coverage = run_coverage(config, opts)?;
    let table: Vec<RateRow> = coverage
        .cells
        .iter()
        .map(|c| RateRow {
            n: c.n,
            mean_radius: c.mean_radius,
            rate_ratio: c.rate_ratio,
            mean_error: c.mean_error,
        })
        .collect();
    let ratios: Vec<f64> = table.iter().map(|r| r.rate_ratio).collect();
    let band_ratio = band_ratio(&ratios);
    let mut by_n: Vec<&RateRow> = table.iter().collect();
    by_n.sort_by(|a, b| a.n.total_cmp(&b.n));
    let decreasing = by_n.windows(2).all(|w| w[1].mean_radius < w[0].mean_radius);
    let checks = vec![
        Check::new(
            "rate ratio band",
            band_ratio <= config.rate_band,
            format!("max/min {band_ratio:.3} vs band {}", config.rate_band),
        ),
        Check::new(
            "radii strictly decreasing in n",
            decreasing,
            format!("{:?}", by_n.iter().map(|r| r.mean_radius).collect::<Vec<_>>()),
        ),
    ];
    Ok(RateStudyReport {
        table,
        band: config.rate_band,
        band_ratio,
        checks,
        coverage,
    })
}

fn role(prior_alpha: f64, truth_alpha: f64) -> ArmRole {
    if prior_alpha > truth_alpha {
        ArmRole::Oversmoothing
    } else if prior_alpha < truth_alpha {
        ArmRole::Undersmoothing
    } else {
        ArmRole::Matched
    }
}

/// Runs the configured fixed prior smoothness and `other_alpha` side by side
/// with `M = 1`.
pub fn run_cox_freedman_demo(
    config: &ExperimentConfig,
    other_alpha: f64,
    opts: RunOptions,
) -> Result<CoxFreedmanReport> {
    let PriorAlpha::Fixed { alpha } = config.prior_alpha else {
        return Err(Error::InvalidConfig("demo needs a fixed prior alpha".into()));
    };
    let truth_alpha = config
        .truth
        .smoothness()
        .ok_or_else(|| Error::InvalidConfig("demo needs a truth with finite smoothness".into()))?;
    let threshold = 1.0 - config.gamma;
    let mut arms = Vec::with_capacity(2);
    let mut checks = Vec::new();
    for a in [alpha, other_alpha] {
        let arm_config = ExperimentConfig {
            prior_alpha: PriorAlpha::Fixed { alpha: a },
            inflation_m: 1.0,
            ..config.clone()
        };
        let report = run_coverage(&arm_config, opts)?;
        let arm_role = role(a, truth_alpha);
        let mut cells: Vec<&CellSummary> = report.cells.iter().collect();
        cells.sort_by(|x, y| x.n.total_cmp(&y.n));
        let rates: Vec<f64> = cells.iter().map(|c| c.coverage_rate).collect();
        let (first, last) = (rates[0], rates[rates.len() - 1]);
        match arm_role {
            ArmRole::Oversmoothing => {
                checks.push(Check::new(
                    format!("oversmoothed alpha={a}: coverage decreases in n"),
                    rates.len() >= 2 && last < first,
                    format!("{rates:?}"),
                ));
                checks.push(Check::new(
                    format!("oversmoothed alpha={a}: coverage at largest n below {threshold}"),
                    last < threshold,
                    format!("{last}"),
                ));
            }
            ArmRole::Undersmoothing => checks.push(Check::new(
                format!("undersmoothed alpha={a}: coverage at least {threshold}"),
                rates.iter().all(|&r| r >= threshold),
                format!("{rates:?}"),
            )),
            ArmRole::Matched => {}
        }
        arms.push(ArmReport {
            alpha: a,
            role: arm_role,
            report,
        });
    }
    Ok(CoxFreedmanReport {
        truth_smoothness: truth_alpha,
        arms,
        checks,
    })
}

/// Plug-in empirical-Bayes coverage, with the fixed-alpha radius at the
/// reference smoothness for comparison.
pub fn run_eb_study(config: &ExperimentConfig, opts: RunOptions) -> Result<EbStudyReport> {
    if config.prior_alpha != PriorAlpha::EmpiricalBayes {
        return Err(Error::InvalidConfig("eb study needs an empirical-Bayes prior".into()));
    }
    with_pool(opts, || {
        let experiment = Experiment::new(config)?;
        let coverage = experiment.run()?;
        let ref_alpha = reference_alpha(config);
        let stream = experiment.master.derive(tags::EB_RADIUS);
        let reference = experiment
            .cells
            .iter()
            .zip(&coverage.cells)
            .map(|(cell, summary)| {
                let r = experiment.radius(cell, ref_alpha, stream)?.estimate.radius;
                Ok(EbReferenceRow {
                    n: summary.n,
                    reference_alpha: ref_alpha,
                    reference_radius: r,
                    plugin_mean_radius: summary.mean_radius,
                    ratio: summary.mean_radius / r,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ratios: Vec<f64> = coverage.cells.iter().map(|c| c.rate_ratio).collect();
        let band = band_ratio(&ratios);
        let checks = vec![Check::new(
            "plug-in radius / rate band",
            band <= config.rate_band,
            format!("max/min {band:.3} vs band {}", config.rate_band),
        )];
        Ok(EbStudyReport {
            reference,
            checks,
            coverage,
        })
    })
}
