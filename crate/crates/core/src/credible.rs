//! Credible balls (L2) and sup-norm credible bands on a grid.
//!
//! Given the data, `theta - theta_hat` is a centered Gaussian vector with
//! independent coordinates of variance `v_i`, so both radii are quantiles of
//! functionals of `sum_i sqrt(v_i) xi_i phi_i` and never depend on `Y`.
//!
//! Monte Carlo draws are split into fixed chunks of [`CHUNK_DRAWS`]; chunk `c`
//! uses `stream.derive_path(&[tags::CHUNK, c])`, so results do not depend on
//! how rayon schedules the chunks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::{fold, max_abs, Bin, Grid, Synthesizer};
use crate::inference::{contraction_rate, sample_posterior_coeffs, PosteriorState};
use crate::rng::{fill_standard_normal, tags, RandomStream};
use crate::sequence::CoefficientSequence;
use crate::stats::{mean, order_statistic, quantile_std_error, sample_variance};

/// Minimum number of draws accepted by the radius estimators.
pub const MIN_DRAWS: usize = 10_000;
/// Default number of draws for radii.
pub const DEFAULT_DRAWS: usize = 100_000;
/// Draws per independently seeded chunk.
pub const CHUNK_DRAWS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    L2,
    #[serde(rename = "sup")]
    SupGrid { grid: Grid },
}

impl NormKind {
    pub fn label(&self) -> &'static str {
        match self {
            NormKind::L2 => "l2",
            NormKind::SupGrid { .. } => "sup",
        }
    }
}

/// A Monte Carlo quantile with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub radius: f64,
    pub std_error: f64,
    pub draws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McMeta {
    pub draws: usize,
    pub stream: RandomStream,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleSet {
    pub center: CoefficientSequence,
    pub radius: f64,
    pub norm_kind: NormKind,
    /// `1 - gamma`.
    pub credibility: f64,
    pub inflation: f64,
    pub mc: McMeta,
}

impl CredibleSet {
    pub fn new(
        center: CoefficientSequence,
        radius: f64,
        norm_kind: NormKind,
        credibility: f64,
        mc: McMeta,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid("radius", format!("{radius} must be positive")));
        }
        if !(credibility > 0.0 && credibility < 1.0) {
            return Err(invalid("credibility", format!("{credibility} outside (0, 1)")));
        }
        Ok(Self {
            center,
            radius,
            norm_kind,
            credibility,
            inflation: 1.0,
            mc,
        })
    }

    pub fn effective_radius(&self) -> f64 {
        self.inflation * self.radius
    }

    /// Same set with inflation factor `m`.
    pub fn inflate(&self, m: f64) -> Result<Self> {
        if !(m.is_finite() && m >= 1.0) {
            return Err(Error::InvalidInflation(m));
        }
        Ok(Self {
            inflation: m,
            ..self.clone()
        })
    }

    /// Distance from the center in the set's norm.
    pub fn distance(&self, theta: &CoefficientSequence) -> f64 {
        match self.norm_kind {
            NormKind::L2 => theta.sub(&self.center).l2_norm(),
            NormKind::SupGrid { grid } => self.distance_with(theta, &mut Synthesizer::new(grid)),
        }
    }

    /// [`CredibleSet::distance`] reusing a synthesizer built for the set's grid.
    pub fn distance_with(&self, theta: &CoefficientSequence, synth: &mut Synthesizer) -> f64 {
        match self.norm_kind {
            NormKind::L2 => theta.sub(&self.center).l2_norm(),
            NormKind::SupGrid { grid } => {
                assert_eq!(synth.grid_size(), grid.size());
                max_abs(&synth.synthesize(theta.sub(&self.center).as_slice()))
            }
        }
    }

    /// Inclusive membership: distance <= inflation * radius.
    pub fn contains_truth(&self, truth: &CoefficientSequence) -> bool {
        self.distance(truth) <= self.effective_radius()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidGamma(gamma))
    }
}

fn check_draws(draws: usize) -> Result<()> {
    if draws < MIN_DRAWS {
        return Err(Error::TooFewDraws { draws, min: MIN_DRAWS });
    }
    Ok(())
}

fn chunk_stream(stream: RandomStream, chunk: usize) -> RandomStream {
    stream.derive_path(&[tags::CHUNK, chunk as u64])
}

fn chunked<T, S, I, F>(draws: usize, stream: RandomStream, init: I, per_chunk: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, RandomStream, usize, &mut Vec<T>) + Sync + Send,
{
    let chunks = draws.div_ceil(CHUNK_DRAWS);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map_init(&init, |state, c| {
            let count = CHUNK_DRAWS.min(draws - c * CHUNK_DRAWS);
            let mut out = Vec::with_capacity(count);
            per_chunk(state, chunk_stream(stream, c), count, &mut out);
            out
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Law of the centered posterior process on a grid, folded onto the
/// `G/2 + 1` cosine and sine bins. Aliased frequencies add in variance, so
/// the folded law equals the exact law of the grid values.
#[derive(Debug, Clone)]
pub struct FoldedProcess {
    grid: Grid,
    cos_sd: Vec<f64>,
    sin_sd: Vec<f64>,
}

impl FoldedProcess {
    pub fn new(variances: &[f64], grid: Grid) -> Self {
        let bins = grid.size() / 2 + 1;
        let mut cos_var = vec![0.0; bins];
        let mut sin_var = vec![0.0; bins];
        for (k, &v) in variances.iter().enumerate() {
            match fold(k + 1, grid.size()) {
                Bin::Cos { k, weight } => cos_var[k] += weight * weight * v,
                Bin::Sin { k, weight } => sin_var[k] += weight * weight * v,
                Bin::Zero => {}
            }
        }
        Self {
            grid,
            cos_sd: cos_var.into_iter().map(f64::sqrt).collect(),
            sin_sd: sin_var.into_iter().map(f64::sqrt).collect(),
        }
    }

    /// `sup_j |Z(x_j)|` for `draws` independent realizations.
    pub fn sample_sups(&self, draws: usize, stream: RandomStream) -> Vec<f64> {
        let bins = self.cos_sd.len();
        let size = self.grid.size();
        chunked(draws, stream, || Synthesizer::new(self.grid), |synth, s, count, out| {
            let mut rng = s.rng();
            let mut xi = vec![0.0; 2 * bins];
            let mut cos_amp = vec![0.0; bins];
            let mut sin_amp = vec![0.0; bins];
            let mut values = vec![0.0; size];
            for _ in 0..count {
                fill_standard_normal(&mut rng, &mut xi);
                for k in 0..bins {
                    cos_amp[k] = self.cos_sd[k] * xi[k];
                    sin_amp[k] = self.sin_sd[k] * xi[bins + k];
                }
                synth.eval_bins(&cos_amp, &sin_amp, &mut values);
                out.push(max_abs(&values));
            }
        })
    }
}

/// `sup_grid |Z|` draws for the posterior process of `state`.
pub fn sup_norm_samples(state: &PosteriorState, grid: Grid, draws: usize, stream: RandomStream) -> Vec<f64> {
    FoldedProcess::new(state.variances(), grid).sample_sups(draws, stream)
}

/// `sqrt(sum_i v_i xi_i^2)` draws.
pub fn l2_norm_samples(state: &PosteriorState, draws: usize, stream: RandomStream) -> Vec<f64> {
    let v = state.variances();
    chunked(draws, stream, || (), |_, s, count, out| {
        let mut rng = s.rng();
        let mut xi = vec![0.0; v.len()];
        for _ in 0..count {
            fill_standard_normal(&mut rng, &mut xi);
            let sq: f64 = v.iter().zip(&xi).map(|(vi, x)| vi * x * x).sum();
            out.push(sq.sqrt());
        }
    })
}

fn quantile_estimate(mut samples: Vec<f64>, gamma: f64) -> RadiusEstimate {
    let draws = samples.len();
    let p = 1.0 - gamma;
    let radius = order_statistic(&mut samples, p);
    samples.sort_unstable_by(f64::total_cmp);
    RadiusEstimate {
        radius,
        std_error: quantile_std_error(&samples, p),
        draws,
    }
}

/// `ceil((1 - gamma) draws)`-th order statistic of `sup_grid |Z|`.
pub fn sup_radius(
    state: &PosteriorState,
    gamma: f64,
    grid: Grid,
    draws: usize,
    stream: RandomStream,
) -> Result<RadiusEstimate> {
    check_gamma(gamma)?;
    check_draws(draws)?;
    Ok(quantile_estimate(sup_norm_samples(state, grid, draws, stream), gamma))
}

/// `ceil((1 - gamma) draws)`-th order statistic of `||theta - theta_hat||_2`.
pub fn l2_radius(
    state: &PosteriorState,
    gamma: f64,
    draws: usize,
    stream: RandomStream,
) -> Result<RadiusEstimate> {
    check_gamma(gamma)?;
    check_draws(draws)?;
    Ok(quantile_estimate(l2_norm_samples(state, draws, stream), gamma))
}

/// Radius of the given norm kind.
pub fn radius_for(
    state: &PosteriorState,
    gamma: f64,
    norm_kind: NormKind,
    draws: usize,
    stream: RandomStream,
) -> Result<RadiusEstimate> {
    match norm_kind {
        NormKind::L2 => l2_radius(state, gamma, draws, stream),
        NormKind::SupGrid { grid } => sup_radius(state, gamma, grid, draws, stream),
    }
}

/// Un-inflated `(1 - gamma)` credible set centered at the posterior mean.
pub fn build_credible_set(
    state: &PosteriorState,
    gamma: f64,
    norm_kind: NormKind,
    draws: usize,
    stream: RandomStream,
) -> Result<(CredibleSet, RadiusEstimate)> {
    let est = radius_for(state, gamma, norm_kind, draws, stream)?;
    let set = CredibleSet::new(
        state.center(),
        est.radius,
        norm_kind,
        1.0 - gamma,
        McMeta { draws, stream },
    )?;
    Ok((set, est))
}

/// Free function form of [`CredibleSet::inflate`].
pub fn inflate(set: &CredibleSet, m: f64) -> Result<CredibleSet> {
    set.inflate(m)
}

/// Free function form of [`CredibleSet::contains_truth`].
pub fn contains_truth(set: &CredibleSet, truth: &CoefficientSequence) -> bool {
    set.contains_truth(truth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorellBound {
    pub bound: f64,
    pub std_error: f64,
    /// Monte Carlo estimate of `E ||Z||_inf^2`.
    pub second_moment: f64,
}

/// `sqrt(8 E||Z||_inf^2 log(2 / gamma))` with the second moment estimated by
/// Monte Carlo; standard error by the delta method.
pub fn borell_radius_bound(
    state: &PosteriorState,
    gamma: f64,
    grid: Grid,
    draws: usize,
    stream: RandomStream,
) -> Result<BorellBound> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    check_draws(draws)?;
    let sq: Vec<f64> = sup_norm_samples(state, grid, draws, stream)
        .into_iter()
        .map(|s| s * s)
        .collect();
    let m2 = mean(&sq);
    let se_m2 = (sample_variance(&sq) / draws as f64).sqrt();
    let factor = 8.0 * (2.0 / gamma).ln();
    let bound = (factor * m2).sqrt();
    Ok(BorellBound {
        bound,
        std_error: bound * se_m2 / (2.0 * m2),
        second_moment: m2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlepianProbe {
    /// Monte Carlo estimate of `E ||Z||_inf` on the grid.
    pub e_sup: f64,
    pub std_error: f64,
    /// `e_sup / (n^{-alpha/(2 alpha + 1)} sqrt(log n))`.
    pub rate_ratio: f64,
}

pub fn slepian_lower_probe(
    state: &PosteriorState,
    alpha: f64,
    n: f64,
    grid: Grid,
    draws: usize,
    stream: RandomStream,
) -> Result<SlepianProbe> {
    check_draws(draws)?;
    let sups = sup_norm_samples(state, grid, draws, stream);
    let e_sup = mean(&sups);
    Ok(SlepianProbe {
        e_sup,
        std_error: (sample_variance(&sups) / draws as f64).sqrt(),
        rate_ratio: e_sup / contraction_rate(alpha, n),
    })
}

/// Fraction of fresh posterior draws inside an un-inflated set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub fraction: f64,
    pub expected: f64,
    /// Combines the binomial error of the fresh draws with the quantile
    /// error of the radius: `sqrt(p (1 - p) (1/fresh + 1/radius_draws))`.
    pub std_error: f64,
    pub fresh_draws: usize,
    pub within_3se: bool,
}

pub fn calibration_check(
    set: &CredibleSet,
    state: &PosteriorState,
    fresh_draws: usize,
    stream: RandomStream,
) -> Result<Calibration> {
    if fresh_draws == 0 {
        return Err(invalid("fresh_draws", "must be positive"));
    }
    if set.inflation != 1.0 {
        return Err(invalid("set", "calibration applies to the un-inflated set"));
    }
    let grid = match set.norm_kind {
        NormKind::SupGrid { grid } => grid,
        NormKind::L2 => Grid::new(2)?,
    };
    let inside: Vec<bool> = chunked(fresh_draws, stream, || Synthesizer::new(grid), |synth, s, count, out| {
        for d in 0..count {
            let theta = sample_posterior_coeffs(state, s.derive(d as u64));
            out.push(set.distance_with(&theta, synth) <= set.radius);
        }
    });
    let fraction = inside.iter().filter(|&&b| b).count() as f64 / fresh_draws as f64;
    let p = set.credibility;
    let std_error = (p * (1.0 - p) * (1.0 / fresh_draws as f64 + 1.0 / set.mc.draws as f64)).sqrt();
    Ok(Calibration {
        fraction,
        expected: p,
        std_error,
        fresh_draws,
        within_3se: (fraction - p).abs() <= 3.0 * std_error,
    })
}
