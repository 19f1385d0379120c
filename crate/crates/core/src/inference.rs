//! Conjugate posterior under the scale prior `theta_i ~ N(0, i^{-(1+2 alpha)})`,
//! marginal likelihood in `alpha`, and the empirical-Bayes estimate of `alpha`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::{Grid, Synthesizer};
use crate::rng::{fill_standard_normal, RandomStream};
use crate::sequence::{sample_data, CoefficientSequence, KappaSpec, ModelConfig};
use crate::sequence::{ALPHA_MAX_DEFAULT, ALPHA_MIN_DEFAULT};
use crate::stats::order_statistic;
use crate::truth::{generate_truth, TruthSpec};

/// Number of log-spaced nodes in the coarse `alpha` search.
pub const EB_GRID_NODES: usize = 256;
/// Final bracket width of the golden-section refinement.
pub const EB_REFINE_WIDTH: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for AlphaBounds {
    fn default() -> Self {
        Self {
            min: ALPHA_MIN_DEFAULT,
            max: ALPHA_MAX_DEFAULT,
        }
    }
}

impl AlphaBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min > 0.0 && min < max) {
            return Err(invalid("alpha bounds", format!("need 0 < min < max, got [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, alpha: f64) -> bool {
        (self.min..=self.max).contains(&alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub alpha: f64,
}

impl PriorSpec {
    pub fn new(alpha: f64, bounds: AlphaBounds) -> Result<Self> {
        if !bounds.contains(alpha) {
            return Err(invalid(
                "alpha",
                format!("{alpha} outside [{}, {}]", bounds.min, bounds.max),
            ));
        }
        Ok(Self { alpha })
    }

    pub fn variance(&self, i: usize) -> f64 {
        prior_variance(i, self.alpha)
    }
}

/// `i^{-(1 + 2 alpha)}`.
pub fn prior_variance(i: usize, alpha: f64) -> f64 {
    (i as f64).powf(-(1.0 + 2.0 * alpha))
}

/// Sup-norm contraction rate `n^{-alpha/(2 alpha + 1)} sqrt(log n)`.
pub fn contraction_rate(alpha: f64, n: f64) -> f64 {
    n.powf(-alpha / (2.0 * alpha + 1.0)) * n.ln().sqrt()
}

/// Coordinate-wise Gaussian posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorState {
    means: Vec<f64>,
    variances: Vec<f64>,
    pub alpha: f64,
    pub n: f64,
    pub kappa: KappaSpec,
}

impl PosteriorState {
    /// Builds a state from explicit moments. Variances may be zero
    /// (degenerate coordinates) but not negative.
    pub fn from_parts(
        means: Vec<f64>,
        variances: Vec<f64>,
        alpha: f64,
        n: f64,
        kappa: KappaSpec,
    ) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(Error::LengthMismatch {
                expected: means.len(),
                actual: variances.len(),
            });
        }
        if means.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(k) = means.iter().position(|m| !m.is_finite()) {
            return Err(Error::NonFinite { index: k + 1 });
        }
        if let Some(k) = variances.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("variances", format!("entry {} is {}", k + 1, variances[k])));
        }
        Ok(Self {
            means,
            variances,
            alpha,
            n,
            kappa,
        })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn center(&self) -> CoefficientSequence {
        CoefficientSequence::new(self.means.clone()).expect("means validated at construction")
    }

    /// Same state with every variance multiplied by `factor`.
    pub fn with_scaled_variances(&self, factor: f64) -> Result<Self> {
        Self::from_parts(
            self.means.clone(),
            self.variances.iter().map(|v| v * factor).collect(),
            self.alpha,
            self.n,
            self.kappa,
        )
    }
}

/// Conjugate update: `v_i = (i^{1+2 alpha} + n kappa_i^2)^{-1}`,
/// `mean_i = v_i n kappa_i Y_i`.
pub fn posterior_update(
    y: &CoefficientSequence,
    prior: &PriorSpec,
    model: &ModelConfig,
) -> Result<PosteriorState> {
    if y.len() != model.n_trunc {
        return Err(Error::LengthMismatch {
            expected: model.n_trunc,
            actual: y.len(),
        });
    }
    let n = model.n;
    let mut means = Vec::with_capacity(y.len());
    let mut variances = Vec::with_capacity(y.len());
    for (k, &yi) in y.as_slice().iter().enumerate() {
        let i = k + 1;
        let kappa = model.kappa.eval(i);
        let precision = (i as f64).powf(1.0 + 2.0 * prior.alpha) + n * kappa * kappa;
        let v = 1.0 / precision;
        variances.push(v);
        means.push(n * kappa * yi / precision);
    }
    Ok(PosteriorState {
        means,
        variances,
        alpha: prior.alpha,
        n,
        kappa: model.kappa,
    })
}

/// Posterior mean function on the grid.
pub fn posterior_mean_function(state: &PosteriorState, grid: Grid) -> Vec<f64> {
    Synthesizer::new(grid).synthesize(state.means())
}

/// One draw `theta_i = mean_i + sqrt(v_i) xi_i`.
pub fn sample_posterior_coeffs(state: &PosteriorState, stream: RandomStream) -> CoefficientSequence {
    let mut xi = vec![0.0; state.len()];
    fill_standard_normal(&mut stream.rng(), &mut xi);
    let draw = state
        .means
        .iter()
        .zip(&state.variances)
        .zip(&xi)
        .map(|((m, v), x)| m + v.sqrt() * x)
        .collect();
    CoefficientSequence::new(draw).expect("finite moments give finite draws")
}

/// Marginal likelihood of `Y` as a function of `alpha`, with the
/// `alpha`-independent pieces precomputed.
pub struct MarginalLikelihood {
    neg_log_i: Vec<f64>,
    kappa_sq: Vec<f64>,
    y_sq: Vec<f64>,
    noise_var: f64,
}

impl MarginalLikelihood {
    pub fn new(y: &CoefficientSequence, model: &ModelConfig) -> Self {
        let len = y.len().min(model.n_trunc);
        let ys = &y.as_slice()[..len];
        Self {
            neg_log_i: (1..=len).map(|i| -(i as f64).ln()).collect(),
            kappa_sq: (1..=len).map(|i| model.kappa.eval(i).powi(2)).collect(),
            y_sq: ys.iter().map(|v| v * v).collect(),
            noise_var: 1.0 / model.n,
        }
    }

    /// `sum_i log N(Y_i | 0, kappa_i^2 i^{-(1+2 alpha)} + 1/n)`.
    pub fn eval(&self, alpha: f64) -> f64 {
        let exponent = 1.0 + 2.0 * alpha;
        let mut acc = 0.0;
        for ((&nl, &k2), &y2) in self.neg_log_i.iter().zip(&self.kappa_sq).zip(&self.y_sq) {
            let s = k2 * (exponent * nl).exp() + self.noise_var;
            acc += s.ln() + y2 / s;
        }
        -0.5 * (acc + self.y_sq.len() as f64 * (2.0 * std::f64::consts::PI).ln())
    }

    /// Maximizer over `bounds`: coarse log-spaced grid, then golden-section
    /// refinement around the best node. Ties go to the smaller `alpha`.
    pub fn argmax(&self, bounds: AlphaBounds) -> f64 {
        let ratio = bounds.max / bounds.min;
        let last = EB_GRID_NODES - 1;
        let nodes: Vec<f64> = (0..EB_GRID_NODES)
            .map(|j| match j {
                0 => bounds.min,
                j if j == last => bounds.max,
                j => bounds.min * ratio.powf(j as f64 / last as f64),
            })
            .collect();
        let mut best = 0;
        let mut best_val = self.eval(nodes[0]);
        for (j, &a) in nodes.iter().enumerate().skip(1) {
            let v = self.eval(a);
            if v > best_val {
                best = j;
                best_val = v;
            }
        }
        let lo = nodes[best.saturating_sub(1)];
        let hi = nodes[(best + 1).min(last)];
        let (x, fx) = self.golden_max(lo, hi);
        if fx > best_val || (fx == best_val && x < nodes[best]) {
            x
        } else {
            nodes[best]
        }
    }

    fn golden_max(&self, mut a: f64, mut b: f64) -> (f64, f64) {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.eval(c);
        let mut fd = self.eval(d);
        while b - a > EB_REFINE_WIDTH {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.eval(d);
            }
        }
        let x = 0.5 * (a + b);
        (x, self.eval(x))
    }
}

/// Log marginal likelihood of `Y` at smoothness `alpha`, over all `i <= n_trunc`.
pub fn marginal_loglik(y: &CoefficientSequence, alpha: f64, model: &ModelConfig) -> f64 {
    MarginalLikelihood::new(y, model).eval(alpha)
}

/// Empirical-Bayes smoothness: maximizer of [`marginal_loglik`] over `bounds`.
pub fn empirical_bayes_alpha(y: &CoefficientSequence, model: &ModelConfig, bounds: AlphaBounds) -> f64 {
    MarginalLikelihood::new(y, model).argmax(bounds)
}

/// Empirical 2.5% / 97.5% quantiles of the estimate over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbBracket {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub alphas: Vec<f64>,
}

impl EbBracket {
    pub fn from_alphas(alphas: Vec<f64>) -> Self {
        let mut work = alphas.clone();
        let alpha_lo = order_statistic(&mut work, 0.025);
        let alpha_hi = order_statistic(&mut work, 0.975);
        Self {
            alpha_lo,
            alpha_hi,
            alphas,
        }
    }

    pub fn width(&self) -> f64 {
        self.alpha_hi - self.alpha_lo
    }

    /// 75% minus 25% order statistic.
    pub fn interquartile_width(&self) -> f64 {
        let mut work = self.alphas.clone();
        let q3 = order_statistic(&mut work, 0.75);
        let q1 = order_statistic(&mut work, 0.25);
        q3 - q1
    }
}

/// Minimum replication count for [`eb_bracket_probe`].
pub const EB_PROBE_MIN_REPS: usize = 30;

/// Replicates data generation and empirical-Bayes estimation; replication `r`
/// uses `stream.derive(r)`.
pub fn eb_bracket_probe(
    truth: &TruthSpec,
    model: &ModelConfig,
    bounds: AlphaBounds,
    reps: usize,
    stream: RandomStream,
) -> Result<EbBracket> {
    if reps < EB_PROBE_MIN_REPS {
        return Err(invalid("reps", format!("{reps} < {EB_PROBE_MIN_REPS}")));
    }
    let theta = generate_truth(truth)?;
    let alphas = (0..reps)
        .map(|r| {
            let y = sample_data(&theta, model, stream.derive(r as u64))?;
            Ok(empirical_bayes_alpha(&y, model, bounds))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EbBracket::from_alphas(alphas))
}
