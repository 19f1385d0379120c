//! Gaussian sequence model `Y_i = kappa_i * theta_i + n^{-1/2} * xi_i`.
//!
//! Coefficient sequences are stored as finite vectors; every entry past the
//! stored length is exactly zero.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{fill_standard_normal, RandomStream};

/// Default lower end of the supported smoothness range.
pub const ALPHA_MIN_DEFAULT: f64 = 0.25;
/// Default upper end of the supported smoothness range.
pub const ALPHA_MAX_DEFAULT: f64 = 8.0;

/// Finite coefficient vector `(theta_1, theta_2, ...)` with implicit zero tail.
///
/// Index 1 is stored at position 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CoefficientSequence(Vec<f64>);

impl CoefficientSequence {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: index + 1 });
        }
        Ok(Self(coeffs))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len.max(1)])
    }

    /// The unit vector `e_i` (1-based) stored with length `len.max(i)`.
    pub fn unit(i: usize, len: usize) -> Self {
        assert!(i >= 1, "basis index is 1-based");
        let mut v = vec![0.0; len.max(i)];
        v[i - 1] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coefficient `i` (1-based); zero past the stored length.
    pub fn get(&self, i: usize) -> f64 {
        debug_assert!(i >= 1);
        self.0.get(i - 1).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Copy resized to `len` entries: truncates or zero-pads.
    pub fn resized(&self, len: usize) -> Self {
        let mut v = self.0.clone();
        v.resize(len.max(1), 0.0);
        Self(v)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|x| c * x).collect())
    }

    /// `self - other`, over the longer of the two lengths.
    pub fn sub(&self, other: &Self) -> Self {
        let len = self.len().max(other.len());
        Self((1..=len).map(|i| self.get(i) - other.get(i)).collect())
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for CoefficientSequence {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CoefficientSequence> for Vec<f64> {
    fn from(s: CoefficientSequence) -> Self {
        s.0
    }
}

/// Diagonal forward operator `kappa_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KappaSpec {
    #[default]
    Direct,
    /// `kappa_i = i^{-p}`.
    PolyIllPosed { p: f64 },
}

impl KappaSpec {
    pub fn poly(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 0.0) {
            return Err(invalid("kappa.p", format!("{p} must be finite and >= 0")));
        }
        Ok(Self::PolyIllPosed { p })
    }

    pub fn eval(&self, i: usize) -> f64 {
        debug_assert!(i >= 1);
        match *self {
            KappaSpec::Direct => 1.0,
            KappaSpec::PolyIllPosed { p } => (i as f64).powf(-p),
        }
    }
}

impl std::str::FromStr for KappaSpec {
    type Err = Error;

    /// `direct` or `poly:p`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().split_once(':') {
            None if s.trim() == "direct" => Ok(Self::Direct),
            Some(("poly", p)) => {
                let p = p
                    .trim()
                    .parse()
                    .map_err(|_| invalid("kappa", format!("bad exponent in {s:?}")))?;
                Self::poly(p)
            }
            _ => Err(invalid("kappa", format!("expected direct or poly:p, got {s:?}"))),
        }
    }
}

/// Free function form of [`KappaSpec::eval`].
pub fn kappa_eval(spec: KappaSpec, i: usize) -> f64 {
    spec.eval(i)
}

/// Observation model: noise level `n^{-1/2}`, operator, and truncation index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: f64,
    pub kappa: KappaSpec,
    pub n_trunc: usize,
}

impl ModelConfig {
    pub fn new(n: f64, kappa: KappaSpec, n_trunc: usize) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(invalid("n", format!("{n} must be positive and finite")));
        }
        if n_trunc == 0 {
            return Err(invalid("n_trunc", "must be at least 1"));
        }
        if let KappaSpec::PolyIllPosed { p } = kappa {
            KappaSpec::poly(p)?;
        }
        Ok(Self { n, kappa, n_trunc })
    }

    /// Model with the default truncation policy.
    pub fn with_default_trunc(n: f64, kappa: KappaSpec) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(invalid("n", format!("{n} must be positive and finite")));
        }
        Self::new(n, kappa, default_n_trunc(n))
    }

    pub fn noise_sd(&self) -> f64 {
        self.n.sqrt().recip()
    }

    /// Checks that the signal window `n^{1/(1+2 alpha_min)}` fits in the stored range.
    pub fn check_window(&self, alpha_min: f64) -> Result<()> {
        let need = self.n.powf(1.0 / (1.0 + 2.0 * alpha_min)).ceil();
        if (self.n_trunc as f64) < need {
            return Err(invalid(
                "n_trunc",
                format!(
                    "{} is below the signal window {need} for alpha_min = {alpha_min}",
                    self.n_trunc
                ),
            ));
        }
        Ok(())
    }
}

/// `max(2048, ceil(4 * n^{1/(1 + 2 * 0.25)}))`.
pub fn default_n_trunc(n: f64) -> usize {
    let window = (4.0 * n.powf(1.0 / (1.0 + 2.0 * ALPHA_MIN_DEFAULT))).ceil();
    (window as usize).max(2048)
}

/// Draws `Y` of length `model.n_trunc`. The truth is zero-padded or truncated
/// to that length.
pub fn sample_data(
    truth: &CoefficientSequence,
    model: &ModelConfig,
    stream: RandomStream,
) -> Result<CoefficientSequence> {
    if let Some(index) = truth.as_slice().iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite { index: index + 1 });
    }
    let mut y = vec![0.0; model.n_trunc];
    fill_standard_normal(&mut stream.rng(), &mut y);
    let sd = model.noise_sd();
    for (k, yk) in y.iter_mut().enumerate() {
        let i = k + 1;
        *yk = model.kappa.eval(i) * truth.get(i) + sd * *yk;
    }
    CoefficientSequence::new(y)
}

/// `sum_i i^alpha |theta_i|` over the stored entries.
pub fn holder_norm(theta: &CoefficientSequence, alpha: f64) -> f64 {
    theta
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, t)| ((k + 1) as f64).powf(alpha) * t.abs())
        .sum()
}

/// `sum_i i^{2 alpha} theta_i^2`.
pub fn sobolev_norm_sq(theta: &CoefficientSequence, alpha: f64) -> f64 {
    theta
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, t)| ((k + 1) as f64).powf(2.0 * alpha) * t * t)
        .sum()
}

/// Upper bound `N^{-2 alpha} / (2 alpha)` on the prior-variance mass
/// `sum_{i > N} i^{-(1 + 2 alpha)}` discarded by truncating at `N`.
pub fn truncation_tail_bound(alpha: f64, n_trunc: usize) -> f64 {
    (n_trunc as f64).powf(-2.0 * alpha) / (2.0 * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_eval(KappaSpec::Direct, 7), 1.0);
        assert_eq!(kappa_eval(KappaSpec::PolyIllPosed { p: 1.0 }, 1), 1.0);
        assert_eq!(kappa_eval(KappaSpec::PolyIllPosed { p: 0.5 }, 4), 0.5);
    }

    #[test]
    fn kappa_poly_is_positive_nonincreasing() {
        let k = KappaSpec::poly(1.3).unwrap();
        let vals: Vec<f64> = (1..200).map(|i| k.eval(i)).collect();
        assert!(vals.iter().all(|&v| v > 0.0));
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        assert!(KappaSpec::poly(-1.0).is_err());
    }

    #[test]
    fn sequence_rejects_bad_input() {
        assert!(matches!(CoefficientSequence::new(vec![]), Err(Error::EmptySequence)));
        assert!(matches!(
            CoefficientSequence::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 2 })
        ));
        let s = CoefficientSequence::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(s.get(2), 2.0);
        assert_eq!(s.get(50), 0.0);
    }

    #[test]
    fn model_validation() {
        assert!(ModelConfig::new(0.0, KappaSpec::Direct, 10).is_err());
        assert!(ModelConfig::new(1.0, KappaSpec::Direct, 0).is_err());
        let m = ModelConfig::with_default_trunc(1e6, KappaSpec::Direct).unwrap();
        assert_eq!(m.n_trunc, 40_000);
        assert!(m.check_window(ALPHA_MIN_DEFAULT).is_ok());
        let tight = ModelConfig::new(1e6, KappaSpec::Direct, 100).unwrap();
        assert!(tight.check_window(ALPHA_MIN_DEFAULT).is_err());
        assert_eq!(default_n_trunc(1e3), 2048);
    }

    #[test]
    fn sample_data_small_noise() {
        let model = ModelConfig::new(1e12, KappaSpec::Direct, 4096).unwrap();
        let y = sample_data(&CoefficientSequence::zeros(1), &model, RandomStream::new(3, 0)).unwrap();
        assert_eq!(y.len(), 4096);
        assert!(y.as_slice().iter().all(|v| v.abs() < 1e-4));
    }

    #[test]
    fn sample_data_is_deterministic() {
        let model = ModelConfig::new(50.0, KappaSpec::poly(0.5).unwrap(), 64).unwrap();
        let truth = CoefficientSequence::new((1..=10).map(|i| 1.0 / i as f64).collect()).unwrap();
        let a = sample_data(&truth, &model, RandomStream::new(9, 1)).unwrap();
        let b = sample_data(&truth, &model, RandomStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
        let c = sample_data(&truth, &model, RandomStream::new(9, 2)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_data_moments() {
        // theta = e_1, direct problem: E[Y_1] = 1, E[Y_i] = 0, Var = 1/n
        let n = 25.0;
        let model = ModelConfig::new(n, KappaSpec::Direct, 3).unwrap();
        let truth = CoefficientSequence::unit(1, 1);
        let reps = 100_000;
        let mut sum = [0.0; 3];
        let mut sumsq = [0.0; 3];
        let base = RandomStream::new(2024, 0);
        for r in 0..reps {
            let y = sample_data(&truth, &model, base.derive(r)).unwrap();
            for k in 0..3 {
                sum[k] += y.as_slice()[k];
                sumsq[k] += y.as_slice()[k].powi(2);
            }
        }
        let var = 1.0 / n;
        for k in 0..3 {
            let mean = sum[k] / reps as f64;
            let expect = if k == 0 { 1.0 } else { 0.0 };
            let se_mean = (var / reps as f64).sqrt();
            assert!((mean - expect).abs() < 4.0 * se_mean, "mean[{k}] = {mean}");
            let emp_var = sumsq[k] / reps as f64 - mean * mean;
            // Var of the sample variance of a normal is 2 sigma^4 / reps
            let se_var = (2.0 * var * var / reps as f64).sqrt();
            assert!((emp_var - var).abs() < 4.0 * se_var, "var[{k}] = {emp_var}");
        }
    }

    #[test]
    fn nonfinite_truth_never_reaches_the_sampler() {
        assert!(CoefficientSequence::new(vec![0.0, f64::INFINITY]).is_err());
        assert!(serde_json::from_str::<CoefficientSequence>("[]").is_err());
    }

    #[test]
    fn holder_and_sobolev_examples() {
        for alpha in [0.3, 1.0, 2.5] {
            assert_eq!(holder_norm(&CoefficientSequence::unit(1, 5), alpha), 1.0);
            assert_eq!(holder_norm(&CoefficientSequence::zeros(5), alpha), 0.0);
            assert_eq!(sobolev_norm_sq(&CoefficientSequence::unit(1, 5), alpha), 1.0);
        }
        assert_eq!(sobolev_norm_sq(&CoefficientSequence::unit(2, 5), 1.0), 4.0);

        let alpha = 1.0;
        let theta = CoefficientSequence::new(
            (1..=100).map(|i| (i as f64).powf(-(alpha + 2.0))).collect(),
        )
        .unwrap();
        let oracle: f64 = (1..=100).map(|i| 1.0 / (i as f64 * i as f64)).sum();
        assert!((holder_norm(&theta, alpha) - oracle).abs() < 1e-12);
        assert!((oracle - 1.63498).abs() < 1e-5);
    }

    #[test]
    fn kappa_parsing() {
        assert_eq!("direct".parse::<KappaSpec>().unwrap(), KappaSpec::Direct);
        assert_eq!("poly:1.5".parse::<KappaSpec>().unwrap(), KappaSpec::PolyIllPosed { p: 1.5 });
        for bad in ["poly:-1", "poly:x", "inverse", ""] {
            assert!(bad.parse::<KappaSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn tail_bound_examples() {
        assert!((truncation_tail_bound(1.0, 10) - 0.005).abs() < 1e-15);
        assert!((truncation_tail_bound(0.5, 100) - 0.01).abs() < 1e-15);
        for alpha in [0.5, 1.0, 2.0] {
            for big_n in [10usize, 100] {
                let brute: f64 = ((big_n + 1)..=10_000_000)
                    .map(|i| (i as f64).powf(-(1.0 + 2.0 * alpha)))
                    .sum();
                assert!(truncation_tail_bound(alpha, big_n) >= brute, "({alpha}, {big_n})");
            }
        }
    }

    #[test]
    fn tail_bound_monotone() {
        assert!(truncation_tail_bound(1.0, 10) > truncation_tail_bound(1.0, 20));
        assert!(truncation_tail_bound(1.0, 10) > truncation_tail_bound(1.5, 10));
    }

    fn seq_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 1..40)
    }

    proptest! {
        #[test]
        fn norms_homogeneous(v in seq_strategy(), c in -5.0f64..5.0, alpha in 0.1f64..3.0) {
            let s = CoefficientSequence::new(v).unwrap();
            let cs = s.scaled(c).unwrap();
            let h = holder_norm(&s, alpha);
            let sq = sobolev_norm_sq(&s, alpha);
            prop_assert!((holder_norm(&cs, alpha) - c.abs() * h).abs() <= 1e-9 * (1.0 + c.abs() * h));
            prop_assert!((sobolev_norm_sq(&cs, alpha) - c * c * sq).abs() <= 1e-9 * (1.0 + c * c * sq));
        }

        #[test]
        fn sobolev_dominated_by_holder_squared(v in seq_strategy(), alpha in 0.1f64..3.0) {
            let s = CoefficientSequence::new(v).unwrap();
            let h = holder_norm(&s, alpha);
            prop_assert!(sobolev_norm_sq(&s, alpha) <= h * h * (1.0 + 1e-12));
        }
    }
}
