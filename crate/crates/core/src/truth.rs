//! Reproducible true coefficient sequences.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, tags, RandomStream};
use crate::sequence::{holder_norm, CoefficientSequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TruthFamily {
    /// `theta_i = c i^{-(1/2 + alpha)}`.
    PolyDecay { alpha: f64, c: f64 },
    /// Random member of `{sum_i i^alpha |theta_i| <= r}`, normalized onto its boundary.
    RandomHolder { alpha: f64, r: f64, seed: u64 },
    /// `theta_i = c (-1)^i i^{-(1/2 + alpha)}`.
    AlternatingDecay { alpha: f64, c: f64 },
    /// `height * exp(-w^2 / (w^2 - d^2))` for periodic distance `d < w` from `center`.
    LocalBump { center: f64, width: f64, height: f64 },
}

impl TruthFamily {
    /// Smoothness index of the family, `None` for the infinitely smooth bump.
    pub fn smoothness(&self) -> Option<f64> {
        match *self {
            TruthFamily::PolyDecay { alpha, .. }
            | TruthFamily::RandomHolder { alpha, .. }
            | TruthFamily::AlternatingDecay { alpha, .. } => Some(alpha),
            TruthFamily::LocalBump { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTruth(msg));
        match *self {
            TruthFamily::PolyDecay { alpha, c } | TruthFamily::AlternatingDecay { alpha, c } => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return bad(format!("alpha = {alpha} must be positive"));
                }
                if !c.is_finite() {
                    return bad(format!("c = {c} must be finite"));
                }
            }
            TruthFamily::RandomHolder { alpha, r, .. } => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return bad(format!("alpha = {alpha} must be positive"));
                }
                if !(r.is_finite() && r >= 0.0) {
                    return bad(format!("R = {r} must be nonnegative"));
                }
            }
            TruthFamily::LocalBump { center, width, height } => {
                if !(0.0..1.0).contains(&center) {
                    return bad(format!("center = {center} must lie in [0, 1)"));
                }
                if !(width > 0.0 && width <= 0.5) {
                    return bad(format!("width = {width} must lie in (0, 0.5]"));
                }
                if !height.is_finite() {
                    return bad(format!("height = {height} must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// A truth family together with the number of stored coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    #[serde(flatten)]
    pub family: TruthFamily,
    pub n_trunc: usize,
}

impl TruthSpec {
    pub fn new(family: TruthFamily, n_trunc: usize) -> Self {
        Self { family, n_trunc }
    }
}

pub fn generate_truth(spec: &TruthSpec) -> Result<CoefficientSequence> {
    spec.family.validate()?;
    if spec.n_trunc == 0 {
        return Err(Error::InvalidTruth("n_trunc must be at least 1".into()));
    }
    let len = spec.n_trunc;
    let coeffs = match spec.family {
        TruthFamily::PolyDecay { alpha, c } => (1..=len)
            .map(|i| c * (i as f64).powf(-(0.5 + alpha)))
            .collect(),
        TruthFamily::AlternatingDecay { alpha, c } => (1..=len)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * c * (i as f64).powf(-(0.5 + alpha))
            })
            .collect(),
        TruthFamily::RandomHolder { alpha, r, seed } => random_holder(alpha, r, seed, len),
        TruthFamily::LocalBump { center, width, height } => bump_coefficients(center, width, height, len),
    };
    CoefficientSequence::new(coeffs)
}

fn random_holder(alpha: f64, r: f64, seed: u64, len: usize) -> Vec<f64> {
    let mut xi = vec![0.0; len];
    fill_standard_normal(&mut RandomStream::new(seed, tags::TRUTH).rng(), &mut xi);
    let raw: Vec<f64> = xi
        .iter()
        .enumerate()
        .map(|(k, x)| x * ((k + 1) as f64).powf(-(alpha + 1.5)))
        .collect();
    let norm: f64 = raw
        .iter()
        .enumerate()
        .map(|(k, t)| ((k + 1) as f64).powf(alpha) * t.abs())
        .sum();
    raw.into_iter().map(|t| r * t / norm).collect()
}

fn bump_value(x: f64, center: f64, width: f64, height: f64) -> f64 {
    let mut d = x - center;
    d -= d.round();
    if d.abs() >= width {
        return 0.0;
    }
    let w2 = width * width;
    height * (-w2 / (w2 - d * d)).exp()
}

/// Projects the bump onto the first `len` basis functions with the
/// periodic trapezoid rule on `q >= 4 len` points (one forward FFT).
fn bump_coefficients(center: f64, width: f64, height: f64, len: usize) -> Vec<f64> {
    let q = (4 * len).max(4096).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = (0..q)
        .map(|j| Complex::new(bump_value(j as f64 / q as f64, center, width, height), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(q).process(&mut buf);
    let scale = 1.0 / q as f64;
    (1..=len)
        .map(|i| {
            if i == 1 {
                return buf[0].re * scale;
            }
            // F_m = sum_j f_j e^{-2 pi i m j / q}
            let f = buf[i / 2];
            if i % 2 == 0 {
                SQRT_2 * f.re * scale
            } else {
                -SQRT_2 * f.im * scale
            }
        })
        .collect()
}

/// Membership in `B(alpha, R)`.
pub fn classify_truth(theta: &CoefficientSequence, alpha: f64, r: f64) -> bool {
    holder_norm(theta, alpha) <= r
}

/// Parses `family:params`, e.g. `poly:1,1`, `alt:0.5,2`, `holder:1,1,7`,
/// `bump:0.5,0.1,1`.
impl FromStr for TruthFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidTruth(format!("`{s}`: expected family:params")))?;
        let parts: Vec<&str> = params.split(',').map(str::trim).collect();
        let num = |k: usize| -> Result<f64> {
            parts
                .get(k)
                .ok_or_else(|| Error::InvalidTruth(format!("`{s}`: missing parameter {}", k + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidTruth(format!("`{s}`: {e}")))
        };
        let expect = |count: usize| -> Result<()> {
            if parts.len() != count {
                return Err(Error::InvalidTruth(format!(
                    "`{s}`: expected {count} parameters, got {}",
                    parts.len()
                )));
            }
            Ok(())
        };
        let family = match name.trim() {
            "poly" => {
                expect(2)?;
                TruthFamily::PolyDecay { alpha: num(0)?, c: num(1)? }
            }
            "alt" => {
                expect(2)?;
                TruthFamily::AlternatingDecay { alpha: num(0)?, c: num(1)? }
            }
            "holder" => {
                expect(3)?;
                let seed = parts[2]
                    .parse::<u64>()
                    .map_err(|e| Error::InvalidTruth(format!("`{s}`: seed: {e}")))?;
                TruthFamily::RandomHolder { alpha: num(0)?, r: num(1)?, seed }
            }
            "bump" => {
                expect(3)?;
                TruthFamily::LocalBump { center: num(0)?, width: num(1)?, height: num(2)? }
            }
            other => return Err(Error::InvalidTruth(format!("unknown family `{other}`"))),
        };
        family.validate()?;
        Ok(family)
    }
}

impl fmt::Display for TruthFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TruthFamily::PolyDecay { alpha, c } => write!(f, "poly:{alpha},{c}"),
            TruthFamily::AlternatingDecay { alpha, c } => write!(f, "alt:{alpha},{c}"),
            TruthFamily::RandomHolder { alpha, r, seed } => write!(f, "holder:{alpha},{r},{seed}"),
            TruthFamily::LocalBump { center, width, height } => write!(f, "bump:{center},{width},{height}"),
        }
    }
}
