//! Trigonometric basis on `[0, 1)` and synthesis on uniform grids.
//!
//! Basis: `phi_1 = 1`, `phi_{2m} = sqrt(2) cos(2 pi m x)`,
//! `phi_{2m+1} = sqrt(2) sin(2 pi m x)`.
//!
//! On a `G`-point grid the frequencies alias modulo `G`, so any coefficient
//! vector (of any length) can be folded onto `G/2 + 1` cosine/sine bins and
//! evaluated at every grid point with one real inverse FFT. The values are
//! exactly the direct sums, up to rounding.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sequence::CoefficientSequence;

/// Smallest grid the default policy will pick.
pub const GRID_FLOOR: usize = 4096;
/// Largest grid the default policy will pick.
pub const GRID_CAP: usize = 8192;
/// Target for `grid_bias_bound / n^{-alpha/(2 alpha + 1)}` in the default policy.
pub const GRID_REL_TOL: f64 = 1e-3;

/// Uniform half-open grid `j / G`, `j = 0..G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Grid {
    size: usize,
}

impl Grid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(invalid("grid size", format!("{size} < 2")));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.size as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.size).map(|j| self.point(j)).collect()
    }
}

impl TryFrom<usize> for Grid {
    type Error = Error;
    fn try_from(size: usize) -> Result<Self> {
        Self::new(size)
    }
}

impl From<Grid> for usize {
    fn from(g: Grid) -> usize {
        g.size
    }
}

/// `phi_i(x)` for `i >= 1`, `x` in `[0, 1)`.
pub fn basis_eval(i: usize, x: f64) -> Result<f64> {
    if i == 0 {
        return Err(invalid("i", "basis index is 1-based"));
    }
    if !(0.0..1.0).contains(&x) {
        return Err(Error::OutOfDomain(x));
    }
    Ok(basis_unchecked(i, x))
}

pub(crate) fn basis_unchecked(i: usize, x: f64) -> f64 {
    if i == 1 {
        return 1.0;
    }
    let m = (i / 2) as f64;
    if i % 2 == 0 {
        SQRT_2 * (2.0 * PI * m * x).cos()
    } else {
        SQRT_2 * (2.0 * PI * m * x).sin()
    }
}

/// Where basis function `i` lands on a `G`-point grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Bin {
    /// Adds `weight * cos(2 pi k j / G)`.
    Cos { k: usize, weight: f64 },
    /// Adds `weight * sin(2 pi k j / G)`.
    Sin { k: usize, weight: f64 },
    /// Vanishes on the grid.
    Zero,
}

pub(crate) fn fold(i: usize, size: usize) -> Bin {
    debug_assert!(i >= 1);
    if i == 1 {
        return Bin::Cos { k: 0, weight: 1.0 };
    }
    let r = (i / 2) % size;
    let is_cos = i % 2 == 0;
    if r == 0 || 2 * r == size {
        return if is_cos { Bin::Cos { k: r, weight: SQRT_2 } } else { Bin::Zero };
    }
    if 2 * r < size {
        if is_cos {
            Bin::Cos { k: r, weight: SQRT_2 }
        } else {
            Bin::Sin { k: r, weight: SQRT_2 }
        }
    } else if is_cos {
        Bin::Cos { k: size - r, weight: SQRT_2 }
    } else {
        Bin::Sin { k: size - r, weight: -SQRT_2 }
    }
}

/// Reusable grid evaluator: holds the FFT plan and scratch buffers.
pub struct Synthesizer {
    size: usize,
    plan: Arc<dyn ComplexToReal<f64>>,
    spectrum: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Synthesizer {
    pub fn new(grid: Grid) -> Self {
        let plan = RealFftPlanner::<f64>::new().plan_fft_inverse(grid.size);
        let spectrum = plan.make_input_vec();
        let scratch = plan.make_scratch_vec();
        Self {
            size: grid.size,
            plan,
            spectrum,
            scratch,
        }
    }

    pub fn bins(&self) -> usize {
        self.size / 2 + 1
    }

    pub fn grid_size(&self) -> usize {
        self.size
    }

    /// Evaluates `sum_k cos_amp[k] cos(2 pi k x) + sin_amp[k] sin(2 pi k x)`
    /// on the grid. Both slices have length `bins()`.
    pub fn eval_bins(&mut self, cos_amp: &[f64], sin_amp: &[f64], out: &mut [f64]) {
        let bins = self.bins();
        assert_eq!(cos_amp.len(), bins);
        assert_eq!(sin_amp.len(), bins);
        assert_eq!(out.len(), self.size);
        for k in 0..bins {
            self.spectrum[k] = Complex::new(0.5 * cos_amp[k], -0.5 * sin_amp[k]);
        }
        self.spectrum[0] = Complex::new(cos_amp[0], 0.0);
        if self.size % 2 == 0 {
            self.spectrum[bins - 1] = Complex::new(cos_amp[bins - 1], 0.0);
        }
        self.plan
            .process_with_scratch(&mut self.spectrum, out, &mut self.scratch)
            .expect("spectrum buffers sized by the plan");
    }

    /// `f(x_j) = sum_i theta_i phi_i(x_j)` for every grid point.
    pub fn synthesize_into(&mut self, theta: &[f64], out: &mut [f64]) {
        let bins = self.bins();
        let mut cos_amp = vec![0.0; bins];
        let mut sin_amp = vec![0.0; bins];
        for (idx, &t) in theta.iter().enumerate() {
            match fold(idx + 1, self.size) {
                Bin::Cos { k, weight } => cos_amp[k] += weight * t,
                Bin::Sin { k, weight } => sin_amp[k] += weight * t,
                Bin::Zero => {}
            }
        }
        self.eval_bins(&cos_amp, &sin_amp, out);
    }

    pub fn synthesize(&mut self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        self.synthesize_into(theta, &mut out);
        out
    }
}

/// Function values of `theta` on `grid`.
pub fn synthesize(theta: &CoefficientSequence, grid: Grid) -> Vec<f64> {
    Synthesizer::new(grid).synthesize(theta.as_slice())
}

/// `max_j |values[j]|`.
pub fn sup_norm_on_grid(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(max_abs(values))
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Upper bound on the root-mean-square increment of the posterior process
/// between adjacent grid points:
/// `sqrt(sum_{i <= n_trunc} 8 pi^2 i^2 / (i^{1+2 alpha} + n)) / G`.
pub fn grid_bias_bound(alpha: f64, n: f64, n_trunc: usize, grid_size: usize) -> f64 {
    lipschitz_sum(alpha, n, n_trunc).sqrt() / grid_size as f64
}

fn lipschitz_sum(alpha: f64, n: f64, n_trunc: usize) -> f64 {
    (1..=n_trunc)
        .map(|i| {
            let fi = i as f64;
            8.0 * PI * PI * fi * fi / (fi.powf(1.0 + 2.0 * alpha) + n)
        })
        .sum()
}

/// Smallest power of two `G >= floor` with
/// `grid_bias_bound(alpha, n, n_trunc, G) <= rel_tol * n^{-alpha/(2 alpha + 1)}`,
/// clamped to `cap` when one is given.
pub fn grid_size_for_tolerance(
    alpha: f64,
    n: f64,
    n_trunc: usize,
    rel_tol: f64,
    floor: usize,
    cap: Option<usize>,
) -> usize {
    let target = rel_tol * n.powf(-alpha / (2.0 * alpha + 1.0));
    let root = lipschitz_sum(alpha, n, n_trunc).sqrt();
    let mut g = floor.max(2).next_power_of_two();
    while root / g as f64 > target {
        if let Some(c) = cap {
            if g >= c {
                return c;
            }
        }
        g *= 2;
    }
    match cap {
        Some(c) => g.min(c),
        None => g,
    }
}

/// Default grid: the tolerance policy with floor [`GRID_FLOOR`] and cap [`GRID_CAP`].
pub fn default_grid_size(alpha: f64, n: f64, n_trunc: usize) -> usize {
    grid_size_for_tolerance(alpha, n, n_trunc, GRID_REL_TOL, GRID_FLOOR, Some(GRID_CAP))
}

/// `grid_bias_bound / n^{-alpha/(2 alpha + 1)}`, reported alongside results.
pub fn grid_bias_ratio(alpha: f64, n: f64, n_trunc: usize, grid_size: usize) -> f64 {
    grid_bias_bound(alpha, n, n_trunc, grid_size) / n.powf(-alpha / (2.0 * alpha + 1.0))
}
