//! Bayesian credible sets in the Gaussian white-noise sequence model and
//! Monte Carlo checks of their frequentist behavior.
//!
//! Observations `Y_i = kappa_i theta_i + n^{-1/2} xi_i` are combined with the
//! scale prior `theta_i ~ N(0, i^{-(1+2 alpha)})`. The posterior is Gaussian
//! and coordinate-wise independent, which makes L2 credible balls and
//! sup-norm credible bands (on a uniform grid of the trigonometric basis)
//! cheap to simulate. The [`harness`] module runs coverage, rate,
//! oversmoothing and empirical-Bayes studies on top of these pieces.

pub mod credible;
pub mod error;
pub mod fourier;
pub mod harness;
pub mod inference;
pub mod rng;
pub mod sequence;
pub mod stats;
pub mod truth;

pub use credible::{
    borell_radius_bound, build_credible_set, calibration_check, contains_truth, inflate, l2_radius,
    slepian_lower_probe, sup_radius, CredibleSet, NormKind, RadiusEstimate,
};
pub use error::{Error, Result};
pub use fourier::{basis_eval, grid_bias_bound, sup_norm_on_grid, synthesize, Grid};
pub use inference::{
    contraction_rate, eb_bracket_probe, empirical_bayes_alpha, marginal_loglik, posterior_mean_function,
    posterior_update, sample_posterior_coeffs, AlphaBounds, PosteriorState, PriorSpec,
};
pub use rng::RandomStream;
pub use sequence::{
    holder_norm, kappa_eval, sample_data, sobolev_norm_sq, truncation_tail_bound, CoefficientSequence,
    KappaSpec, ModelConfig,
};
pub use truth::{classify_truth, generate_truth, TruthFamily, TruthSpec};
