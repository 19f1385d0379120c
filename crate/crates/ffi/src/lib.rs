//! C ABI for `credcov`.
//!
//! Every function returns a [`CcStatus`]; results are written through out
//! pointers. On failure the message is available from
//! [`credcov_last_error_message`] on the same thread. Posterior states are
//! opaque handles released with [`credcov_posterior_free`]; strings returned
//! by the library are released with [`credcov_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use credcov::credible::{l2_radius, sup_radius, RadiusEstimate};
use credcov::fourier::{basis_eval, Grid, Synthesizer};
use credcov::harness::{
    run_coverage, run_cox_freedman_demo, run_eb_study, run_rate_study, ExperimentConfig, RunOptions, Tabular,
};
use credcov::inference::{empirical_bayes_alpha, marginal_loglik, posterior_update, AlphaBounds, PosteriorState, PriorSpec};
use credcov::rng::RandomStream;
use credcov::sequence::{CoefficientSequence, KappaSpec, ModelConfig};
use credcov::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonFinite = 3,
    Io = 4,
    Serialization = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStudy {
    Coverage = 0,
    Rates = 1,
    CoxFreedman = 2,
    EbStudy = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CcRadius {
    pub radius: f64,
    pub std_error: f64,
    pub draws: usize,
}

impl From<RadiusEstimate> for CcRadius {
    fn from(e: RadiusEstimate) -> Self {
        Self {
            radius: e.radius,
            std_error: e.std_error,
            draws: e.draws,
        }
    }
}

/// Opaque posterior state.
pub struct CcPosterior(PosteriorState);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CcStatus {
    match e {
        Error::NonFinite { .. } => CcStatus::NonFinite,
        Error::Io { .. } => CcStatus::Io,
        Error::Serialization(_) => CcStatus::Serialization,
        _ => CcStatus::InvalidArgument,
    }
}

struct Failure(CcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside credcov".into());
            CcStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn kappa(p: f64) -> Result<KappaSpec, Failure> {
    if p == 0.0 {
        Ok(KappaSpec::Direct)
    } else {
        Ok(KappaSpec::poly(p)?)
    }
}

unsafe fn data_and_model(y: *const f64, len: usize, n: f64, kappa_p: f64) -> Result<(CoefficientSequence, ModelConfig), Failure> {
    let y = CoefficientSequence::new(slice(y, len, "y")?.to_vec())?;
    let model = ModelConfig::new(n, kappa(kappa_p)?, len)?;
    Ok((y, model))
}

unsafe fn posterior<'a>(h: *const CcPosterior) -> Result<&'a PosteriorState, Failure> {
    h.as_ref().map(|p| &p.0).ok_or_else(|| null("posterior"))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn credcov_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Conjugate posterior for data `y[0..len]` (length is the truncation index).
/// `kappa_p = 0` selects the direct problem, otherwise `kappa_i = i^{-kappa_p}`.
///
/// # Safety
/// `y` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn credcov_posterior_new(
    y: *const f64,
    len: usize,
    alpha: f64,
    n: f64,
    kappa_p: f64,
    out: *mut *mut CcPosterior,
) -> CcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (y, model) = data_and_model(y, len, n, kappa_p)?;
        let prior = PriorSpec::new(alpha, AlphaBounds::default())?;
        let state = posterior_update(&y, &prior, &model)?;
        write(out, Box::into_raw(Box::new(CcPosterior(state))), "out")
    })
}

/// # Safety
/// `h` must come from [`credcov_posterior_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn credcov_posterior_free(h: *mut CcPosterior) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of stored coordinates, 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn credcov_posterior_len(h: *const CcPosterior) -> usize {
    h.as_ref().map_or(0, |p| p.0.len())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, cap: usize) -> Result<(), Failure> {
    if cap < src.len() {
        return Err(Failure(
            CcStatus::BufferTooSmall,
            format!("buffer holds {cap}, need {}", src.len()),
        ));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Copies the posterior means into `out[0..cap]`.
///
/// # Safety
/// `h` must be live and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn credcov_posterior_means(h: *const CcPosterior, out: *mut f64, cap: usize) -> CcStatus {
    guard(|| copy_out(posterior(h)?.means(), out, cap))
}

/// Copies the posterior variances into `out[0..cap]`.
///
/// # Safety
/// `h` must be live and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn credcov_posterior_variances(h: *const CcPosterior, out: *mut f64, cap: usize) -> CcStatus {
    guard(|| copy_out(posterior(h)?.variances(), out, cap))
}

/// Sup-norm radius on a grid of `grid_size` points.
///
/// # Safety
/// `h` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn credcov_sup_radius(
    h: *const CcPosterior,
    gamma: f64,
    grid_size: usize,
    draws: usize,
    seed: u64,
    stream_id: u64,
    out: *mut CcRadius,
) -> CcStatus {
    guard(|| {
        let est = sup_radius(
            posterior(h)?,
            gamma,
            Grid::new(grid_size)?,
            draws,
            RandomStream::new(seed, stream_id),
        )?;
        write(out, est.into(), "out")
    })
}

/// L2 radius.
///
/// # Safety
/// `h` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn credcov_l2_radius(
    h: *const CcPosterior,
    gamma: f64,
    draws: usize,
    seed: u64,
    stream_id: u64,
    out: *mut CcRadius,
) -> CcStatus {
    guard(|| {
        let est = l2_radius(posterior(h)?, gamma, draws, RandomStream::new(seed, stream_id))?;
        write(out, est.into(), "out")
    })
}

/// Log marginal likelihood of `y` under smoothness `alpha`.
///
/// # Safety
/// `y` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn credcov_marginal_loglik(
    y: *const f64,
    len: usize,
    alpha: f64,
    n: f64,
    kappa_p: f64,
    out: *mut f64,
) -> CcStatus {
    guard(|| {
        let (y, model) = data_and_model(y, len, n, kappa_p)?;
        write(out, marginal_loglik(&y, alpha, &model), "out")
    })
}

/// Empirical-Bayes smoothness over `[alpha_min, alpha_max]`.
///
/// # Safety
/// `y` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn credcov_empirical_bayes_alpha(
    y: *const f64,
    len: usize,
    n: f64,
    kappa_p: f64,
    alpha_min: f64,
    alpha_max: f64,
    out: *mut f64,
) -> CcStatus {
    guard(|| {
        let (y, model) = data_and_model(y, len, n, kappa_p)?;
        let bounds = AlphaBounds::new(alpha_min, alpha_max)?;
        write(out, empirical_bayes_alpha(&y, &model, bounds), "out")
    })
}

/// Basis function `phi_i(x)`, `i >= 1`, `x` in `[0, 1]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn credcov_basis_eval(i: usize, x: f64, out: *mut f64) -> CcStatus {
    guard(|| write(out, basis_eval(i, x)?, "out"))
}

/// `sum_i theta_i phi_i` on the grid `j / grid_size`, written to
/// `out[0..grid_size]`.
///
/// # Safety
/// `theta` must point to `len` doubles and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn credcov_synthesize(
    theta: *const f64,
    len: usize,
    grid_size: usize,
    out: *mut f64,
    cap: usize,
) -> CcStatus {
    guard(|| {
        let theta = CoefficientSequence::new(slice(theta, len, "theta")?.to_vec())?;
        let values = Synthesizer::new(Grid::new(grid_size)?).synthesize(theta.as_slice());
        copy_out(&values, out, cap)
    })
}

/// Runs a study from a JSON experiment config and returns the JSON report
/// in `out_json` (free with [`credcov_string_free`]). `other_alpha` is used
/// only by the oversmoothing demo; `workers = 0` uses the default pool.
/// `passed` receives whether every check passed.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn credcov_run_study_json(
    config_json: *const c_char,
    study: CcStudy,
    other_alpha: f64,
    workers: usize,
    out_json: *mut *mut c_char,
    passed: *mut bool,
) -> CcStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null("config_json"));
        }
        if out_json.is_null() || passed.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|e| Failure(CcStatus::InvalidArgument, format!("config is not UTF-8: {e}")))?;
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Failure(CcStatus::Serialization, e.to_string()))?;
        let opts = RunOptions {
            workers: (workers > 0).then_some(workers),
        };
        let (json, ok) = match study {
            CcStudy::Coverage => encode(&run_coverage(&config, opts)?)?,
            CcStudy::Rates => encode(&run_rate_study(&config, opts)?)?,
            CcStudy::CoxFreedman => encode(&run_cox_freedman_demo(&config, other_alpha, opts)?)?,
            CcStudy::EbStudy => encode(&run_eb_study(&config, opts)?)?,
        };
        let c = CString::new(json).map_err(|e| Failure(CcStatus::Serialization, e.to_string()))?;
        write(passed, ok, "passed")?;
        write(out_json, c.into_raw(), "out_json")
    })
}

fn encode<R: Tabular>(report: &R) -> Result<(String, bool), Failure> {
    let json = serde_json::to_string(report).map_err(|e| Failure(CcStatus::Serialization, e.to_string()))?;
    Ok((json, report.passed()))
}

/// # Safety
/// `s` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn credcov_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
