#![allow(dead_code)]

//! Numerical oracles that do not reuse the library's closed forms.

use std::f64::consts::PI;

/// Composite Simpson rule on `[a, b]` with `intervals` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean).powi(2) / var)
}

/// One coordinate of the sequence model: prior `N(0, tau2)`, observation
/// `Y ~ N(kappa theta, 1/n)`.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate {
    pub y: f64,
    pub tau2: f64,
    pub kappa: f64,
    pub n: f64,
}

impl Coordinate {
    fn log_joint(&self, theta: f64) -> f64 {
        log_normal_pdf(theta, 0.0, self.tau2) + log_normal_pdf(self.y, self.kappa * theta, 1.0 / self.n)
    }

    /// Mode of the joint density by golden-section search on a bracket that
    /// must contain it (between 0 and the unregularized estimate).
    fn mode(&self) -> f64 {
        let ls = self.y / self.kappa;
        let (mut a, mut b) = (ls.min(0.0) - 1.0, ls.max(0.0) + 1.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..400 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if self.log_joint(c) >= self.log_joint(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    /// Upper bound on the posterior standard deviation.
    fn scale(&self) -> f64 {
        self.tau2.sqrt().min(1.0 / (self.kappa * self.n.sqrt()))
    }

    /// `(log normalizer, posterior mean, posterior variance)` by quadrature
    /// over `mode +- 14 scale`.
    pub fn quadrature(&self) -> (f64, f64, f64) {
        let m = self.mode();
        let s = self.scale();
        let peak = self.log_joint(m);
        let (a, b) = (m - 14.0 * s, m + 14.0 * s);
        let panels = 20_000;
        let w = |t: f64| (self.log_joint(t) - peak).exp();
        let z = simpson(w, a, b, panels);
        let m1 = simpson(|t| (t - m) * w(t), a, b, panels) / z;
        let m2 = simpson(|t| (t - m).powi(2) * w(t), a, b, panels) / z;
        (z.ln() + peak, m + m1, m2 - m1 * m1)
    }
}

/// Argmax of `f` over `points`, first maximizer on ties.
pub fn grid_argmax(f: impl Fn(f64) -> f64, points: &[f64]) -> f64 {
    let mut best = points[0];
    let mut best_val = f(best);
    for &p in &points[1..] {
        let v = f(p);
        if v > best_val {
            best = p;
            best_val = v;
        }
    }
    best
}

/// Log marginal density of a whole sequence, written out term by term.
pub fn direct_log_marginal(y: &[f64], alpha: f64, n: f64, kappa_p: f64) -> f64 {
    y.iter()
        .enumerate()
        .map(|(k, &yi)| {
            let i = (k + 1) as f64;
            let kappa = i.powf(-kappa_p);
            log_normal_pdf(yi, 0.0, kappa * kappa * i.powf(-1.0 - 2.0 * alpha) + 1.0 / n)
        })
        .sum()
}
