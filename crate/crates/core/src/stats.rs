//! Small order-statistic helpers shared by the Monte Carlo routines.

/// The `ceil(p * len)`-th smallest value (1-based, at least the first).
/// Reorders `values`.
pub fn order_statistic(values: &mut [f64], p: f64) -> f64 {
    assert!(!values.is_empty());
    let rank = order_rank(values.len(), p);
    let (_, v, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *v
}

/// 1-based rank `ceil(p * len)`, clamped to `1..=len`.
pub fn order_rank(len: usize, p: f64) -> usize {
    ((p * len as f64).ceil() as usize).clamp(1, len)
}

/// Distribution-free standard error of the `p`-quantile: half the distance
/// between the order statistics one binomial standard deviation either side
/// of the quantile rank. `sorted` must be ascending.
pub fn quantile_std_error(sorted: &[f64], p: f64) -> f64 {
    let len = sorted.len();
    let rank = order_rank(len, p);
    let spread = (len as f64 * p * (1.0 - p)).sqrt().ceil().max(1.0) as usize;
    let lo = rank.saturating_sub(spread).max(1);
    let hi = (rank + spread).min(len);
    let width = sorted[hi - 1] - sorted[lo - 1];
    // (hi - lo) ranks correspond to 2 * spread binomial sd when not clipped
    width * spread as f64 / (hi - lo).max(1) as f64
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with denominator `len - 1`.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}
