//! Small statistical helpers shared by sessions, reports and tests.

/// Standard deviation of a binomial proportion estimate.
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// `|observed − expected| ≤ k·sigma`.
pub fn within_sigma(observed: f64, expected: f64, sigma: f64, k: f64) -> bool {
    (observed - expected).abs() <= k * sigma
}

/// Mean and sample standard deviation. `None` for an empty input; the
/// deviation is 0 for a single value.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// Rounds to 12 significant digits, the precision used in serialized reports.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}
