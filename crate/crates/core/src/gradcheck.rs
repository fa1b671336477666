//! Central finite differences for checking analytic gradients.

/// Numerical gradient of `f` at `point` using `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference<F>(f: F, point: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = point.to_vec();
    (0..point.len())
        .map(|i| {
            probe[i] = point[i] + h;
            let plus = f(&probe);
            probe[i] = point[i] - h;
            let minus = f(&probe);
            probe[i] = point[i];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Entries below this magnitude on both sides are compared absolutely.
pub const RELATIVE_FLOOR: f64 = 1e-8;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Largest elementwise [`relative_error`] between two gradients.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| relative_error(*a, *n))
        .fold(0.0, f64::max)
}
