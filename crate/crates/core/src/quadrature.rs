//! Composite Simpson rule on uniform grids.

/// Composite Simpson sum of `values` sampled with uniform spacing `h`.
/// The number of samples must be odd and at least 3.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd number of samples, got {n}");
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even)
}
