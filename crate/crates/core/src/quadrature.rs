//! Trapezoid-rule helpers on uniform grids.

/// `∫ f` for samples `f` with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// `∫ w(x) f(x)` where `x_j = x0 + j h`.
pub fn trapezoid_weighted(values: &[f64], x0: f64, h: f64, w: impl Fn(f64) -> f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (j, v) in values.iter().enumerate() {
        let weight = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
        acc += weight * w(x0 + j as f64 * h) * v;
    }
    acc * h
}
