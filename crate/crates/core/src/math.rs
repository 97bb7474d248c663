//! `f64` helpers backed by `libm` so the crate builds without `std`.

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

pub(crate) fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

/// `log Σ wᵢ cᵢ e^{s·uᵢ}` with the maximum exponent factored out.
///
/// Returns `None` when the sum is not strictly positive.
pub(crate) fn log_weighted_exp_sum(
    weights: &[f64],
    coeffs: &[f64],
    values: &[f64],
    scale: f64,
) -> Option<(f64, f64)> {
    let shift = values
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w != 0.0)
        .map(|(v, _)| scale * v)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return None;
    }
    let mut sum = 0.0;
    for ((w, c), v) in weights.iter().zip(coeffs).zip(values) {
        sum += w * c * exp(scale * v - shift);
    }
    if sum > 0.0 && sum.is_finite() {
        Some((ln(sum) + shift, shift))
    } else {
        None
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
