//! Scalar helpers. All transcendental calls go through `libm` so results do
//! not depend on the platform's C library.

use core::f64::consts::PI;

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

/// Entropy in nats of a Bernoulli variable with logit `z`.
pub fn binary_entropy_logit(z: f64) -> f64 {
    // -ln σ(z) = softplus(-z)
    sigmoid(z) * softplus(-z) + sigmoid(-z) * softplus(z)
}

/// `x ln x` with `0 ln 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * libm::log(x)
    } else {
        0.0
    }
}

/// Entropy in nats of a Bernoulli variable given both outcome probabilities.
pub fn binary_entropy(p1: f64, p0: f64) -> f64 {
    -(xlogx(p1) + xlogx(p0))
}

pub fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    libm::exp(-0.5 * z * z) / (sigma * libm::sqrt(2.0 * PI))
}

/// `ln Σ exp(v)`, summed in index order. Returns `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}
