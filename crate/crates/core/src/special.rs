//! Digamma and trigamma functions.
//!
//! Both use upward recurrence into x >= 10 followed by the Bernoulli
//! asymptotic series. Relative accuracy is better than 1e-13 on (0, inf).

use crate::error::{Error, Result};

const SHIFT_TO: f64 = 10.0;

// B_{2k} / (2k) for k = 1..7
const DIGAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

// B_{2k} for k = 1..7
const TRIGAMMA_SERIES: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// ψ(x) = d/dx ln Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "digamma",
            value: x,
        });
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_TO {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut pow = inv2;
    let mut tail = 0.0;
    for c in DIGAMMA_SERIES {
        tail += c * pow;
        pow *= inv2;
    }
    Ok(acc + x.ln() - 0.5 / x - tail)
}

/// ψ′(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "trigamma",
            value: x,
        });
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_TO {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut pow = inv2 * inv;
    let mut tail = 0.0;
    for c in TRIGAMMA_SERIES {
        tail += c * pow;
        pow *= inv2;
    }
    Ok(acc + inv + 0.5 * inv2 + tail)
}

/// Spence's dilogarithm Li₂(x) = Σ x^k / k² for 0 <= x <= 1.
///
/// Li₂(r) is the covariance of ln X and ln Y for unit exponentials whose
/// underlying complex Gaussians have squared coherence r.
pub fn dilog(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            function: "dilog",
            value: x,
        });
    }
    if x > 0.5 {
        // Euler reflection: Li₂(x) + Li₂(1−x) = π²/6 − ln x · ln(1−x)
        let y = 1.0 - x;
        let cross = if y == 0.0 { 0.0 } else { x.ln() * y.ln() };
        return Ok(std::f64::consts::PI.powi(2) / 6.0 - cross - dilog_series(y));
    }
    Ok(dilog_series(x))
}

fn dilog_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = x;
    let mut k = 1.0_f64;
    while pow > 1e-18 * k * k {
        sum += pow / (k * k);
        pow *= x;
        k += 1.0;
    }
    sum
}
