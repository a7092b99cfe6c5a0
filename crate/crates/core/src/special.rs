//! Closed-form constants: the Gamma function, the Riesz normalization
//! `gamma_{n,alpha}`, the geometric constants `K_n` and `K_{n,p}`, and sphere
//! surface areas.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFICIENTS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Largest argument accepted by [`gamma`].
pub const GAMMA_MAX_ARG: f64 = 50.0;

/// `Gamma(x)` for `0 < x <= 50` via the Lanczos approximation (`g = 7`).
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || x > GAMMA_MAX_ARG {
        return Err(Error::Domain(format!(
            "gamma requires 0 < x <= {GAMMA_MAX_ARG}, got {x}"
        )));
    }
    Ok(lanczos(x))
}

fn lanczos(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        return PI / ((PI * x).sin() * lanczos(1.0 - x));
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFICIENTS[0];
    for (i, c) in LANCZOS_COEFFICIENTS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * ((z + 0.5) * t.ln() - t).exp() * series
}

/// Riesz normalization `Gamma((n - alpha)/2) / (2^alpha pi^{n/2} Gamma(alpha/2))`,
/// so that `I_alpha` has Fourier multiplier `|xi|^{-alpha}`.
pub fn riesz_constant(n: usize, alpha: f64) -> Result<f64> {
    check_dim(n, 1)?;
    let nf = n as f64;
    if !(alpha > 0.0 && alpha < nf) {
        return Err(Error::Domain(format!(
            "riesz constant needs 0 < alpha < n = {n}, got {alpha}"
        )));
    }
    Ok(gamma((nf - alpha) / 2.0)? / (2f64.powf(alpha) * PI.powf(nf / 2.0) * gamma(alpha / 2.0)?))
}

/// Surface measure of `S^{n-1}`; `2` for `n = 1` (counting measure on `{-1, +1}`).
pub fn sphere_area(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            let half = n as f64 / 2.0;
            2.0 * PI.powf(half) / lanczos(half)
        }
    }
}

/// `int_{S^{n-1}} |omega . e|^p dsigma(omega) = 2 pi^{(n-1)/2} Gamma((p+1)/2) / Gamma((n+p)/2)`.
pub fn abs_moment(n: usize, p: f64) -> Result<f64> {
    check_dim(n, 1)?;
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("moment order must be >= 0, got {p}")));
    }
    if n == 1 {
        return Ok(2.0);
    }
    let nf = n as f64;
    Ok(2.0 * PI.powf((nf - 1.0) / 2.0) * gamma((p + 1.0) / 2.0)? / gamma((nf + p) / 2.0)?)
}

/// `K_n = int_{S^{n-1}} |omega . e| dsigma(omega)`, defined for `n >= 2`.
pub fn bbm_constant(n: usize) -> Result<f64> {
    check_dim(n, 2)?;
    abs_moment(n, 1.0)
}

/// `K_n` extended to `n = 1`, where the sphere is `{-1, +1}` and `K_1 = 2`.
///
/// Only meaningful for pointwise and seminorm experiments on the line; the
/// composed operator stays restricted to `n >= 2`.
pub fn bbm_constant_extended(n: usize) -> Result<f64> {
    if n == 1 {
        return Ok(2.0);
    }
    bbm_constant(n)
}

/// `K_{n,p} = ((1/p) int_{S^{n-1}} |omega . e|^p dsigma)^{1/p}`.
pub fn bbm_constant_p(n: usize, p: f64) -> Result<f64> {
    check_dim(n, 2)?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("K_(n,p) requires p >= 1, got {p}")));
    }
    if p == 1.0 {
        return bbm_constant(n);
    }
    Ok((abs_moment(n, p)? / p).powf(1.0 / p))
}

fn check_dim(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::Dimension {
            dim: n,
            reason: format!("requires n >= {min}"),
        });
    }
    Ok(())
}
