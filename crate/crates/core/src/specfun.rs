//! Gamma function and the closed-form constants that turn difference
//! integrals of characteristic functions into absolute moments.
//!
//! The central objects are the alternating sum
//! `S(k, a) = sum_{m=1..k} C(k, m) (-1)^(k-m) m^a`, the normalising constant
//! `A(k, a, d)` with its reciprocal `B(k, a, d)`, and the one-dimensional
//! oscillatory integral `I(k, a)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{binomial, NeumaierSum, MAX_K};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
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

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

fn lanczos_series(z: f64) -> f64 {
    // z = x - 1 with x >= 0.5
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

/// Gamma function on the real line.
///
/// Lanczos approximation (g = 7, nine terms) for `x >= 0.5`, reflection
/// `Gamma(x) Gamma(1 - x) = pi / sin(pi x)` below.
pub fn gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("gamma of NaN".into()));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    Ok(gamma_unchecked(x))
}

pub(crate) fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // sin(pi x) computed through the reduced argument keeps accuracy near integers
        PI / (sin_pi(x) * gamma_unchecked(1.0 - x))
    } else {
        if x == x.floor() && x <= 23.0 {
            // integer arguments: exact factorial
            let mut f = 1.0;
            let mut i = 2.0;
            while i < x {
                f *= i;
                i += 1.0;
            }
            return f;
        }
        let z = x - 1.0;
        let w = z + LANCZOS_G + 0.5;
        let series = lanczos_series(z);
        // split the power to avoid overflow of w^(z+0.5) before the exponential damps it
        let p = w.powf(0.5 * (z + 0.5));
        (2.0 * PI).sqrt() * p * ((-w).exp() * p) * series
    }
}

/// Natural logarithm of `|Gamma(x)|` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    if x < 0.5 {
        return Ok((PI / (sin_pi(x) * gamma_unchecked(1.0 - x))).ln());
    }
    let z = x - 1.0;
    let w = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * w.ln() - w + lanczos_series(z).ln())
}

/// `sin(pi x)` with argument reduction so that integers give exact zeros.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round(); // r in [-1, 1]
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// `sin(a pi / 2)`, exactly zero at even integers.
pub fn sin_half_pi(a: f64) -> f64 {
    sin_pi(0.5 * a)
}

fn is_integer(a: f64) -> bool {
    a == a.floor()
}

fn is_even_integer(a: f64) -> bool {
    is_integer(a) && (a * 0.5) == (a * 0.5).floor()
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_K {
        return Err(Error::Range(format!(
            "number of differences k must lie in 1..={MAX_K}, got {k}"
        )));
    }
    Ok(())
}

/// Alternating sum `S(k, a) = sum_{m=1..k} C(k, m) (-1)^(k-m) m^a`.
///
/// Vanishes at `a = 1, .., k-1` and equals `k!` at `a = k`.
pub fn sum_s(k: usize, alpha: f64) -> Result<f64> {
    check_k(k)?;
    if !(alpha >= 0.0) {
        return Err(Error::Range(format!("S(k, alpha) needs alpha >= 0, got {alpha}")));
    }
    if is_integer(alpha) && alpha >= 1.0 && (alpha as usize) < k {
        return Ok(0.0);
    }
    if alpha == k as f64 {
        return Ok((1..=k).map(|m| m as f64).product());
    }
    let mut acc = NeumaierSum::new();
    for m in 1..=k {
        let c = binomial(k, m) as f64;
        let term = c * (m as f64).powf(alpha);
        if (k - m) % 2 == 0 {
            acc.add(term);
        } else {
            acc.add(-term);
        }
    }
    Ok(acc.value())
}

/// Falling factorial `a (a - 1) ... (a - k + 1)`.
pub fn falling_factorial(alpha: f64, k: usize) -> f64 {
    (0..k).map(|j| alpha - j as f64).product()
}

/// Mean-value parameter `theta` in `S(k, a) = a (a-1)..(a-k+1) (theta k)^(a-k)`.
///
/// Rejects arguments whose falling factorial is within `1e-10` of zero or
/// where `a = k` (the exponent vanishes and `theta` is undetermined).
pub fn mean_value_theta(k: usize, alpha: f64) -> Result<f64> {
    let ff = falling_factorial(alpha, k);
    if ff.abs() < 1e-10 {
        return Err(Error::Domain(format!(
            "falling factorial of alpha = {alpha} (k = {k}) is too close to zero"
        )));
    }
    if (alpha - k as f64).abs() < 1e-12 {
        return Err(Error::Domain("theta is undetermined at alpha = k".into()));
    }
    let s = sum_s(k, alpha)?;
    let ratio = s / ff;
    if !(ratio > 0.0) {
        return Err(Error::Domain(format!(
            "S(k, alpha) / falling factorial = {ratio} is not positive"
        )));
    }
    Ok((ratio.ln() / (alpha - k as f64)).exp() / k as f64)
}

fn check_a_domain(k: usize, alpha: f64) -> Result<()> {
    check_k(k)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("order must be positive and finite, got {alpha}")));
    }
    if is_even_integer(alpha) {
        return Err(Error::Domain(format!(
            "alpha = {alpha} is an even integer: sin(alpha pi / 2) vanishes (excluded case, use the even-order limit)"
        )));
    }
    if is_integer(alpha) && (alpha as usize) < k {
        return Err(Error::Domain(format!(
            "S(k, alpha) = 0 for integer alpha = {alpha} < k = {k}"
        )));
    }
    Ok(())
}

/// Constant `A(k, a, d)` that converts the difference integral into the
/// absolute moment of order `a`.
pub fn constant_a(k: usize, alpha: f64, d: usize) -> Result<f64> {
    check_a_domain(k, alpha)?;
    check_dim(d)?;
    let s = sum_s(k, alpha)?;
    if s == 0.0 {
        return Err(Error::Domain(format!("S({k}, {alpha}) vanishes")));
    }
    let df = d as f64;
    // log-space for the gamma ratio keeps large d well conditioned
    let lg = ln_gamma(alpha + 1.0)? + ln_gamma(0.5 * (alpha + df))?
        - ln_gamma(0.5 * (alpha + 1.0))?
        - 0.5 * (df + 1.0) * PI.ln();
    Ok(-sin_half_pi(alpha) * lg.exp() / s)
}

/// Constant `B(k, a, d) = 1 / A(k, a, d)`: the value of
/// `int (e^{-i xi.v} - 1)^k |xi|^{-d-a} d xi` divided by `|v|^a`.
pub fn constant_b(k: usize, alpha: f64, d: usize) -> Result<f64> {
    check_a_domain(k, alpha)?;
    check_dim(d)?;
    let s = sum_s(k, alpha)?;
    let df = d as f64;
    let lg = 0.5 * (df + 1.0) * PI.ln() + ln_gamma(0.5 * (alpha + 1.0))?
        - ln_gamma(alpha + 1.0)?
        - ln_gamma(0.5 * (alpha + df))?;
    Ok(-s * lg.exp() / sin_half_pi(alpha))
}

/// Closed form of `I(k, a) = int_0^inf r^{-1-a} [(e^{-ir} - 1)^k + (e^{ir} - 1)^k] dr`.
///
/// Valid for `0 < a < k + 1` (odd `k`) or `0 < a < k` (even `k`).
pub fn constant_i(k: usize, alpha: f64) -> Result<f64> {
    check_k(k)?;
    let upper = if k % 2 == 1 { (k + 1) as f64 } else { k as f64 };
    if !(alpha > 0.0 && alpha < upper) {
        return Err(Error::Range(format!(
            "I(k, alpha) converges for 0 < alpha < {upper} when k = {k}, got {alpha}"
        )));
    }
    if is_integer(alpha) {
        let a = alpha as usize;
        if a < k {
            return Ok(0.0);
        }
        if a == k && k % 2 == 1 {
            let sign = if ((k + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            return Ok(sign * PI);
        }
        // alpha = k + 1 is excluded by the range check; alpha = k even likewise
    }
    let s = sum_s(k, alpha)?;
    Ok(-PI * s / (sin_half_pi(alpha) * gamma_unchecked(alpha + 1.0)))
}

/// `int_0^inf r^{-2-delta} sin^2(r) dr` for `-1 < delta < 1` (pi/2 at delta = 0).
pub fn mellin_sin2(delta: f64) -> Result<f64> {
    if !(delta > -1.0 && delta < 1.0) {
        return Err(Error::Range(format!("mellin_sin2 needs |delta| < 1, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(PI / 2.0);
    }
    Ok(2f64.powf(delta) * gamma_unchecked(1.0 - delta) * sin_pi(0.5 * delta)
        / (delta * (1.0 + delta)))
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::Range("dimension must be at least 1".into()));
    }
    Ok(())
}

/// Surface area of the unit sphere `S^{d-1}`; 2 for `d = 1` (the two points +-1).
pub fn sphere_area(d: usize) -> Result<f64> {
    check_dim(d)?;
    if d == 1 {
        return Ok(2.0);
    }
    let h = 0.5 * d as f64;
    Ok(2.0 * PI.powf(h) / gamma_unchecked(h))
}

/// `E_k(r) = (e^{-ir} - 1)^k + (e^{ir} - 1)^k`, the integrand of `I(k, a)` without the weight.
pub fn kernel_e(k: usize, r: f64) -> f64 {
    // e^{-ir} - 1 = -2 sin^2(r/2) - i sin r; the half-angle form keeps accuracy near 0
    let h = (0.5 * r).sin();
    let z = Complex64::new(-2.0 * h * h, -r.sin());
    2.0 * z.powu(k as u32).re
}
