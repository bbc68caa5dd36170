//! Closed-form moments and densities for the stretched-exponential family
//! `e^{-|xi|^p}`, its Schoenberg mixtures (Linnik laws in particular) and the
//! Mittag-Leffler laws. These serve as ground truth for the moment engine.

use std::f64::consts::PI;

use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::numeric::NeumaierSum;
use crate::specfun::{gamma, ln_gamma, sin_half_pi};

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::Range(format!("exponent p must lie in (0, 2], got {p}")));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    Ok(())
}

fn check_order(p: f64, alpha: f64) -> Result<()> {
    if !(alpha >= 0.0) {
        return Err(Error::Range(format!("moment order must be >= 0, got {alpha}")));
    }
    if p < 2.0 && alpha >= p {
        return Err(Error::DivergenceSuspected(format!(
            "the law with characteristic function exp(-|xi|^{p}) has finite moments only of order < {p}; alpha = {alpha}"
        )));
    }
    Ok(())
}

/// `E|X|^alpha` for the law with characteristic function `e^{-|xi|^p}` on R^d.
pub fn ep_moment(p: f64, alpha: f64, d: usize) -> Result<f64> {
    check_p(p)?;
    check_d(d)?;
    check_order(p, alpha)?;
    let dh = d as f64 / 2.0;
    let mut ln = alpha * 2f64.ln() + ln_gamma((alpha + d as f64) / 2.0)? - ln_gamma(dh)?;
    if p < 2.0 {
        ln += ln_gamma(1.0 - alpha / p)? - ln_gamma(1.0 - alpha / 2.0)?;
    }
    Ok(ln.exp())
}

/// Leading behaviour of [`ep_moment`] as `alpha -> p-`:
/// `2^p Gamma((p+d)/2) / (Gamma(1-p/2) Gamma(d/2)) / (1 - alpha/p)`.
pub fn ep_moment_singularity(p: f64, alpha: f64, d: usize) -> Result<f64> {
    check_p(p)?;
    check_d(d)?;
    if p >= 2.0 {
        return Err(Error::Range("no singularity for p = 2".into()));
    }
    if !(alpha < p) {
        return Err(Error::Range(format!("need alpha < p, got alpha = {alpha}, p = {p}")));
    }
    let c = 2f64.powf(p) * gamma((p + d as f64) / 2.0)? / (gamma(1.0 - p / 2.0)? * gamma(d as f64 / 2.0)?);
    Ok(c / (1.0 - alpha / p))
}

/// Density of the law with characteristic function `e^{-|xi|^p}` at `v`.
///
/// Uses the closed forms for `p = 1` (Cauchy) and `p = 2` (Gaussian) and
/// the Bessel power series otherwise.
pub fn ep_density(p: f64, v: &[f64], terms: usize) -> Result<f64> {
    check_p(p)?;
    let d = v.len();
    check_d(d)?;
    let r2: f64 = v.iter().map(|x| x * x).sum();
    if p == 2.0 {
        return Ok((4.0 * PI).powf(-(d as f64) / 2.0) * (-r2 / 4.0).exp());
    }
    if p == 1.0 {
        let h = (d as f64 + 1.0) / 2.0;
        return Ok(gamma(h)? * (PI * (1.0 + r2)).powf(-h));
    }
    ep_density_series(p, v, terms)
}

/// The power series
/// `E_p(v) = sum_n (-1)^n (|v|/2)^{2n} Gamma((2n+d)/p) / (n! Gamma(n+d/2)) / (p 2^{d-1} pi^{d/2})`.
///
/// Fails with [`Error::SeriesDivergence`] when the terms have not started to
/// decay within `terms` terms, or when cancellation between terms would
/// leave fewer than about six significant digits.
pub fn ep_density_series(p: f64, v: &[f64], terms: usize) -> Result<f64> {
    check_p(p)?;
    let d = v.len();
    check_d(d)?;
    if terms == 0 {
        return Err(Error::Range("need at least one series term".into()));
    }
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let df = d as f64;
    let lnx = if r > 0.0 { 2.0 * (r / 2.0).ln() } else { f64::NEG_INFINITY };
    let mut sum = NeumaierSum::new();
    let mut max_term: f64 = 0.0;
    let mut last = f64::INFINITY;
    let mut decaying_run = 0;
    for n in 0..terms {
        let nf = n as f64;
        let ln_t = if n == 0 { 0.0 } else { nf * lnx } + ln_gamma((2.0 * nf + df) / p)? - ln_gamma(nf + 1.0)? - ln_gamma(nf + df / 2.0)?;
        let mag = ln_t.exp();
        let t = if n % 2 == 0 { mag } else { -mag };
        sum.add(t);
        max_term = max_term.max(mag);
        if r == 0.0 {
            break;
        }
        decaying_run = if mag < last { decaying_run + 1 } else { 0 };
        last = mag;
        if decaying_run >= 3 && mag <= 1e-17 * sum.value().abs() {
            let s = sum.value();
            if max_term * f64::EPSILON > 1e-6 * s.abs() {
                return Err(Error::SeriesDivergence(format!(
                    "cancellation in the density series at |v| = {r}: largest term {max_term:.3e}, sum {s:.3e}"
                )));
            }
            return Ok(s / (p * 2f64.powf(df - 1.0) * PI.powf(df / 2.0)));
        }
    }
    if r == 0.0 {
        return Ok(sum.value() / (p * 2f64.powf(df - 1.0) * PI.powf(df / 2.0)));
    }
    Err(Error::SeriesDivergence(format!(
        "density series at |v| = {r} has not converged after {terms} terms (p = {p})"
    )))
}

/// `lim |v|^{d+p} E_p(v) = p 2^{p-1} sin(p pi/2) Gamma((d+p)/2) Gamma(p/2) / pi^{d/2+1}`.
pub fn bg_tail_constant(p: f64, d: usize) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::Range(format!("tail constant needs 0 < p < 2, got {p}")));
    }
    check_d(d)?;
    let df = d as f64;
    Ok(p * 2f64.powf(p - 1.0) * sin_half_pi(p) * gamma((df + p) / 2.0)? * gamma(p / 2.0)? / PI.powf(df / 2.0 + 1.0))
}

/// One-dimensional Linnik moment `E|X|^alpha` for the characteristic function
/// `(1 + |xi|^p)^{-beta}`.
pub fn linnik_moment(p: f64, beta: f64, alpha: f64) -> Result<f64> {
    linnik_moment_d(p, beta, alpha, 1)
}

/// Linnik moment on R^d: the Gamma(beta) mixture of [`ep_moment`].
pub fn linnik_moment_d(p: f64, beta: f64, alpha: f64, d: usize) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Range(format!("beta must be positive, got {beta}")));
    }
    let base = ep_moment(p, alpha, d)?;
    Ok(base * (ln_gamma(beta + alpha / p)? - ln_gamma(beta)?).exp())
}

/// Moment of the Schoenberg mixture `sum_j w_j e^{-t_j |xi|^p}`, where `nu`
/// is a one-dimensional discrete measure on `[0, inf)` holding the `t_j`.
pub fn schoenberg_moment(nu: &DiscreteMeasure, p: f64, alpha: f64, d: usize) -> Result<f64> {
    check_mixing(nu)?;
    let base = ep_moment(p, alpha, d)?;
    let mix: f64 = nu
        .iter()
        .map(|(t, w)| w * if alpha == 0.0 { 1.0 } else { t[0].powf(alpha / p) })
        .collect::<NeumaierSum>()
        .value();
    Ok(base * mix)
}

pub(crate) fn check_mixing(nu: &DiscreteMeasure) -> Result<()> {
    if nu.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: nu.dim() });
    }
    if nu.iter().any(|(t, _)| t[0] < 0.0) {
        return Err(Error::Domain("mixing measure must live on [0, inf)".into()));
    }
    Ok(())
}

/// `E X^alpha` for the Mittag-Leffler law with Laplace transform `(1 + s^delta)^{-1}`.
pub fn mittag_leffler_moment(delta: f64, alpha: f64) -> Result<f64> {
    ml_process_moment(delta, 1.0, alpha)
}

/// `E X_t^alpha` for the Mittag-Leffler process marginal with Laplace
/// transform `(1 + s^delta)^{-t}`.
pub fn ml_process_moment(delta: f64, t: f64, alpha: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Range(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(t > 0.0) {
        return Err(Error::Range(format!("t must be positive, got {t}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Range(format!("moment order must be >= 0, got {alpha}")));
    }
    if alpha >= delta {
        return Err(Error::DivergenceSuspected(format!(
            "Mittag-Leffler moments exist only for alpha < delta = {delta}; alpha = {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let ln = ln_gamma(1.0 - alpha / delta)? + ln_gamma(t + alpha / delta)? - ln_gamma(1.0 - alpha)? - ln_gamma(t)?;
    Ok(ln.exp())
}

/// Discretize Gamma(shape, 1) onto `n` equally weighted atoms at the
/// mid-quantiles `(i + 1/2)/n`.
pub fn gamma_quantile_grid(shape: f64, n: usize) -> Result<DiscreteMeasure> {
    if !(shape > 0.0) || n == 0 {
        return Err(Error::Range("need shape > 0 and n >= 1".into()));
    }
    let g = Gamma::new(shape, 1.0).map_err(|e| Error::Range(e.to_string()))?;
    let pts = (0..n).map(|i| vec![g.inverse_cdf((i as f64 + 0.5) / n as f64)]).collect();
    DiscreteMeasure::uniform(pts)
}
