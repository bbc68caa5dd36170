//! The fractional heat equation `u_t + (-Delta)^{p/2} u = 0` with a
//! probability measure as initial datum, solved on the Fourier side.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::charfn::CharFn;
use crate::closed_forms::ep_moment;
use crate::convolution::measure_moment;
use crate::error::{Error, Result};
use crate::metrics::rho_alpha;
use crate::moment_engine::{absolute_moment, MomentResult, QuadratureSpec};
use crate::quadrature::adaptive;
use crate::specfun::gamma;

/// Truncation target for the inversion integral.
const INVERSION_TAIL: f64 = 1e-10;

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::Range(format!("diffusion exponent p must lie in (0, 2], got {p}")));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Range(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Solution at one time: `xi -> e^{-t |xi|^p} phi_0(xi)`.
#[derive(Clone)]
pub struct HeatSolution {
    pub p: f64,
    pub initial: CharFn,
    pub t: f64,
    pub solution: CharFn,
}

impl HeatSolution {
    pub fn new(initial: &CharFn, p: f64, t: f64) -> Result<Self> {
        Ok(Self { p, initial: initial.clone(), t, solution: evolve(initial, p, t)? })
    }
}

/// `e^{-t |xi|^p} phi(xi)`; `t = 0` returns `phi` itself.
pub fn evolve(initial: &CharFn, p: f64, t: f64) -> Result<CharFn> {
    check_p(p)?;
    check_t(t)?;
    if t == 0.0 {
        return Ok(initial.clone());
    }
    CharFn::product(initial, &CharFn::stable(p, t, initial.dim())?)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolutionMomentReport {
    pub moment: MomentResult,
    /// Order actually computed: `alpha`, or `beta` in the heavy-tailed branch.
    pub order: f64,
    /// `c (t^{gamma/p} M_{E_p}(gamma) + M_mu(alpha)^{gamma/alpha})` with
    /// `c = max(1, 2^{gamma-1})`: a bound that holds with explicit constant.
    pub bound: f64,
    /// `(1+t)^{gamma/p} M_mu(alpha)^{gamma/alpha}`.
    pub rhs_core: f64,
    /// `moment / rhs_core`, the calibration of the unspecified constant.
    pub ratio: f64,
    pub ok: bool,
}

/// Moment of the solution at time `t`, with the propagation bound.
///
/// For `p < 2` and `alpha >= p` the solution only has moments below `p`;
/// pass `beta < p` to use that branch.
pub fn solution_moment_check(
    initial: &CharFn,
    p: f64,
    t: f64,
    alpha: f64,
    beta: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<SolutionMomentReport> {
    check_p(p)?;
    check_t(t)?;
    if !(alpha > 0.0) {
        return Err(Error::Range(format!("alpha must be positive, got {alpha}")));
    }
    let gamma_order = if p < 2.0 && alpha >= p {
        match beta {
            Some(b) if b > 0.0 && b < p => b,
            _ => {
                return Err(Error::Range(format!(
                    "alpha = {alpha} >= p = {p}: solutions only have moments of order beta < p; supply such a beta"
                )))
            }
        }
    } else {
        alpha
    };
    let sol = evolve(initial, p, t)?;
    let moment = absolute_moment(&sol, gamma_order, spec)?;
    let m_mu = measure_moment(initial, alpha, spec)?.max(0.0);
    let m_mu_g = m_mu.powf(gamma_order / alpha);
    let c = 2f64.powf(gamma_order - 1.0).max(1.0);
    let m_e = if t > 0.0 { t.powf(gamma_order / p) * ep_moment(p, gamma_order, initial.dim())? } else { 0.0 };
    let bound = c * (m_e + m_mu_g);
    let rhs_core = (1.0 + t).powf(gamma_order / p) * m_mu_g;
    let ratio = if rhs_core > 0.0 { moment.value / rhs_core } else { f64::INFINITY };
    let ok = moment.value.is_finite() && moment.value <= bound * (1.0 + 1e-8) + moment.error_estimate;
    Ok(SolutionMomentReport { moment, order: gamma_order, bound, rhs_core, ratio, ok })
}

/// `C_sigma = 2 Gamma((d+|sigma|)/p) / (p (4 pi)^{d/2} Gamma(d/2))`.
pub fn sup_constant(p: f64, d: usize, sigma: usize) -> Result<f64> {
    check_p(p)?;
    let df = d as f64;
    Ok(2.0 * gamma((df + sigma as f64) / p)? / (p * (4.0 * PI).powf(df / 2.0) * gamma(df / 2.0)?))
}

/// `A_sigma = (2 pi)^{-d} ((alpha+d+|sigma|)/(e p))^{(alpha+d+|sigma|)/p}`.
pub fn refined_constant(p: f64, alpha: f64, d: usize, sigma: usize) -> Result<f64> {
    check_p(p)?;
    let s = alpha + d as f64 + sigma as f64;
    Ok((2.0 * PI).powi(-(d as i32)) * (s / (std::f64::consts::E * p)).powf(s / p))
}

/// Cutoff `R` with `(1/pi) int_R^inf xi^sigma e^{-t xi^p} d xi` below the target.
fn inversion_cutoff(p: f64, t: f64, sigma: usize) -> f64 {
    let a = (sigma as f64 + 1.0) / p;
    let tail = |r: f64| {
        let x = t * r.powf(p);
        statrs::function::gamma::gamma_ui(a, x) / (p * t.powf(a) * PI)
    };
    let mut r = t.powf(-1.0 / p);
    while tail(r) > INVERSION_TAIL * 1e-2 {
        r *= 1.25;
    }
    r
}

/// `(2 pi)^{-1} int e^{i x xi} (i xi)^sigma h(xi) e^{-t |xi|^p} d xi` in d = 1.
fn invert_1d<H>(h: &H, p: f64, t: f64, sigma: usize, x: f64, freq: f64) -> Result<f64>
where
    H: Fn(f64) -> Complex64 + Sync,
{
    let r_max = inversion_cutoff(p, t, sigma);
    let width = (PI / (x.abs() + freq + 1.0)).min(r_max / 16.0);
    let n = (r_max / width).ceil() as usize;
    if n > 2_000_000 {
        return Err(Error::NonConvergence(format!("inversion at x = {x} needs {n} panels")));
    }
    let w = r_max / n as f64;
    let f = |xi: f64| {
        let damp = (-t * xi.powf(p)).exp();
        let ipow = |s: f64| Complex64::new(0.0, s).powu(sigma as u32);
        let plus = Complex64::new(0.0, x * xi).exp() * ipow(xi) * h(xi);
        let minus = Complex64::new(0.0, -x * xi).exp() * ipow(-xi) * h(-xi);
        (plus + minus) * damp
    };
    let mut total = Complex64::default();
    for j in 0..n {
        let est = adaptive(&f, j as f64 * w, (j + 1) as f64 * w, 1e-15, 1e-12, 64);
        if !est.converged && est.error > INVERSION_TAIL {
            return Err(Error::NonConvergence(format!("inversion panel {j} at x = {x}: error {:.2e}", est.error)));
        }
        total += est.value;
    }
    Ok(total.norm() / (2.0 * PI))
}

fn atom_frequency(phi: &CharFn) -> f64 {
    phi.atoms().map(|m| m.max_norm()).unwrap_or(0.0)
}

fn check_line(phi: &CharFn) -> Result<()> {
    if phi.dim() != 1 {
        return Err(Error::UnsupportedDimension(phi.dim()));
    }
    Ok(())
}

/// `max_x |d^sigma (f - g)(x, t)|` over `x_grid`, by Fourier inversion (d = 1).
pub fn derivative_sup_distance(
    phi_a: &CharFn,
    phi_b: &CharFn,
    p: f64,
    t: f64,
    sigma: usize,
    x_grid: &[f64],
) -> Result<f64> {
    check_line(phi_a)?;
    check_line(phi_b)?;
    check_p(p)?;
    if !(t > 0.0) {
        return Err(Error::Range(format!("inversion needs t > 0, got {t}")));
    }
    let freq = atom_frequency(phi_a).max(atom_frequency(phi_b));
    let h = |xi: f64| phi_a.eval(&[xi]) - phi_b.eval(&[xi]);
    let vals: Result<Vec<f64>> = x_grid.par_iter().map(|&x| invert_1d(&h, p, t, sigma, x, freq)).collect();
    Ok(vals?.into_iter().fold(0.0, f64::max))
}

/// `max_x |d^sigma f(x, t)|` over `x_grid` for a single solution (d = 1).
pub fn derivative_sup(phi: &CharFn, p: f64, t: f64, sigma: usize, x_grid: &[f64]) -> Result<f64> {
    check_line(phi)?;
    check_p(p)?;
    if !(t > 0.0) {
        return Err(Error::Range(format!("inversion needs t > 0, got {t}")));
    }
    let freq = atom_frequency(phi);
    let h = |xi: f64| phi.eval(&[xi]);
    let vals: Result<Vec<f64>> = x_grid.par_iter().map(|&x| invert_1d(&h, p, t, sigma, x, freq)).collect();
    Ok(vals?.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub sigma: usize,
    pub times: Vec<f64>,
    pub measured_sup: Vec<f64>,
    /// `A_sigma t^{-(alpha+d+sigma)/p} rho_alpha(mu, nu)` at each time.
    pub bound: Vec<f64>,
    pub rho: f64,
    /// Least-squares slope of `ln measured_sup` against `ln t`.
    pub fitted_rate: f64,
    pub bound_holds: bool,
}

fn line_grid(phi_a: &CharFn, phi_b: &CharFn, p: f64, t: f64) -> Vec<f64> {
    let reach = atom_frequency(phi_a).max(atom_frequency(phi_b)) + 8.0 * t.powf(1.0 / p);
    (0..=160).map(|j| -reach + reach * j as f64 / 80.0).collect()
}

fn sup_with_refinement(phi_a: &CharFn, phi_b: &CharFn, p: f64, t: f64, sigma: usize) -> Result<f64> {
    let grid = line_grid(phi_a, phi_b, p, t);
    let freq = atom_frequency(phi_a).max(atom_frequency(phi_b));
    let h = |xi: f64| phi_a.eval(&[xi]) - phi_b.eval(&[xi]);
    let g = |x: f64| invert_1d(&h, p, t, sigma, x, freq);
    let vals: Result<Vec<f64>> = grid.par_iter().map(|&x| g(x)).collect();
    let vals = vals?;
    let (imax, mut best) = vals.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    let invphi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (grid[imax.saturating_sub(1)], grid[(imax + 1).min(grid.len() - 1)]);
    let mut x1 = b - invphi * (b - a);
    let mut x2 = a + invphi * (b - a);
    let (mut f1, mut f2) = (g(x1)?, g(x2)?);
    for _ in 0..30 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = g(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = g(x2)?;
        }
        best = best.max(f1).max(f2);
    }
    Ok(best)
}

/// Measured sup-distances against the refined bound, with the fitted decay rate (d = 1).
pub fn refined_rate_check(
    phi_a: &CharFn,
    phi_b: &CharFn,
    p: f64,
    alpha: f64,
    sigma: usize,
    times: &[f64],
    spec: &QuadratureSpec,
) -> Result<DecayReport> {
    check_line(phi_a)?;
    check_line(phi_b)?;
    check_p(p)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Range(format!("the refined rate needs 0 < alpha < 1, got {alpha}")));
    }
    if times.len() < 2 || times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Range("need at least two positive times".into()));
    }
    let rho = rho_alpha(phi_a, phi_b, alpha, spec)?.value;
    let a_sigma = refined_constant(p, alpha, 1, sigma)?;
    let s = (alpha + 1.0 + sigma as f64) / p;
    let mut measured = Vec::with_capacity(times.len());
    let mut bound = Vec::with_capacity(times.len());
    for &t in times {
        measured.push(sup_with_refinement(phi_a, phi_b, p, t, sigma)?);
        bound.push(a_sigma * t.powf(-s) * rho);
    }
    let bound_holds = measured.iter().zip(&bound).all(|(m, b)| *m <= b * (1.0 + 1e-6) + 1e-12);
    let fitted_rate = if measured.iter().all(|m| *m > 0.0) {
        let pts: Vec<(f64, f64)> = times.iter().zip(&measured).map(|(t, m)| (t.ln(), m.ln())).collect();
        log_slope(&pts)
    } else {
        f64::NAN
    };
    Ok(DecayReport { sigma, times: times.to_vec(), measured_sup: measured, bound, rho, fitted_rate, bound_holds })
}

fn log_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    num / den
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmallTimeReport {
    pub rho: f64,
    pub bound: f64,
    /// Grid estimate of `sup |phi|` (equal to 1 for a probability measure).
    pub sup_phi: f64,
}

/// `rho_alpha(f_t, mu)` against `2 pi^{d/2} Gamma(1 - alpha/p) / (alpha Gamma(d/2)) t^{alpha/p} sup|phi|`.
pub fn small_time_check(initial: &CharFn, p: f64, t: f64, alpha: f64, spec: &QuadratureSpec) -> Result<SmallTimeReport> {
    check_p(p)?;
    check_t(t)?;
    if !(alpha > 0.0 && alpha < 1.0 && alpha < p) {
        return Err(Error::Range(format!("small-time estimate needs 0 < alpha < min(1, p), got alpha = {alpha}, p = {p}")));
    }
    let d = initial.dim() as f64;
    let grid = crate::metrics::MetricGrid::default();
    let sup_phi = crate::metrics::sup_modulus(initial, &grid)?.max(initial.eval(&vec![0.0; initial.dim()]).norm());
    let bound = 2.0 * PI.powf(d / 2.0) * gamma(1.0 - alpha / p)? / (alpha * gamma(d / 2.0)?) * t.powf(alpha / p) * sup_phi;
    if t == 0.0 {
        return Ok(SmallTimeReport { rho: 0.0, bound, sup_phi });
    }
    let evolved = evolve(initial, p, t)?;
    let rho = rho_alpha(&evolved, initial, alpha, spec)?.value;
    Ok(SmallTimeReport { rho, bound, sup_phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn semigroup_and_delta() {
        let g = CharFn::gaussian(0.5, 1).unwrap();
        let a = evolve(&evolve(&g, 1.3, 0.2).unwrap(), 1.3, 0.7).unwrap();
        let b = evolve(&g, 1.3, 0.9).unwrap();
        for x in [0.0, 0.3, 1.7, 5.0] {
            assert!((a.eval(&[x]) - b.eval(&[x])).norm() < 1e-14);
        }
        let one = CharFn::one(2).unwrap();
        let s = evolve(&one, 0.8, 2.0).unwrap();
        let want = (-2.0f64).exp(); // |xi| = 1
        assert!((s.eval(&[0.6, 0.8]).re - want).abs() < 1e-15);
    }

    #[test]
    fn gaussian_sup_is_sharp() {
        let one = CharFn::one(1).unwrap();
        for t in [0.5, 2.0] {
            let m = derivative_sup(&one, 2.0, t, 0, &[0.0, 0.5]).unwrap();
            let want = (4.0 * PI * t).powf(-0.5);
            assert_relative_eq!(m, want, max_relative = 1e-9);
            assert_relative_eq!(sup_constant(2.0, 1, 0).unwrap() * t.powf(-0.5), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_difference_closed_form() {
        let one = CharFn::one(1).unwrap();
        let shifted = CharFn::point_mass(&[1.0]).unwrap();
        let g = |x: f64| (4.0 * PI).powf(-0.5) * (-x * x / 4.0).exp();
        let xs: Vec<f64> = (0..41).map(|j| -1.5 + 0.1 * j as f64).collect();
        let got = derivative_sup_distance(&one, &shifted, 2.0, 1.0, 0, &xs).unwrap();
        let want = xs.iter().map(|&x| (g(x) - g(x - 1.0)).abs()).fold(0.0, f64::max);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn delta_small_time_equality() {
        let one = CharFn::one(1).unwrap();
        let spec = QuadratureSpec::default();
        let r = small_time_check(&one, 2.0, 0.3, 0.5, &spec).unwrap();
        let want = 2.0 * 0.3f64.powf(0.25) * gamma(0.75).unwrap() / 0.5;
        assert_relative_eq!(r.rho, want, max_relative = 1e-7);
        assert_relative_eq!(r.bound, want, max_relative = 1e-12);
        assert_eq!(small_time_check(&one, 2.0, 0.0, 0.5, &spec).unwrap().rho, 0.0);
    }

    #[test]
    fn refined_constant_matches_max() {
        // A_sigma is (2 pi)^{-1} max_r r^s e^{-t r^p} at t = 1
        let (p, s): (f64, f64) = (2.0, 1.5 + 1.0);
        let r0 = (s / p).powf(1.0 / p);
        let direct = r0.powf(s) * (-r0.powf(p)).exp() / (2.0 * PI);
        assert_relative_eq!(refined_constant(p, 0.5, 1, 1).unwrap(), direct, max_relative = 1e-13);
    }
}
