//! Fourier-based distances between probability measures, the seminorms they
//! are built from, and a finiteness classifier for difference integrals.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::charfn::CharFn;
use crate::error::{Error, Result};
use crate::moment_engine::{
    integrate_rays, moment_with, sphere_rule, DifferenceRay, Formula, Functional, QuadratureSpec, RayFunction,
};
use crate::numeric::{difference_weights, ComplexSum};
use crate::specfun::constant_a;

/// Grid used by the supremum-type metrics.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MetricGrid {
    pub radii: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Golden-section steps around the grid argmax.
    pub refine: usize,
    pub sphere_order: usize,
}

impl Default for MetricGrid {
    fn default() -> Self {
        Self { radii: 96, r_min: 1e-6, r_max: 1e6, refine: 32, sphere_order: 64 }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct GridReport {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub refinement_depth: usize,
    pub argmax_r: f64,
    /// Quadrature panels used by integral components.
    pub panels: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricResult {
    pub value: f64,
    pub sup_component: f64,
    pub integral_component: f64,
    pub error_estimate: f64,
    pub grid_report: GridReport,
}

impl MetricResult {
    fn sup(value: f64, grid_report: GridReport) -> Self {
        Self { value, sup_component: value, integral_component: 0.0, error_estimate: 0.0, grid_report }
    }

    fn integral(value: f64, error: f64, panels: usize, directions: usize) -> Self {
        Self {
            value,
            sup_component: 0.0,
            integral_component: value,
            error_estimate: error,
            grid_report: GridReport { angular_nodes: directions, panels, ..Default::default() },
        }
    }
}

fn check_pair(phi: &CharFn, psi: &CharFn) -> Result<()> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), got: psi.dim() });
    }
    Ok(())
}

fn directions(radial: bool, d: usize, order: usize) -> Result<Vec<Option<Vec<f64>>>> {
    if radial {
        return Ok(vec![None]);
    }
    Ok(sphere_rule(d, order)?.into_iter().map(|(u, _)| Some(u)).collect())
}

/// `sup_r max_u g(u, r)` over a logarithmic radial grid and the sphere nodes,
/// followed by one refinement pass around the argmax.
fn grid_sup<G>(radial: bool, d: usize, grid: &MetricGrid, g: G) -> Result<(f64, GridReport)>
where
    G: Fn(Option<&[f64]>, f64) -> f64 + Sync,
{
    if grid.radii < 2 || !(grid.r_min > 0.0) || !(grid.r_max > grid.r_min) {
        return Err(Error::Range("metric grid needs at least two radii in an increasing positive range".into()));
    }
    let dirs = directions(radial, d, grid.sphere_order)?;
    let ln_lo = grid.r_min.ln();
    let step = (grid.r_max.ln() - ln_lo) / (grid.radii - 1) as f64;
    let radii: Vec<f64> = (0..grid.radii).map(|i| (ln_lo + step * i as f64).exp()).collect();
    // per direction: (best value, radial index)
    let per_dir: Vec<(f64, usize)> = dirs
        .par_iter()
        .map(|u| {
            let mut best = (f64::NEG_INFINITY, 0);
            for (i, &r) in radii.iter().enumerate() {
                let v = g(u.as_deref(), r);
                if v > best.0 {
                    best = (v, i);
                }
            }
            best
        })
        .collect();
    let (mut di, mut best) = (0, (f64::NEG_INFINITY, 0));
    for (j, b) in per_dir.iter().enumerate() {
        if b.0 > best.0 {
            best = *b;
            di = j;
        }
    }
    let mut sup = best.0;
    let mut argmax = radii[best.1];
    let lo = radii[best.1.saturating_sub(1)];
    let hi = radii[(best.1 + 1).min(radii.len() - 1)];
    let u = dirs[di].as_deref();
    // golden-section on ln r within the bracketing cells
    let invphi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut x1 = b - invphi * (b - a);
    let mut x2 = a + invphi * (b - a);
    let (mut f1, mut f2) = (g(u, x1.exp()), g(u, x2.exp()));
    for _ in 0..grid.refine {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = g(u, x1.exp());
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = g(u, x2.exp());
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f > sup {
                sup = f;
                argmax = x.exp();
            }
        }
    }
    Ok((
        sup.max(0.0),
        GridReport {
            radial_nodes: grid.radii,
            angular_nodes: dirs.len(),
            refinement_depth: usize::from(grid.refine > 0),
            argmax_r: argmax,
            panels: 0,
        },
    ))
}

/// `d_inf(mu, nu) = sup |phi - psi|`.
pub fn d_inf(phi: &CharFn, psi: &CharFn, grid: &MetricGrid) -> Result<MetricResult> {
    check_pair(phi, psi)?;
    let radial = phi.is_radial() && psi.is_radial();
    let (v, rep) = grid_sup(radial, phi.dim(), grid, |u, r| (phi.ray_m1(u, r) - psi.ray_m1(u, r)).norm())?;
    Ok(MetricResult::sup(v, rep))
}

/// `sup |phi|` over the grid.
pub fn sup_modulus(phi: &CharFn, grid: &MetricGrid) -> Result<f64> {
    Ok(grid_sup(phi.is_radial(), phi.dim(), grid, |u, r| phi.ray_eval(u, r).norm())?.0)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::Range(format!(
            "beta = {beta} outside (0, 2): for beta >= 2 the class with a finite K^beta seminorm reduces to the constant 1"
        )));
    }
    Ok(())
}

/// `d_beta(mu, nu) = sup |phi - psi| / |xi|^beta` for `0 < beta < 2`.
pub fn d_beta(phi: &CharFn, psi: &CharFn, beta: f64, grid: &MetricGrid) -> Result<MetricResult> {
    check_beta(beta)?;
    check_pair(phi, psi)?;
    let radial = phi.is_radial() && psi.is_radial();
    let (v, rep) =
        grid_sup(radial, phi.dim(), grid, |u, r| (phi.ray_m1(u, r) - psi.ray_m1(u, r)).norm() / r.powf(beta))?;
    Ok(MetricResult::sup(v, rep))
}

/// `sup |Delta_xi phi(0)| / |xi|^beta`.
pub fn kbeta_seminorm(phi: &CharFn, beta: f64, grid: &MetricGrid) -> Result<f64> {
    Ok(difference_sup(phi, 1, beta, grid)?.value)
}

/// `sup |Delta_xi^k phi(0)| / |xi|^beta` (bounded by `2^{k-beta} M(beta)` for
/// measures with a finite order-`beta` moment).
pub fn difference_sup(phi: &CharFn, k: usize, beta: f64, grid: &MetricGrid) -> Result<MetricResult> {
    if !(beta > 0.0) {
        return Err(Error::Range(format!("beta must be positive, got {beta}")));
    }
    if k == 1 {
        check_beta(beta)?;
    }
    let (v, rep) = grid_sup(phi.is_radial(), phi.dim(), grid, |u, r| phi.ray_difference(u, r, k).norm() / r.powf(beta))?;
    Ok(MetricResult::sup(v, rep))
}

/// `||phi - psi||_{alpha,k} = int |Delta_xi^k (phi - psi)(0)| / |xi|^{d+alpha} dxi`.
pub fn seminorm_alpha_k(phi: &CharFn, psi: &CharFn, alpha: f64, k: usize, spec: &QuadratureSpec) -> Result<MetricResult> {
    seminorm_impl(phi, psi, alpha, k, Functional::Abs, spec)
}

/// `||Re phi - Re psi||_{alpha,k}`.
pub fn seminorm_real_part(phi: &CharFn, psi: &CharFn, alpha: f64, k: usize, spec: &QuadratureSpec) -> Result<MetricResult> {
    seminorm_impl(phi, psi, alpha, k, Functional::AbsReal, spec)
}

fn seminorm_impl(
    phi: &CharFn,
    psi: &CharFn,
    alpha: f64,
    k: usize,
    fun: Functional,
    spec: &QuadratureSpec,
) -> Result<MetricResult> {
    check_pair(phi, psi)?;
    let ray = DifferenceRay::new(phi, Some(psi), k, spec.tail_mode)?;
    let est = integrate_rays(&ray, alpha, fun, spec)?;
    Ok(MetricResult::integral(est.value.re.max(0.0), est.error, est.diagnostics.panels, est.diagnostics.directions))
}

/// `rho_alpha(mu, nu) = int |phi - psi| / |xi|^{d+alpha} dxi` for `0 < alpha < 1`.
pub fn rho_alpha(phi: &CharFn, psi: &CharFn, alpha: f64, spec: &QuadratureSpec) -> Result<MetricResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Range(format!("rho_alpha needs 0 < alpha < 1, got {alpha}")));
    }
    seminorm_alpha_k(phi, psi, alpha, 1, spec)
}

/// The four composite metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum CompositeKind {
    /// `||phi - psi||_inf + ||phi - psi||_{alpha,k}`
    D,
    /// `d_beta(phi, psi) + ||phi - psi||_{alpha,k}`
    F,
    /// `||phi - psi||_inf + ||Re phi - Re psi||_{alpha,k}`
    G,
    /// `d_beta(phi, psi) + ||Re phi - Re psi||_{alpha,k}`
    H,
}

/// Composite metric; both components are reported separately.
///
/// For `F` and `H` the range `0 < beta <= min(alpha, 1)` is enforced; `H`
/// with `alpha = k` needs odd `k`.
#[allow(clippy::too_many_arguments)]
pub fn composite_metric(
    kind: CompositeKind,
    phi: &CharFn,
    psi: &CharFn,
    alpha: f64,
    beta: f64,
    k: usize,
    spec: &QuadratureSpec,
    grid: &MetricGrid,
) -> Result<MetricResult> {
    if !(alpha > 0.0) {
        return Err(Error::Range(format!("alpha must be positive, got {alpha}")));
    }
    if matches!(kind, CompositeKind::F | CompositeKind::H) && !(beta > 0.0 && beta <= alpha.min(1.0)) {
        return Err(Error::Range(format!("{kind:?} needs 0 < beta <= min(alpha, 1); got beta = {beta}, alpha = {alpha}")));
    }
    if kind == CompositeKind::H && alpha == k as f64 && k % 2 == 0 {
        return Err(Error::Range(format!("H with alpha = k needs odd k, got k = {k}")));
    }
    let sup = match kind {
        CompositeKind::D | CompositeKind::G => d_inf(phi, psi, grid)?,
        CompositeKind::F | CompositeKind::H => d_beta(phi, psi, beta, grid)?,
    };
    let integral = match kind {
        CompositeKind::D | CompositeKind::F => seminorm_alpha_k(phi, psi, alpha, k, spec)?,
        CompositeKind::G | CompositeKind::H => seminorm_real_part(phi, psi, alpha, k, spec)?,
    };
    let mut report = sup.grid_report;
    report.panels = integral.grid_report.panels;
    Ok(MetricResult {
        value: sup.value + integral.value,
        sup_component: sup.value,
        integral_component: integral.value,
        error_estimate: integral.error_estimate,
        grid_report: report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Finite,
    DivergenceSuspected,
}

/// Outcome of [`membership`]. The classification is numerical evidence,
/// not a proof.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub classification: Classification,
    /// `int |Delta^k phi(0)| / |xi|^{d+alpha}` when it was computed.
    pub integral_value: Option<f64>,
    /// Least-squares log-log slope of the mean `|Delta^k phi(0)|` near the origin.
    pub slope: f64,
    /// Same slope for `1 - Re phi` (only informative for `alpha < 2`).
    pub real_part_slope: Option<f64>,
    pub tail_contribution: f64,
    /// `|A(k, alpha, d)|`: the moment is at most this times the integral.
    pub bound_constant: Option<f64>,
    /// The moment computed by the engine with the same `k`, when available.
    pub moment: Option<f64>,
    pub reasons: Vec<String>,
}

/// Slope margin before a near-origin exponent is considered too small.
pub const SLOPE_MARGIN: f64 = 0.05;

fn mean_near_origin<F>(radial: bool, d: usize, order: usize, r_s: f64, f: F) -> Result<f64>
where
    F: Fn(Option<&[f64]>, f64) -> f64 + Sync,
{
    // least squares over the 8 smallest of 12 dyadic panels below r_s
    let dirs = directions(radial, d, order.min(16))?;
    let pts: Vec<(f64, f64)> = (4..12)
        .filter_map(|j| {
            let r = 0.75 * r_s * 0.5f64.powi(j);
            let m: f64 = dirs.iter().map(|u| f(u.as_deref(), r)).sum::<f64>() / dirs.len() as f64;
            (m > 0.0 && m.is_finite()).then(|| (r.ln(), m.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    Ok(num / den)
}

/// Classify whether `int |Delta_xi^k phi(0)| / |xi|^{d+alpha} dxi` is finite,
/// which for admissible `(k, alpha)` is necessary for `mu` to have a finite
/// order-`alpha` moment.
///
/// Finiteness of that integral alone does not imply the moment exists when
/// `k >= 2` (the Cauchy law has a finite `k = 2`, `alpha = 1.5` integral).
/// The classifier therefore also inspects `1 - Re phi`, whose integral is
/// sign-definite and decides membership exactly for `alpha < 2`, and checks
/// that the signed moment formula returns a nonnegative value.
pub fn membership(phi: &CharFn, alpha: f64, k: usize, spec: &QuadratureSpec) -> Result<MembershipReport> {
    if !(alpha > 0.0) {
        return Err(Error::Range(format!("alpha must be positive, got {alpha}")));
    }
    let d = phi.dim();
    let mut reasons = Vec::new();
    let mut divergent = false;
    let r_s = spec.r_split.unwrap_or_else(|| phi.scale_hint());
    let ray = DifferenceRay::new(phi, None, k, spec.tail_mode)?;
    let slope = mean_near_origin(ray.radial(), d, spec.sphere_order, r_s, |u, r| ray.value(u, r).norm())?;
    if slope < alpha - SLOPE_MARGIN {
        divergent = true;
        reasons.push(format!("|Delta^k phi| ~ r^{slope:.3} near the origin, needs exponent > {alpha}"));
    }
    let (integral_value, tail_contribution) = match integrate_rays(&ray, alpha, Functional::Abs, spec) {
        Ok(est) => (Some(est.value.re), est.diagnostics.tail_contribution),
        Err(e @ (Error::DivergenceSuspected(_) | Error::NonConvergence(_))) => {
            divergent = true;
            reasons.push(format!("difference integral did not stabilize: {e}"));
            (None, 0.0)
        }
        Err(e) => return Err(e),
    };
    let mut real_part_slope = None;
    if alpha < 2.0 {
        let s = mean_near_origin(phi.is_radial(), d, spec.sphere_order, r_s, |u, r| -phi.ray_m1(u, r).re)?;
        real_part_slope = Some(s);
        if s < alpha - SLOPE_MARGIN {
            divergent = true;
            reasons.push(format!("1 - Re phi ~ r^{s:.3} near the origin, needs exponent > {alpha}"));
        }
    }
    let bound_constant = constant_a(k, alpha, d).ok().map(f64::abs);
    let mut moment = None;
    let formula = if k % 2 == 1 { Formula::M13 } else { Formula::M12 };
    if !divergent && bound_constant.is_some() {
        match moment_with(phi, alpha, k, formula, spec) {
            Ok(m) => {
                moment = Some(m.value);
                if let (Some(c), Some(i)) = (bound_constant, integral_value) {
                    if m.value > c * i * (1.0 + 1e-6) + m.error_estimate {
                        reasons.push(format!("moment {:.6e} exceeds |A| x integral {:.6e}", m.value, c * i));
                    }
                }
            }
            Err(Error::DivergenceSuspected(msg)) => {
                divergent = true;
                reasons.push(msg);
            }
            Err(_) => {}
        }
    }
    Ok(MembershipReport {
        classification: if divergent { Classification::DivergenceSuspected } else { Classification::Finite },
        integral_value: if divergent { None } else { integral_value },
        slope,
        real_part_slope,
        tail_contribution,
        bound_constant,
        moment,
        reasons,
    })
}

/// `Delta_xi (d^sigma phi)(0)` along rays.
struct DerivativeRay<'a> {
    phi: &'a CharFn,
    sigma: &'a [usize],
    at_zero: Complex64,
}

impl RayFunction for DerivativeRay<'_> {
    fn dim(&self) -> usize {
        self.phi.dim()
    }
    fn radial(&self) -> bool {
        false
    }
    fn value(&self, dir: Option<&[f64]>, r: f64) -> Complex64 {
        let u = dir.expect("derivative rays are never radial");
        let xi: Vec<f64> = u.iter().map(|c| c * r).collect();
        self.phi.derivative(self.sigma, &xi).unwrap_or_default() - self.at_zero
    }
    fn constant(&self) -> Complex64 {
        -self.at_zero
    }
    fn decaying(&self, dir: Option<&[f64]>, r: f64) -> Complex64 {
        if self.phi.atoms().is_some() {
            return Complex64::default();
        }
        self.value(dir, r) + self.at_zero
    }
    fn has_decaying(&self) -> bool {
        self.phi.atoms().is_none()
    }
    fn spectrum(&self, dir: Option<&[f64]>) -> Vec<(f64, Complex64)> {
        let (Some(mu), Some(u)) = (self.phi.atoms(), dir) else {
            return Vec::new();
        };
        mu.iter()
            .map(|(x, w)| {
                let mut a = Complex64::new(w, 0.0);
                for (&n, &xc) in self.sigma.iter().zip(x) {
                    a *= Complex64::new(0.0, -xc).powi(n as i32);
                }
                (u.iter().zip(x).map(|(p, q)| p * q).sum(), a)
            })
            .collect()
    }
    fn opaque(&self) -> bool {
        self.phi.atoms().is_none() && !self.phi.decays()
    }
    fn envelope(&self, r: f64) -> f64 {
        // polynomial factors from differentiation are absorbed by a generous margin
        let order: usize = self.sigma.iter().sum();
        (1.0 + r).powi(order as i32) * self.phi.envelope(r)
    }
    fn scale(&self) -> f64 {
        self.phi.scale_hint()
    }
}

/// `int |Delta_xi (d^sigma phi)(0)| / |xi|^{d+gamma} dxi` for `0 < gamma < 1`.
pub fn derivative_seminorm(phi: &CharFn, sigma: &[usize], gamma: f64, spec: &QuadratureSpec) -> Result<MetricResult> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Range(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if sigma.len() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), got: sigma.len() });
    }
    if phi.dim() > 3 {
        return Err(Error::UnsupportedDimension(phi.dim()));
    }
    let zero = vec![0.0; phi.dim()];
    let at_zero = phi
        .derivative(sigma, &zero)
        .ok_or_else(|| Error::MissingOracle(format!("no analytic derivative for {}", phi.describe())))?;
    if sigma.iter().all(|s| *s == 0) {
        let one = CharFn::one(phi.dim())?;
        return seminorm_alpha_k(phi, &one, gamma, 1, spec);
    }
    let ray = DerivativeRay { phi, sigma, at_zero };
    let est = integrate_rays(&ray, gamma, Functional::Abs, spec)?;
    Ok(MetricResult::integral(est.value.re, est.error, est.diagnostics.panels, est.diagnostics.directions))
}

/// All multi-indices of total order `m` in `d` variables.
pub fn multi_indices(d: usize, m: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![m]];
    }
    let mut out = Vec::new();
    for first in (0..=m).rev() {
        for mut rest in multi_indices(d - 1, m - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `Delta_xi^k phi(0)` written out with the binomial sum; exposed for the
/// metric identities that need the plain (uncompensated) form.
pub fn plain_difference(phi: &CharFn, xi: &[f64], k: usize) -> Complex64 {
    let c = difference_weights(k);
    let mut s = ComplexSum::new();
    for (m, cm) in c.iter().enumerate() {
        let y: Vec<f64> = xi.iter().map(|x| m as f64 * x).collect();
        s.add(phi.eval(&y) * *cm);
    }
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_rho_closed_form() {
        let spec = QuadratureSpec::default();
        let one = CharFn::one(1).unwrap();
        for &t in &[0.5, 2.0] {
            for &a in &[0.3, 0.7] {
                let g = CharFn::gaussian(t, 1).unwrap();
                let r = rho_alpha(&g, &one, a, &spec).unwrap();
                let want = 2.0 * t.powf(a / 2.0) * gamma(1.0 - a / 2.0).unwrap() / a;
                assert_relative_eq!(r.value, want, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn point_mass_rho_against_direct_integral() {
        // rho_alpha(delta_a, delta_b) = 2 |a-b|^alpha int_0^inf |2 sin(u/2)| u^{-1-alpha} du
        let spec = QuadratureSpec::default();
        let a = CharFn::point_mass(&[0.4]).unwrap();
        let b = CharFn::point_mass(&[-0.6]).unwrap();
        let r = rho_alpha(&a, &b, 0.5, &spec).unwrap();
        // int_0^inf |2 sin(u/2)| u^{-1.5} du = (8/pi) sqrt(2 pi) sum_j 4^{-j-1} zeta(3/2 + 2j), via mpmath
        let c = 4.753_898_914_890_523_3;
        assert_relative_eq!(r.value, 2.0 * c, max_relative = 1e-6);
    }

    #[test]
    fn d_inf_and_beta() {
        let grid = MetricGrid::default();
        let one = CharFn::one(1).unwrap();
        let g = CharFn::gaussian(1.0, 1).unwrap();
        assert!(d_inf(&g, &one, &grid).unwrap().value >= 0.999);
        assert_eq!(d_inf(&g, &g, &grid).unwrap().value, 0.0);
        // max_r (1 - e^{-r^2}) / r at r ~ 1.1209
        let db = d_beta(&g, &one, 1.0, &grid).unwrap().value;
        assert_relative_eq!(db, 0.638_172_686_338_951_5, max_relative = 1e-6);
        assert!(d_beta(&g, &one, 2.0, &grid).is_err());
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(multi_indices(3, 1).len(), 3);
    }
}
