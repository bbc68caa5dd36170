//! Absolute moments from characteristic functions:
//!
//! `int |v|^alpha dmu(v) = A(k, alpha, d) int Delta_xi^k phi(0) / |xi|^{d+alpha} dxi`.
//!
//! Every integral is reduced to rays `xi = r u`. Along a ray the integral
//! `int_0^inf r^{-1-alpha} D(r) dr` is split into three regions:
//!
//! * `(0, r_s]`: dyadic panels towards the origin, summed with a geometric
//!   remainder estimate. `D` is evaluated in a cancellation-free form.
//! * `[r_s, R]`: globally adaptive Gauss–Kronrod.
//! * `[R, inf)`: the constant part of `D` is integrated exactly; decaying
//!   parts by outward dyadic panels; oscillatory parts of discrete measures
//!   by per-frequency integrals with an asymptotic expansion.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::CharFn;
use crate::error::{Error, Result};
use crate::numeric::{difference_weights, ComplexSum, MAX_K};
use crate::quadrature::{adaptive, gauss_legendre, sum_panel_series, Estimate, SeriesStatus};
use crate::specfun::{constant_a, sphere_area};

/// How the integral beyond the cutoff `R` is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    /// Pick per component: decaying functions use `AnalyticBound`, discrete
    /// measures use `OscillatoryIbp`.
    Auto,
    /// Exact integral of the constant term plus extrapolated outward panels
    /// for the decaying remainder.
    AnalyticBound,
    /// Exact constant term plus per-frequency integrals
    /// `int_R^inf r^{-1-alpha} e^{-i w r} dr` by integration by parts.
    OscillatoryIbp,
}

/// Quadrature controls shared by the moment and metric integrators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Cap on the number of panels of each adaptive or dyadic sweep.
    pub max_panels: usize,
    pub tail_mode: TailMode,
    /// Nodes per angular dimension of the sphere rule (non-radial functions).
    pub sphere_order: usize,
    /// Breakpoint between the near-origin and middle regions. `None` picks
    /// the characteristic function's own scale.
    pub r_split: Option<f64>,
    /// Let discrete measures short-circuit to the exact atom sum.
    pub discrete_exact: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_panels: 2000,
            tail_mode: TailMode::Auto,
            sphere_order: 64,
            r_split: None,
            discrete_exact: false,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::Range("quadrature tolerances must be positive".into()));
        }
        if self.max_panels < 16 {
            return Err(Error::Range(format!("max_panels must be at least 16, got {}", self.max_panels)));
        }
        if self.sphere_order < 2 {
            return Err(Error::Range("sphere_order must be at least 2".into()));
        }
        if let Some(r) = self.r_split {
            if !(r > 0.0) {
                return Err(Error::Range("r_split must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Which moment formula produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    /// Complex iterated difference over all of R^d.
    M12,
    /// Real part of the iterated difference (odd `k`).
    M13,
    /// Limit `alpha -> 2n-` of M13.
    EvenLimit,
    AnalyticOracle,
    DiscreteExact,
}

/// Quadrature bookkeeping attached to every integral.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Diagnostics {
    pub panels: usize,
    pub directions: usize,
    /// Contribution of `(0, r_s]`.
    pub near_origin: f64,
    /// Contribution of `[R, inf)`.
    pub tail_contribution: f64,
    /// Last ratio of consecutive near-origin panel sums.
    pub near_ratio: f64,
    pub r_split: f64,
    pub cutoff: f64,
    /// Imaginary part of the assembled integral (zero up to rounding for measures).
    pub imag_part: f64,
}

/// Result of a difference integral.
#[derive(Debug, Clone, Copy)]
pub struct IntegralEstimate {
    pub value: Complex64,
    pub error: f64,
    pub diagnostics: Diagnostics,
}

/// An absolute moment with its provenance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentResult {
    pub value: f64,
    pub error_estimate: f64,
    pub formula: Formula,
    pub k_used: usize,
    pub diagnostics: Diagnostics,
}

/// The quantity integrated against `r^{-1-alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Complex,
    Real,
    Abs,
    AbsReal,
}

impl Functional {
    #[inline]
    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Functional::Complex => z,
            Functional::Real => Complex64::new(z.re, 0.0),
            Functional::Abs => Complex64::new(z.norm(), 0.0),
            Functional::AbsReal => Complex64::new(z.re.abs(), 0.0),
        }
    }

    fn is_abs(self) -> bool {
        matches!(self, Functional::Abs | Functional::AbsReal)
    }
}

/// A function `D(r u)` integrated along rays. Implementations must satisfy
/// `D(r) = constant() + decaying(r) + sum_(w, a) in spectrum a e^{-i w r}`.
pub trait RayFunction: Sync {
    fn dim(&self) -> usize;
    fn radial(&self) -> bool;
    /// `D(r u)` in a form accurate for small `r`.
    fn value(&self, dir: Option<&[f64]>, r: f64) -> Complex64;
    /// The limit of the non-oscillating part of `D` at infinity.
    fn constant(&self) -> Complex64;
    /// The part of `D` that decays (or is opaque) at infinity.
    fn decaying(&self, dir: Option<&[f64]>, r: f64) -> Complex64;
    fn has_decaying(&self) -> bool;
    /// Oscillatory part `sum a e^{-i w r}` as `(w, a)` pairs.
    fn spectrum(&self, dir: Option<&[f64]>) -> Vec<(f64, Complex64)>;
    /// Some component neither decays nor has a known spectrum.
    fn opaque(&self) -> bool;
    /// Bound on `|decaying(r)|`, non-increasing.
    fn envelope(&self, r: f64) -> f64;
    fn scale(&self) -> f64;
}

enum Kind {
    Decaying,
    Discrete,
    Opaque,
}

fn kind(f: &CharFn, mode: TailMode) -> Kind {
    let discrete = f.atoms().is_some();
    match mode {
        TailMode::AnalyticBound => {
            if f.decays() {
                Kind::Decaying
            } else {
                Kind::Opaque
            }
        }
        _ => {
            if discrete {
                Kind::Discrete
            } else if f.decays() {
                Kind::Decaying
            } else {
                Kind::Opaque
            }
        }
    }
}

/// `Delta^k (phi - psi)(0)` along rays (`psi` absent means `psi = 0`, in
/// which case the `m = 0` term contributes the constant `(-1)^k`).
pub struct DifferenceRay<'a> {
    phi: &'a CharFn,
    psi: Option<&'a CharFn>,
    k: usize,
    weights: Vec<f64>,
    mode: TailMode,
}

impl<'a> DifferenceRay<'a> {
    pub fn new(phi: &'a CharFn, psi: Option<&'a CharFn>, k: usize, mode: TailMode) -> Result<Self> {
        if k == 0 || k > MAX_K {
            return Err(Error::Range(format!("difference order k must be in 1..={MAX_K}, got {k}")));
        }
        if let Some(p) = psi {
            if p.dim() != phi.dim() {
                return Err(Error::DimensionMismatch { expected: phi.dim(), got: p.dim() });
            }
        }
        Ok(Self { phi, psi, k, weights: difference_weights(k), mode })
    }

    fn parts(&self) -> impl Iterator<Item = (&'a CharFn, f64)> {
        std::iter::once((self.phi, 1.0)).chain(self.psi.map(|p| (p, -1.0)))
    }
}

impl RayFunction for DifferenceRay<'_> {
    fn dim(&self) -> usize {
        self.phi.dim()
    }

    fn radial(&self) -> bool {
        self.phi.is_radial() && self.psi.is_none_or(|p| p.is_radial())
    }

    fn value(&self, dir: Option<&[f64]>, r: f64) -> Complex64 {
        let a = self.phi.ray_difference(dir, r, self.k);
        match self.psi {
            Some(p) => a - p.ray_difference(dir, r, self.k),
            None => a,
        }
    }

    fn constant(&self) -> Complex64 {
        match self.psi {
            None => Complex64::new(self.weights[0], 0.0),
            Some(_) => Complex64::new(0.0, 0.0),
        }
    }

    fn decaying(&self, dir: Option<&[f64]>, r: f64) -> Complex64 {
        let mut s = ComplexSum::new();
        for (f, sign) in self.parts() {
            if matches!(kind(f, self.mode), Kind::Discrete) {
                continue;
            }
            for (m, cm) in self.weights.iter().enumerate().skip(1) {
                s.add(f.ray_eval(dir, m as f64 * r) * (sign * cm));
            }
        }
        s.value()
    }

    fn has_decaying(&self) -> bool {
        self.parts().any(|(f, _)| !matches!(kind(f, self.mode), Kind::Discrete))
    }

    fn spectrum(&self, dir: Option<&[f64]>) -> Vec<(f64, Complex64)> {
        let mut out = Vec::new();
        for (f, sign) in self.parts() {
            if !matches!(kind(f, self.mode), Kind::Discrete) {
                continue;
            }
            if let Some(sp) = f.spectrum(dir) {
                for (m, cm) in self.weights.iter().enumerate().skip(1) {
                    for &(s, w) in &sp {
                        out.push((m as f64 * s, Complex64::new(sign * cm * w, 0.0)));
                    }
                }
            }
        }
        out
    }

    fn opaque(&self) -> bool {
        self.parts().any(|(f, _)| matches!(kind(f, self.mode), Kind::Opaque))
    }

    fn envelope(&self, r: f64) -> f64 {
        let scale: f64 = self.weights.iter().skip(1).map(|c| c.abs()).sum();
        self.parts()
            .filter(|(f, _)| !matches!(kind(f, self.mode), Kind::Discrete))
            .map(|(f, _)| scale * f.envelope(r))
            .fold(0.0, f64::max)
    }

    fn scale(&self) -> f64 {
        self.parts().map(|(f, _)| f.scale_hint()).fold(f64::INFINITY, f64::min)
    }
}

/// `int_R^inf r^{-a} e^{-i w r} dr` for `a > 1`.
pub(crate) fn oscillatory_tail(w: f64, r0: f64, a: f64, tol: f64) -> Complex64 {
    if w == 0.0 {
        return Complex64::new(r0.powf(1.0 - a) / (a - 1.0), 0.0);
    }
    if w < 0.0 {
        return oscillatory_tail(-w, r0, a, tol).conj();
    }
    const ASYMPTOTIC_START: f64 = 40.0;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lo = r0;
    let r1 = ASYMPTOTIC_START / w;
    while lo < r1 {
        let hi = (2.0 * lo).min(r1);
        let f = |r: f64| Complex64::new(0.0, -w * r).exp() * r.powf(-a);
        let est: Estimate<Complex64> = adaptive(&f, lo, hi, tol, 1e-13, 400);
        acc += est.value;
        lo = hi;
    }
    // integration by parts: J(a) = e^{-iwR} R^{-a} / (iw) - (a / (iw)) J(a + 1)
    let iw = Complex64::new(0.0, w);
    let mut term = Complex64::new(0.0, -w * lo).exp() * lo.powf(-a) / iw;
    let mut series = term;
    let mut last = term.norm();
    for n in 0..80 {
        term = -term * ((a + n as f64) / (iw * lo));
        let mag = term.norm();
        if mag > last {
            break;
        }
        series += term;
        last = mag;
        if mag <= 1e-17 * series.norm() {
            break;
        }
    }
    acc + series
}

/// Integral of `r^{-1-alpha} f(D(r))` along one ray.
#[derive(Debug, Clone, Copy)]
struct RayOutcome {
    value: Complex64,
    error: f64,
    near: Complex64,
    tail: Complex64,
    panels: usize,
    near_ratio: f64,
    r_split: f64,
    cutoff: f64,
}

fn near_panel_cap(alpha: f64, max_panels: usize) -> usize {
    // keep r^{-1-alpha} representable
    ((900.0 / (1.0 + alpha)) as usize).min(400).min(max_panels)
}

fn ray_integral<F: RayFunction + ?Sized>(
    f: &F,
    dir: Option<&[f64]>,
    alpha: f64,
    fun: Functional,
    spec: &QuadratureSpec,
) -> Result<RayOutcome> {
    let r_s = spec.r_split.unwrap_or_else(|| f.scale());
    if !(r_s > 0.0) || !r_s.is_finite() {
        return Err(Error::Domain("could not determine a finite split radius".into()));
    }
    let weight = |r: f64| r.powf(-1.0 - alpha);
    let g = |r: f64| fun.apply(f.value(dir, r)) * weight(r);
    let panel_abs = spec.abs_tol * 0.1;
    let panel_rel = spec.rel_tol * 0.1;
    let mut panels = 0usize;

    // cutoff between middle region and tail
    let spectrum = f.spectrum(dir);
    let has_osc = spectrum.iter().any(|(w, a)| *w != 0.0 && a.norm() > 0.0);
    let mut cutoff = 4.0 * r_s;
    if f.has_decaying() {
        let mut j = 2;
        while j < 10 && f.envelope(cutoff) > 0.05 {
            cutoff *= 2.0;
            j += 1;
        }
    }

    // a modulus of an oscillating function has a kink per half-period
    let mut budget = spec.max_panels;
    if has_osc && fun.is_abs() {
        let wmax = spectrum.iter().map(|(w, _)| w.abs()).fold(0.0, f64::max);
        budget = budget.max((64.0 * (wmax * (cutoff - r_s) / PI).ceil()) as usize);
    }
    let middle: Estimate<Complex64> = adaptive(&g, r_s, cutoff, panel_abs, panel_rel, budget);
    panels += middle.panels;
    if !middle.converged && middle.error > 1e3 * spec.abs_tol.max(spec.rel_tol * middle.value.norm()) {
        return Err(Error::NonConvergence(format!(
            "middle region [{r_s:.3e}, {cutoff:.3e}] error {:.3e} after {} panels",
            middle.error, middle.panels
        )));
    }
    let scale = middle.value.norm();

    // near origin: panels [r_s 2^{-j-1}, r_s 2^{-j}]
    let cap = near_panel_cap(alpha, spec.max_panels);
    let mut near_panels = 0usize;
    let near = sum_panel_series(
        |j| {
            let hi = r_s * 0.5f64.powi(j as i32);
            let est = adaptive(&g, 0.5 * hi, hi, panel_abs, panel_rel, spec.max_panels);
            near_panels += est.panels;
            est
        },
        spec.abs_tol,
        spec.rel_tol,
        scale,
        cap,
    );
    panels += near_panels;
    match near.status {
        SeriesStatus::Converged => {}
        SeriesStatus::Divergent | SeriesStatus::Exhausted => {
            return Err(Error::DivergenceSuspected(format!(
                "near-origin panels do not decay (ratio {:.4} after {} panels); the order {alpha} moment is probably infinite",
                near.ratio, near.panels
            )));
        }
    }
    let scale = scale.max(near.value.norm());

    // tail
    let (tail, tail_err, tail_panels) = if fun.is_abs() {
        abs_tail(f, dir, alpha, fun, cutoff, &spectrum, has_osc, scale, spec)?
    } else {
        signed_tail(f, dir, alpha, fun, cutoff, &spectrum, scale, spec)?
    };
    panels += tail_panels;

    let value = near.value + middle.value + tail;
    Ok(RayOutcome {
        value,
        error: near.error + middle.error + tail_err,
        near: near.value,
        tail,
        panels,
        near_ratio: near.ratio,
        r_split: r_s,
        cutoff,
    })
}

#[allow(clippy::too_many_arguments)]
fn signed_tail<F: RayFunction + ?Sized>(
    f: &F,
    dir: Option<&[f64]>,
    alpha: f64,
    fun: Functional,
    cutoff: f64,
    spectrum: &[(f64, Complex64)],
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<(Complex64, f64, usize)> {
    let mut tail = f.constant() * (cutoff.powf(-alpha) / alpha);
    let mut err = 0.0;
    let mut panels = 0;
    let tol = spec.abs_tol.max(spec.rel_tol * scale) * 0.01;
    let mut osc = ComplexSum::new();
    for &(w, a) in spectrum {
        if a.norm() == 0.0 {
            continue;
        }
        osc.add(a * oscillatory_tail(w, cutoff, 1.0 + alpha, tol));
    }
    tail += osc.value();
    if f.has_decaying() {
        let h = |r: f64| f.decaying(dir, r) * r.powf(-1.0 - alpha);
        let out = sum_panel_series(
            |j| {
                let lo = cutoff * 2f64.powi(j as i32);
                let est = adaptive(&h, lo, 2.0 * lo, spec.abs_tol * 0.1, spec.rel_tol * 0.1, spec.max_panels);
                panels += est.panels;
                est
            },
            spec.abs_tol,
            spec.rel_tol,
            scale,
            200,
        );
        if out.status != SeriesStatus::Converged {
            return Err(Error::NonConvergence(format!(
                "tail panels beyond r = {cutoff:.3e} did not settle (ratio {:.4}); the characteristic function may not decay",
                out.ratio
            )));
        }
        tail += out.value;
        err += out.error;
    }
    let tail = if fun == Functional::Real { Complex64::new(tail.re, 0.0) } else { tail };
    Ok((tail, err, panels))
}

#[allow(clippy::too_many_arguments)]
fn abs_tail<F: RayFunction + ?Sized>(
    f: &F,
    dir: Option<&[f64]>,
    alpha: f64,
    fun: Functional,
    cutoff: f64,
    spectrum: &[(f64, Complex64)],
    has_osc: bool,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<(Complex64, f64, usize)> {
    let mut panels = 0;
    let wpow = |r: f64| r.powf(-1.0 - alpha);
    if !has_osc && !f.opaque() {
        // |D| tends to |L| with L the constant plus zero-frequency terms
        let mut limit = f.constant();
        for &(_, a) in spectrum {
            limit += a;
        }
        let lim = fun.apply(limit).re;
        let h = |r: f64| Complex64::new(fun.apply(f.value(dir, r)).re - lim, 0.0) * wpow(r);
        let out = sum_panel_series(
            |j| {
                let lo = cutoff * 2f64.powi(j as i32);
                let est = adaptive(&h, lo, 2.0 * lo, spec.abs_tol * 0.1, spec.rel_tol * 0.1, spec.max_panels);
                panels += est.panels;
                est
            },
            spec.abs_tol,
            spec.rel_tol,
            scale,
            200,
        );
        if out.status != SeriesStatus::Converged {
            return Err(Error::NonConvergence(format!("tail panels beyond r = {cutoff:.3e} did not settle")));
        }
        let v = out.value.re + lim * cutoff.powf(-alpha) / alpha;
        return Ok((Complex64::new(v, 0.0), out.error, panels));
    }
    // Oscillating modulus: integrate numerically over a long window, then
    // replace the remaining integrand by its mean over the last window.
    let freqs: Vec<f64> = spectrum.iter().filter(|(w, a)| *w != 0.0 && a.norm() > 0.0).map(|(w, _)| w.abs()).collect();
    let (wmin, wmax) = freqs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &w| (lo.min(w), hi.max(w)));
    let mut end = 2.0 * cutoff;
    if wmax > 0.0 {
        let slow = 4096.0 * 2.0 * PI / wmin;
        let fast_cap = 65536.0 * 2.0 * PI / wmax;
        end = end.max(slow.min(fast_cap));
    }
    if f.has_decaying() {
        while f.envelope(end) > 1e-3 * spec.abs_tol.max(spec.rel_tol * scale) && end < 1e12 * cutoff {
            end *= 2.0;
        }
    }
    let g = |r: f64| fun.apply(f.value(dir, r)) * wpow(r);
    let mut acc = 0.0;
    let mut err = 0.0;
    let mut lo = cutoff;
    let mut windows: Vec<(f64, f64, f64)> = Vec::new(); // (lo, hi, int |D|)
    let gm = |r: f64| fun.apply(f.value(dir, r));
    while lo < end {
        let hi = (2.0 * lo).min(end);
        let est: Estimate<Complex64> = adaptive(&g, lo, hi, spec.abs_tol * 0.1, spec.rel_tol * 0.1, 20 * spec.max_panels);
        panels += est.panels;
        acc += est.value.re;
        err += est.error;
        if hi >= end / 4.0 {
            let m: Estimate<Complex64> = adaptive(&gm, lo, hi, 1e-12, 1e-9, 20 * spec.max_panels);
            windows.push((lo, hi, m.value.re));
        }
        lo = hi;
    }
    let (mean, spread) = match windows.len() {
        0 => (0.0, 0.0),
        1 => (windows[0].2 / (windows[0].1 - windows[0].0), 0.0),
        _ => {
            let n = windows.len();
            let a = windows[n - 1].2 / (windows[n - 1].1 - windows[n - 1].0);
            let b = windows[n - 2].2 / (windows[n - 2].1 - windows[n - 2].0);
            (a, (a - b).abs())
        }
    };
    let rest = end.powf(-alpha) / alpha;
    Ok((Complex64::new(acc + mean * rest, 0.0), err + spread * rest, panels))
}

/// Directions and weights of the sphere rule; the weights sum to `|S^{d-1}|`.
pub fn sphere_rule(d: usize, order: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match d {
        1 => Ok(vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]),
        2 => {
            let n = order.max(2);
            Ok((0..n)
                .map(|j| {
                    let th = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                    (vec![th.cos(), th.sin()], 2.0 * PI / n as f64)
                })
                .collect())
        }
        3 => {
            let n = order.max(2);
            let (x, w) = gauss_legendre(n);
            let na = 2 * n;
            let mut out = Vec::with_capacity(n * na);
            for (ci, wi) in x.iter().zip(&w) {
                let si = (1.0 - ci * ci).sqrt();
                for j in 0..na {
                    let ph = 2.0 * PI * (j as f64 + 0.5) / na as f64;
                    out.push((vec![si * ph.cos(), si * ph.sin(), *ci], wi * 2.0 * PI / na as f64));
                }
            }
            Ok(out)
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// `int_{R^d} f(D(xi)) / |xi|^{d+alpha} dxi` for any ray function: the
/// radial shortcut when possible, otherwise a sphere rule times rays.
pub fn integrate_rays<F: RayFunction + ?Sized>(
    f: &F,
    alpha: f64,
    fun: Functional,
    spec: &QuadratureSpec,
) -> Result<IntegralEstimate> {
    spec.validate()?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Range(format!("alpha must be positive, got {alpha}")));
    }
    let d = f.dim();
    if f.radial() {
        let area = sphere_area(d)?;
        let ray = ray_integral(f, None, alpha, fun, spec)?;
        let value = ray.value * area;
        return Ok(IntegralEstimate {
            value,
            error: ray.error * area,
            diagnostics: Diagnostics {
                panels: ray.panels,
                directions: 1,
                near_origin: ray.near.re * area,
                tail_contribution: ray.tail.re * area,
                near_ratio: ray.near_ratio,
                r_split: ray.r_split,
                cutoff: ray.cutoff,
                imag_part: value.im,
            },
        });
    }
    let rule = sphere_rule(d, spec.sphere_order)?;
    let outcomes: Vec<Result<RayOutcome>> =
        rule.par_iter().map(|(u, _)| ray_integral(f, Some(u.as_slice()), alpha, fun, spec)).collect();
    let mut value = ComplexSum::new();
    let mut near = 0.0;
    let mut tail = 0.0;
    let mut error = 0.0;
    let mut panels = 0;
    let mut near_ratio: f64 = 0.0;
    let (mut r_split, mut cutoff) = (f64::INFINITY, 0.0f64);
    for ((_, w), o) in rule.iter().zip(outcomes) {
        let o = o?;
        value.add(o.value * *w);
        near += o.near.re * w;
        tail += o.tail.re * w;
        error += o.error * w;
        panels += o.panels;
        near_ratio = near_ratio.max(o.near_ratio);
        r_split = r_split.min(o.r_split);
        cutoff = cutoff.max(o.cutoff);
    }
    let value = value.value();
    Ok(IntegralEstimate {
        value,
        error,
        diagnostics: Diagnostics {
            panels,
            directions: rule.len(),
            near_origin: near,
            tail_contribution: tail,
            near_ratio,
            r_split,
            cutoff,
            imag_part: value.im,
        },
    })
}

/// Choose the difference order and formula for an order-`alpha` moment.
///
/// Non-integer `alpha` gets the smallest odd `k` with `alpha < k + 1` and
/// M13; odd integers use `k = alpha` with M13; even integers need the limit.
/// With `prefer_real = false`, non-integer `alpha` uses M12 with
/// `k = floor(alpha) + 1` unless it sits within `1e-6` of an integer.
pub fn select_k(alpha: f64, prefer_real: bool) -> Result<(usize, Formula)> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Range(format!("alpha must be positive, got {alpha}")));
    }
    let nearest = alpha.round();
    let is_int = (alpha - nearest).abs() < 1e-12;
    let k = if is_int {
        let n = nearest as usize;
        if n % 2 == 0 {
            return Ok((n + 1, Formula::EvenLimit));
        }
        n
    } else {
        if !prefer_real && (alpha - nearest).abs() >= 1e-6 {
            let k = alpha.floor() as usize + 1;
            if k > MAX_K {
                return Err(Error::Range(format!("alpha = {alpha} needs k = {k} > {MAX_K}")));
            }
            return Ok((k, Formula::M12));
        }
        let m = alpha.floor() as usize; // alpha < k + 1 with k odd
        if m % 2 == 1 {
            m
        } else {
            m + 1
        }
    };
    let k = k.max(1);
    if k > MAX_K {
        return Err(Error::Range(format!("alpha = {alpha} needs k = {k} > {MAX_K}")));
    }
    Ok((k, Formula::M13))
}

/// The difference integral of M12 or M13 over R^d.
pub fn difference_integral(
    phi: &CharFn,
    k: usize,
    alpha: f64,
    formula: Formula,
    spec: &QuadratureSpec,
) -> Result<IntegralEstimate> {
    let ray = DifferenceRay::new(phi, None, k, spec.tail_mode)?;
    let fun = match formula {
        Formula::M12 => Functional::Complex,
        Formula::M13 => Functional::Real,
        other => return Err(Error::Domain(format!("{other:?} is not a quadrature formula"))),
    };
    integrate_rays(&ray, alpha, fun, spec)
}

/// One-dimensional `int_0^inf r^{-1-alpha} Delta_r^k F(0) dr` for a radial
/// profile `F`; the d-dimensional integral is `|S^{d-1}|` times this.
pub fn radial_difference_integral(phi: &CharFn, k: usize, alpha: f64, spec: &QuadratureSpec) -> Result<Estimate<f64>> {
    if !phi.is_radial() {
        return Err(Error::Domain("radial_difference_integral needs a radial characteristic function".into()));
    }
    let ray = DifferenceRay::new(phi, None, k, spec.tail_mode)?;
    spec.validate()?;
    let out = ray_integral(&ray, None, alpha, Functional::Real, spec)?;
    Ok(Estimate { value: out.value.re, error: out.error, panels: out.panels, converged: true })
}

/// The M12 integral `int_{R^d} Delta_xi^k phi(0) / |xi|^{d+alpha} dxi` over
/// the full space via the sphere rule (d <= 3).
pub fn fulldim_difference_integral(phi: &CharFn, k: usize, alpha: f64, spec: &QuadratureSpec) -> Result<IntegralEstimate> {
    let d = phi.dim();
    if d > 3 {
        return Err(Error::UnsupportedDimension(d));
    }
    let ray = DifferenceRay::new(phi, None, k, spec.tail_mode)?;
    // force the non-radial path even for radial functions
    struct Forced<'a>(&'a DifferenceRay<'a>);
    impl RayFunction for Forced<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn radial(&self) -> bool {
            false
        }
        fn value(&self, dir: Option<&[f64]>, r: f64) -> Complex64 {
            self.0.value(dir, r)
        }
        fn constant(&self) -> Complex64 {
            self.0.constant()
        }
        fn decaying(&self, dir: Option<&[f64]>, r: f64) -> Complex64 {
            self.0.decaying(dir, r)
        }
        fn has_decaying(&self) -> bool {
            self.0.has_decaying()
        }
        fn spectrum(&self, dir: Option<&[f64]>) -> Vec<(f64, Complex64)> {
            self.0.spectrum(dir)
        }
        fn opaque(&self) -> bool {
            self.0.opaque()
        }
        fn envelope(&self, r: f64) -> f64 {
            self.0.envelope(r)
        }
        fn scale(&self) -> f64 {
            self.0.scale()
        }
    }
    integrate_rays(&Forced(&ray), alpha, Functional::Complex, spec)
}

/// Moment with an explicitly chosen `k` and formula.
pub fn moment_with(phi: &CharFn, alpha: f64, k: usize, formula: Formula, spec: &QuadratureSpec) -> Result<MomentResult> {
    match formula {
        Formula::M12 => {
            if alpha >= k as f64 {
                return Err(Error::Range(format!("M12 needs alpha < k (alpha = {alpha}, k = {k})")));
            }
            let frac = (alpha - alpha.round()).abs();
            if frac < 1e-6 {
                return Err(Error::Domain(format!(
                    "alpha = {alpha} is within 1e-6 of an integer below k = {k}: S(k, alpha) vanishes there; use M13 with odd k"
                )));
            }
        }
        Formula::M13 => {
            if k % 2 == 0 {
                return Err(Error::Domain(format!("M13 needs odd k, got {k}")));
            }
            let is_k = (alpha - k as f64).abs() < 1e-12;
            let frac = (alpha - alpha.round()).abs();
            if !is_k && (frac < 1e-12 || alpha >= k as f64 + 1.0) {
                return Err(Error::Domain(format!(
                    "M13 needs non-integer alpha < k + 1 or alpha = k (alpha = {alpha}, k = {k})"
                )));
            }
        }
        Formula::EvenLimit => {
            let n = (alpha / 2.0).round() as usize;
            return even_order_moment(phi, 2 * n, spec);
        }
        Formula::AnalyticOracle => {
            let v = phi
                .analytic_moment(alpha)
                .ok_or_else(|| Error::MissingOracle(format!("no closed form for {}", phi.describe())))??;
            return Ok(MomentResult {
                value: v,
                error_estimate: 0.0,
                formula,
                k_used: 0,
                diagnostics: Diagnostics::default(),
            });
        }
        Formula::DiscreteExact => {
            let mu = phi
                .atoms()
                .ok_or_else(|| Error::MissingOracle(format!("{} is not a discrete measure", phi.describe())))?;
            return Ok(MomentResult {
                value: mu.moment(alpha),
                error_estimate: 0.0,
                formula,
                k_used: 0,
                diagnostics: Diagnostics::default(),
            });
        }
    }
    let d = phi.dim();
    if !phi.is_radial() && d > 3 {
        return Err(Error::UnsupportedDimension(d));
    }
    let a = constant_a(k, alpha, d)?;
    let integral = difference_integral(phi, k, alpha, formula, spec)?;
    let value = a * integral.value.re;
    let error = (a * integral.error).abs() + 4.0 * f64::EPSILON * value.abs();
    let slack = 10.0 * error + spec.abs_tol.max(spec.rel_tol * value.abs());
    if value < -slack {
        return Err(Error::DivergenceSuspected(format!(
            "formula {formula:?} with k = {k} returned the negative value {value:.6e}; the integral exists but \
             the measure has no moment of order {alpha}"
        )));
    }
    Ok(MomentResult {
        value: value.max(0.0),
        error_estimate: error,
        formula,
        k_used: k,
        diagnostics: integral.diagnostics,
    })
}

/// `int |v|^alpha dmu(v)` from the characteristic function.
///
/// Even-integer orders are routed to [`even_order_moment`]. With
/// `spec.discrete_exact`, discrete measures return the exact atom sum.
pub fn absolute_moment(phi: &CharFn, alpha: f64, spec: &QuadratureSpec) -> Result<MomentResult> {
    spec.validate()?;
    if spec.discrete_exact && phi.atoms().is_some() {
        return moment_with(phi, alpha, 0, Formula::DiscreteExact, spec);
    }
    let (k, formula) = select_k(alpha, true)?;
    moment_with(phi, alpha, k, formula, spec)
}

/// Sequence offsets `eps_j = 0.1 * 2^{-j}`, `j = 0..=6`, used by the even-order limit.
pub const EVEN_LIMIT_EPS: [f64; 7] = [0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625];

/// Order-`2n` moment as `lim_{alpha -> 2n-}` of M13 with `k = 2n + 1`,
/// Richardson-extrapolated over the last three offsets.
pub fn even_order_moment(phi: &CharFn, order: usize, spec: &QuadratureSpec) -> Result<MomentResult> {
    if order == 0 {
        return Ok(MomentResult {
            value: 1.0,
            error_estimate: 0.0,
            formula: Formula::EvenLimit,
            k_used: 0,
            diagnostics: Diagnostics::default(),
        });
    }
    if order % 2 != 0 {
        return Err(Error::Domain(format!("even_order_moment needs an even order, got {order}")));
    }
    let k = order + 1;
    if k > MAX_K {
        return Err(Error::Range(format!("order {order} needs k = {k} > {MAX_K}")));
    }
    let mut vals = Vec::with_capacity(EVEN_LIMIT_EPS.len());
    let mut last = None;
    for eps in EVEN_LIMIT_EPS {
        let r = moment_with(phi, order as f64 - eps, k, Formula::M13, spec)?;
        vals.push(r.value);
        last = Some(r);
    }
    let n = vals.len();
    let (m4, m5, m6) = (vals[n - 3], vals[n - 2], vals[n - 1]);
    let r1a = 2.0 * m5 - m4;
    let r1b = 2.0 * m6 - m5;
    let r2 = (4.0 * r1b - r1a) / 3.0;
    if !r2.is_finite() {
        return Err(Error::NonConvergence("even-order extrapolation produced a non-finite value".into()));
    }
    let last = last.expect("non-empty offset list");
    Ok(MomentResult {
        value: r2.max(0.0),
        error_estimate: (r2 - r1b).abs() + last.error_estimate,
        formula: Formula::EvenLimit,
        k_used: k,
        diagnostics: last.diagnostics,
    })
}
