//! Characteristic functions `phi(xi) = int e^{-i xi.v} dmu(v)` with the
//! metadata the quadrature engine needs: radial profile, realness, analytic
//! derivatives and moment oracles.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::closed_forms;
use crate::error::{Error, Result};
use crate::measure::{norm, DiscreteMeasure};
use crate::numeric::{difference_weights, ComplexSum, MAX_K};

pub type EvalFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;
pub type ProfileFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
pub type DerivativeFn = Arc<dyn Fn(&[usize], &[f64]) -> Complex64 + Send + Sync>;
pub type MomentFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Largest atom count for which the product of two discrete characteristic
/// functions is folded into the discrete law of the sum.
const FOLD_LIMIT: usize = 200_000;

/// Optional metadata for [`CharFn::custom`].
#[derive(Clone, Default)]
pub struct CustomOptions {
    /// Declared real-valuedness (the measure is symmetric).
    pub is_real: bool,
    /// Radial profile `F(r)`; when present the function is treated as radial.
    pub profile: Option<ProfileFn>,
    pub derivative: Option<DerivativeFn>,
    pub analytic_moment: Option<MomentFn>,
    /// Whether `|phi(xi)| -> 0` as `|xi| -> inf`; controls the tail scheme.
    pub decays: bool,
    /// Radius at which `phi` visibly departs from 1; defaults to 1.
    pub scale_hint: Option<f64>,
}

#[derive(Clone)]
enum Repr {
    Stable { p: f64, t: f64 },
    Linnik { p: f64, beta: f64 },
    Schoenberg { nu: DiscreteMeasure, p: f64 },
    Discrete(DiscreteMeasure),
    Product(CharFn, CharFn),
    Dilated(CharFn, f64),
    Custom { eval: EvalFn, opts: CustomOptions },
}

struct Inner {
    dim: usize,
    radial: bool,
    real: bool,
    repr: Repr,
}

/// An immutable, cheaply clonable characteristic function on R^d.
#[derive(Clone)]
pub struct CharFn(Arc<Inner>);

impl fmt::Debug for CharFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CharFn({}, d={})", self.describe(), self.dim())
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::Range(format!(
            "exponent p = {p} outside (0, 2]: exp(-|xi|^p) is not positive definite there"
        )));
    }
    Ok(())
}

/// Run `f` on `c * xi` without heap allocation for small dimensions.
#[inline]
fn with_scaled<R>(xi: &[f64], c: f64, f: impl FnOnce(&[f64]) -> R) -> R {
    if xi.len() <= 4 {
        let mut buf = [0.0; 4];
        for (b, x) in buf.iter_mut().zip(xi) {
            *b = c * x;
        }
        f(&buf[..xi.len()])
    } else {
        let v: Vec<f64> = xi.iter().map(|x| c * x).collect();
        f(&v)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `e^{-i theta} - 1` without cancellation for small `theta`.
#[inline]
fn expi_m1(theta: f64) -> Complex64 {
    let s = (0.5 * theta).sin();
    Complex64::new(-2.0 * s * s, -theta.sin())
}

/// Physicists' Hermite polynomial `H_n(u)`.
fn hermite(n: usize, u: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * u);
    if n == 0 {
        return h0;
    }
    for j in 1..n {
        let h2 = 2.0 * u * h1 - 2.0 * j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `d^n/dx^n e^{-t x^2}`.
fn gaussian_derivative_1d(n: usize, t: f64, x: f64) -> f64 {
    let st = t.sqrt();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * st.powi(n as i32) * hermite(n, st * x) * (-t * x * x).exp()
}

fn gaussian_derivative(sigma: &[usize], t: f64, xi: &[f64]) -> f64 {
    sigma.iter().zip(xi).map(|(&n, &x)| gaussian_derivative_1d(n, t, x)).product()
}

fn binom_f(n: usize, k: usize) -> f64 {
    crate::numeric::binomial(n, k) as f64
}

impl CharFn {
    fn from_parts(dim: usize, radial: bool, real: bool, repr: Repr) -> Self {
        CharFn(Arc::new(Inner { dim, radial, real, repr }))
    }

    /// `e^{-t |xi|^2}`: the Gaussian with covariance `2t I`.
    pub fn gaussian(t: f64, d: usize) -> Result<Self> {
        Self::stable(2.0, t, d)
    }

    /// `e^{-t |xi|^p}` for `0 < p <= 2`.
    pub fn stable(p: f64, t: f64, d: usize) -> Result<Self> {
        check_p(p)?;
        check_dim(d)?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Range(format!("scale t must be positive, got {t}")));
        }
        Ok(Self::from_parts(d, true, true, Repr::Stable { p, t }))
    }

    /// `(1 + |xi|^p)^{-beta}`. With `p = delta`, `beta = t` this is also the
    /// Mittag-Leffler process characteristic function.
    pub fn linnik(p: f64, beta: f64, d: usize) -> Result<Self> {
        check_p(p)?;
        check_dim(d)?;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Range(format!("beta must be positive, got {beta}")));
        }
        Ok(Self::from_parts(d, true, true, Repr::Linnik { p, beta }))
    }

    /// `sum_j w_j e^{-t_j |xi|^p}` for a discrete mixing measure `nu` on `[0, inf)`.
    pub fn schoenberg(nu: DiscreteMeasure, p: f64, d: usize) -> Result<Self> {
        check_p(p)?;
        check_dim(d)?;
        closed_forms::check_mixing(&nu)?;
        Ok(Self::from_parts(d, true, true, Repr::Schoenberg { nu, p }))
    }

    /// Characteristic function of a finitely supported measure.
    pub fn discrete(mu: DiscreteMeasure) -> Self {
        let radial = mu.iter().all(|(x, _)| x.iter().all(|c| *c == 0.0));
        let real = mu.is_symmetric();
        Self::from_parts(mu.dim(), radial, real, Repr::Discrete(mu))
    }

    /// `e^{-i xi.a}`.
    pub fn point_mass(a: &[f64]) -> Result<Self> {
        Ok(Self::discrete(DiscreteMeasure::point_mass(a.to_vec())?))
    }

    /// The constant 1, i.e. the Dirac mass at the origin.
    pub fn one(d: usize) -> Result<Self> {
        check_dim(d)?;
        Self::point_mass(&vec![0.0; d])
    }

    /// Empirical characteristic function `(1/n) sum_j e^{-i xi.X_j}`.
    pub fn empirical(samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("empirical characteristic function needs samples".into()));
        }
        Ok(Self::discrete(DiscreteMeasure::uniform(samples)?))
    }

    /// Pointwise product, i.e. the law of the independent sum.
    pub fn product(phi: &CharFn, psi: &CharFn) -> Result<Self> {
        if phi.dim() != psi.dim() {
            return Err(Error::DimensionMismatch { expected: phi.dim(), got: psi.dim() });
        }
        if phi.is_one() {
            return Ok(psi.clone());
        }
        if psi.is_one() {
            return Ok(phi.clone());
        }
        match (&phi.0.repr, &psi.0.repr) {
            (Repr::Stable { p: p1, t: t1 }, Repr::Stable { p: p2, t: t2 }) if p1 == p2 => {
                return Self::stable(*p1, t1 + t2, phi.dim());
            }
            (Repr::Discrete(a), Repr::Discrete(b)) if a.len() * b.len() <= FOLD_LIMIT => {
                return Ok(Self::discrete(a.convolve(b)?));
            }
            _ => {}
        }
        Ok(Self::from_parts(
            phi.dim(),
            phi.is_radial() && psi.is_radial(),
            phi.is_real() && psi.is_real(),
            Repr::Product(phi.clone(), psi.clone()),
        ))
    }

    /// `xi -> phi(c xi)`: the characteristic function of the law of `c X`.
    pub fn dilate(phi: &CharFn, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Range(format!("dilation factor must be positive, got {c}")));
        }
        if c == 1.0 {
            return Ok(phi.clone());
        }
        match &phi.0.repr {
            Repr::Discrete(mu) => return Ok(Self::discrete(mu.scaled(c))),
            Repr::Stable { p, t } => return Self::stable(*p, t * c.powf(*p), phi.dim()),
            Repr::Dilated(base, c0) => return Self::dilate(base, c0 * c),
            _ => {}
        }
        Ok(Self::from_parts(phi.dim(), phi.is_radial(), phi.is_real(), Repr::Dilated(phi.clone(), c)))
    }

    /// A user-supplied evaluator. The evaluator must be a genuine
    /// characteristic function; this is not checked.
    pub fn custom(d: usize, eval: EvalFn, opts: CustomOptions) -> Result<Self> {
        check_dim(d)?;
        let radial = opts.profile.is_some();
        let real = opts.is_real;
        Ok(Self::from_parts(d, radial, real, Repr::Custom { eval, opts }))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn is_radial(&self) -> bool {
        self.0.radial
    }

    pub fn is_real(&self) -> bool {
        self.0.real
    }

    fn is_one(&self) -> bool {
        matches!(&self.0.repr, Repr::Discrete(mu) if self.0.radial && mu.len() == 1)
    }

    /// Short human-readable description used in reports.
    pub fn describe(&self) -> String {
        match &self.0.repr {
            Repr::Stable { p, t } if *p == 2.0 => format!("gaussian(t={t})"),
            Repr::Stable { p, t } => format!("stable(p={p}, t={t})"),
            Repr::Linnik { p, beta } => format!("linnik(p={p}, beta={beta})"),
            Repr::Schoenberg { nu, p } => format!("schoenberg(p={p}, atoms={})", nu.len()),
            Repr::Discrete(mu) => format!("discrete(atoms={})", mu.len()),
            Repr::Product(a, b) => format!("product({}, {})", a.describe(), b.describe()),
            Repr::Dilated(a, c) => format!("dilate({}, c={c})", a.describe()),
            Repr::Custom { .. } => "custom".to_string(),
        }
    }

    /// The underlying discrete measure, if the function is backed by one.
    pub fn atoms(&self) -> Option<&DiscreteMeasure> {
        match &self.0.repr {
            Repr::Discrete(mu) => Some(mu),
            _ => None,
        }
    }

    /// Whether `|phi(xi)| -> 0` as `|xi| -> inf`.
    pub fn decays(&self) -> bool {
        match &self.0.repr {
            Repr::Stable { .. } | Repr::Linnik { .. } => true,
            Repr::Schoenberg { nu, .. } => nu.iter().all(|(t, _)| t[0] > 0.0),
            Repr::Discrete(_) => false,
            Repr::Product(a, b) => a.decays() || b.decays(),
            Repr::Dilated(a, _) => a.decays(),
            Repr::Custom { opts, .. } => opts.decays,
        }
    }

    /// An upper bound for `|phi|` on the sphere of radius `r`, non-increasing in `r`.
    pub fn envelope(&self, r: f64) -> f64 {
        match &self.0.repr {
            Repr::Stable { p, t } => (-t * r.powf(*p)).exp(),
            Repr::Linnik { p, beta } => (-beta * r.powf(*p).ln_1p()).exp(),
            Repr::Schoenberg { nu, p } => nu.iter().map(|(t, w)| w * (-t[0] * r.powf(*p)).exp()).sum(),
            Repr::Discrete(_) | Repr::Custom { .. } => 1.0,
            Repr::Product(a, b) => a.envelope(r) * b.envelope(r),
            Repr::Dilated(a, c) => a.envelope(c * r),
        }
    }

    /// Radius at which `phi` visibly departs from 1.
    pub fn scale_hint(&self) -> f64 {
        match &self.0.repr {
            Repr::Stable { p, t } => t.powf(-1.0 / p),
            Repr::Linnik { .. } => 1.0,
            Repr::Schoenberg { nu, p } => {
                let m: f64 = nu.iter().map(|(t, w)| w * t[0]).sum();
                if m > 0.0 {
                    m.powf(-1.0 / p)
                } else {
                    1.0
                }
            }
            Repr::Discrete(mu) => {
                let m = mu.max_norm();
                if m > 0.0 {
                    1.0 / m
                } else {
                    1.0
                }
            }
            Repr::Product(a, b) => a.scale_hint().min(b.scale_hint()),
            Repr::Dilated(a, c) => a.scale_hint() / c,
            Repr::Custom { opts, .. } => opts.scale_hint.unwrap_or(1.0),
        }
    }

    /// `phi(xi)`.
    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        debug_assert_eq!(xi.len(), self.dim());
        match &self.0.repr {
            Repr::Discrete(mu) => {
                let mut s = ComplexSum::new();
                for (x, w) in mu.iter() {
                    let th = dot(xi, x);
                    s.add(Complex64::new(w * th.cos(), -w * th.sin()));
                }
                s.value()
            }
            Repr::Product(a, b) => a.eval(xi) * b.eval(xi),
            Repr::Dilated(a, c) => with_scaled(xi, *c, |y| a.eval(y)),
            Repr::Custom { eval, .. } => eval(xi),
            _ => self.radial_eval(norm(xi)),
        }
    }

    /// `phi(xi) - 1`, computed without cancellation near the origin.
    pub fn eval_m1(&self, xi: &[f64]) -> Complex64 {
        match &self.0.repr {
            Repr::Discrete(mu) => {
                let mut s = ComplexSum::new();
                for (x, w) in mu.iter() {
                    s.add(expi_m1(dot(xi, x)) * w);
                }
                s.value()
            }
            Repr::Product(a, b) => {
                let (u, v) = (a.eval_m1(xi), b.eval_m1(xi));
                u * v + u + v
            }
            Repr::Dilated(a, c) => with_scaled(xi, *c, |y| a.eval_m1(y)),
            Repr::Custom { eval, .. } => eval(xi) - 1.0,
            _ => self.radial_m1(norm(xi)),
        }
    }

    /// Radial profile `F(r)` with `phi(xi) = F(|xi|)`; `None` for non-radial functions.
    pub fn profile(&self, r: f64) -> Option<Complex64> {
        self.is_radial().then(|| self.radial_eval(r))
    }

    fn radial_eval(&self, r: f64) -> Complex64 {
        match &self.0.repr {
            Repr::Stable { p, t } => Complex64::new((-t * r.powf(*p)).exp(), 0.0),
            Repr::Linnik { p, beta } => Complex64::new((-beta * r.powf(*p).ln_1p()).exp(), 0.0),
            Repr::Schoenberg { nu, p } => {
                let rp = r.powf(*p);
                Complex64::new(nu.iter().map(|(t, w)| w * (-t[0] * rp).exp()).sum(), 0.0)
            }
            Repr::Discrete(_) => Complex64::new(1.0, 0.0),
            Repr::Product(a, b) => a.radial_eval(r) * b.radial_eval(r),
            Repr::Dilated(a, c) => a.radial_eval(c * r),
            Repr::Custom { opts, eval } => match &opts.profile {
                Some(f) => f(r),
                None => {
                    let mut e = vec![0.0; self.dim()];
                    e[0] = r;
                    eval(&e)
                }
            },
        }
    }

    /// `F(r) - 1` for radial functions.
    fn radial_m1(&self, r: f64) -> Complex64 {
        match &self.0.repr {
            Repr::Stable { p, t } => Complex64::new((-t * r.powf(*p)).exp_m1(), 0.0),
            Repr::Linnik { p, beta } => Complex64::new((-beta * r.powf(*p).ln_1p()).exp_m1(), 0.0),
            Repr::Schoenberg { nu, p } => {
                let rp = r.powf(*p);
                Complex64::new(nu.iter().map(|(t, w)| w * (-t[0] * rp).exp_m1()).sum(), 0.0)
            }
            Repr::Discrete(_) => Complex64::new(0.0, 0.0),
            Repr::Product(a, b) => {
                let (u, v) = (a.radial_m1(r), b.radial_m1(r));
                u * v + u + v
            }
            Repr::Dilated(a, c) => a.radial_m1(c * r),
            Repr::Custom { .. } => self.radial_eval(r) - 1.0,
        }
    }

    /// `phi(r u) - 1` along the ray with unit direction `dir`, or along the
    /// radial profile when `dir` is `None`.
    pub fn ray_m1(&self, dir: Option<&[f64]>, r: f64) -> Complex64 {
        match dir {
            None => self.radial_m1(r),
            Some(u) => with_scaled(u, r, |xi| self.eval_m1(xi)),
        }
    }

    /// `phi(r u)` along a ray (see [`CharFn::ray_m1`]).
    pub fn ray_eval(&self, dir: Option<&[f64]>, r: f64) -> Complex64 {
        match dir {
            None => self.radial_eval(r),
            Some(u) => with_scaled(u, r, |xi| self.eval(xi)),
        }
    }

    /// `Delta_{r u}^k phi(0)` along a ray, evaluated in the form with the
    /// least cancellation: per-atom powers `(e^{-i r s} - 1)^k` for discrete
    /// measures, and `sum_{m>=1} c_m (phi(m r u) - 1)` otherwise.
    pub fn ray_difference(&self, dir: Option<&[f64]>, r: f64, k: usize) -> Complex64 {
        if let Repr::Discrete(mu) = &self.0.repr {
            let mut s = ComplexSum::new();
            for (x, w) in mu.iter() {
                let sproj = match dir {
                    Some(u) => dot(u, x),
                    None => 0.0,
                };
                if sproj == 0.0 {
                    continue;
                }
                s.add(expi_m1(r * sproj).powi(k as i32) * w);
            }
            return s.value();
        }
        let c = difference_weights(k);
        let mut s = ComplexSum::new();
        for (m, cm) in c.iter().enumerate().skip(1) {
            s.add(self.ray_m1(dir, m as f64 * r) * *cm);
        }
        s.value()
    }

    /// Frequencies and weights `(x_j . u, w_j)` of a discrete measure seen
    /// along direction `u`; `None` when the function is not discrete.
    pub fn spectrum(&self, dir: Option<&[f64]>) -> Option<Vec<(f64, f64)>> {
        let mu = self.atoms()?;
        Some(
            mu.iter()
                .map(|(x, w)| {
                    let s = match dir {
                        Some(u) => dot(u, x),
                        None => 0.0,
                    };
                    (s, w)
                })
                .collect(),
        )
    }

    /// `d^sigma phi(xi)` where an analytic form is available.
    pub fn derivative(&self, sigma: &[usize], xi: &[f64]) -> Option<Complex64> {
        if sigma.len() != self.dim() || xi.len() != self.dim() {
            return None;
        }
        if sigma.iter().all(|s| *s == 0) {
            return Some(self.eval(xi));
        }
        match &self.0.repr {
            Repr::Stable { p, t } if *p == 2.0 => Some(Complex64::new(gaussian_derivative(sigma, *t, xi), 0.0)),
            Repr::Schoenberg { nu, p } if *p == 2.0 => Some(Complex64::new(
                nu.iter().map(|(t, w)| w * gaussian_derivative(sigma, t[0], xi)).sum(),
                0.0,
            )),
            Repr::Discrete(mu) => {
                let mut s = ComplexSum::new();
                for (x, w) in mu.iter() {
                    let mut f = Complex64::new(w, 0.0);
                    for (&n, &xc) in sigma.iter().zip(x) {
                        f *= Complex64::new(0.0, -xc).powi(n as i32);
                    }
                    let th = dot(xi, x);
                    s.add(f * Complex64::new(th.cos(), -th.sin()));
                }
                Some(s.value())
            }
            Repr::Product(a, b) => {
                // multi-index Leibniz rule
                let mut tau = vec![0usize; sigma.len()];
                let mut total = Complex64::new(0.0, 0.0);
                loop {
                    let rest: Vec<usize> = sigma.iter().zip(&tau).map(|(s, t)| s - t).collect();
                    let coef: f64 = sigma.iter().zip(&tau).map(|(&s, &t)| binom_f(s, t)).product();
                    total += a.derivative(&tau, xi)? * b.derivative(&rest, xi)? * coef;
                    let mut i = 0;
                    loop {
                        if i == tau.len() {
                            return Some(total);
                        }
                        if tau[i] < sigma[i] {
                            tau[i] += 1;
                            break;
                        }
                        tau[i] = 0;
                        i += 1;
                    }
                }
            }
            Repr::Dilated(a, c) => {
                let order: usize = sigma.iter().sum();
                with_scaled(xi, *c, |y| a.derivative(sigma, y)).map(|v| v * c.powi(order as i32))
            }
            Repr::Custom { opts, .. } => opts.derivative.as_ref().map(|f| f(sigma, xi)),
            _ => None,
        }
    }

    /// Closed-form `int |v|^alpha dmu(v)` where one is known.
    pub fn analytic_moment(&self, alpha: f64) -> Option<Result<f64>> {
        let d = self.dim();
        match &self.0.repr {
            Repr::Stable { p, t } => Some(closed_forms::ep_moment(*p, alpha, d).map(|m| m * t.powf(alpha / p))),
            Repr::Linnik { p, beta } => Some(closed_forms::linnik_moment_d(*p, *beta, alpha, d)),
            Repr::Schoenberg { nu, p } => Some(closed_forms::schoenberg_moment(nu, *p, alpha, d)),
            Repr::Discrete(mu) => Some(Ok(mu.moment(alpha))),
            Repr::Dilated(a, c) => a.analytic_moment(alpha).map(|m| m.map(|v| v * c.powf(alpha))),
            Repr::Product(..) => None,
            Repr::Custom { opts, .. } => opts.analytic_moment.as_ref().map(|f| f(alpha)),
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_K {
        return Err(Error::Range(format!("difference order k must be in 1..={MAX_K}, got {k}")));
    }
    Ok(())
}

/// `Delta_xi^k phi(0) = sum_m C(k,m) (-1)^{k-m} phi(m xi)`, including the
/// `m = 0` term.
pub fn iterated_difference(phi: &CharFn, xi: &[f64], k: usize) -> Result<Complex64> {
    check_k(k)?;
    if xi.len() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), got: xi.len() });
    }
    let c = difference_weights(k);
    let mut s = ComplexSum::new();
    for (m, cm) in c.iter().enumerate() {
        s.add(with_scaled(xi, m as f64, |y| phi.eval(y)) * *cm);
    }
    Ok(s.value())
}

/// `Delta_xi^k (Re phi)(0)`, which equals the real part of [`iterated_difference`].
pub fn real_part_difference(phi: &CharFn, xi: &[f64], k: usize) -> Result<f64> {
    Ok(iterated_difference(phi, xi, k)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn constructors_match_formulas() {
        let g = CharFn::gaussian(1.0, 1).unwrap();
        assert_eq!(g.eval(&[0.0]), Complex64::new(1.0, 0.0));
        assert_relative_eq!(g.eval(&[1.0]).re, (-1f64).exp());
        let s = CharFn::stable(0.5, 1.0, 3).unwrap();
        assert_relative_eq!(s.eval(&[0.0, 4.0, 0.0]).re, (-2f64).exp(), max_relative = 1e-15);
        let l = CharFn::linnik(1.0, 1.0, 1).unwrap();
        assert_relative_eq!(l.eval(&[1.0]).re, 0.5, max_relative = 1e-15);
        assert!(CharFn::stable(2.5, 1.0, 1).is_err());
    }

    #[test]
    fn point_masses_and_products() {
        let a = CharFn::point_mass(&[1.0]).unwrap();
        assert!(close(a.eval(&[std::f64::consts::PI]), Complex64::new(-1.0, 0.0), 1e-15));
        assert!(!a.is_real());
        let b = CharFn::point_mass(&[0.5]).unwrap();
        let ab = CharFn::product(&a, &b).unwrap();
        let c = CharFn::point_mass(&[1.5]).unwrap();
        assert!(close(ab.eval(&[0.8]), c.eval(&[0.8]), 1e-15));
        let g = CharFn::product(&CharFn::gaussian(1.0, 2).unwrap(), &CharFn::gaussian(2.0, 2).unwrap()).unwrap();
        let g3 = CharFn::gaussian(3.0, 2).unwrap();
        assert!(close(g.eval(&[0.3, 0.4]), g3.eval(&[0.3, 0.4]), 1e-15));
        let sym = CharFn::empirical(vec![vec![0.7], vec![-0.7]]).unwrap();
        assert!(sym.is_real());
        assert!(close(sym.eval(&[2.0]), Complex64::new((1.4f64).cos(), 0.0), 1e-15));
    }

    #[test]
    fn differences() {
        let one = CharFn::one(1).unwrap();
        for k in 1..=5 {
            assert_eq!(iterated_difference(&one, &[0.3], k).unwrap().norm(), 0.0);
        }
        let g = CharFn::gaussian(1.0, 1).unwrap();
        let d2 = iterated_difference(&g, &[1.0], 2).unwrap();
        assert_relative_eq!(d2.re, (-4f64).exp() - 2.0 * (-1f64).exp() + 1.0, max_relative = 1e-14);
        let a = CharFn::point_mass(&[0.9]).unwrap();
        for k in 1..=4 {
            let want = (Complex64::new(0.0, -0.9 * 1.3).exp() - 1.0).powi(k as i32);
            assert!(close(iterated_difference(&a, &[1.3], k).unwrap(), want, 1e-14));
            assert!(close(a.ray_difference(Some(&[1.0]), 1.3, k), want, 1e-14));
        }
    }

    #[test]
    fn m1_forms_agree_with_eval() {
        let fs = [
            CharFn::gaussian(0.7, 2).unwrap(),
            CharFn::linnik(1.3, 0.8, 2).unwrap(),
            CharFn::product(&CharFn::gaussian(1.0, 2).unwrap(), &CharFn::point_mass(&[1.0, -0.5]).unwrap()).unwrap(),
            CharFn::dilate(&CharFn::linnik(2.0, 2.0, 2).unwrap(), 3.0).unwrap(),
            CharFn::empirical(vec![vec![0.1, 0.2], vec![-1.0, 3.0]]).unwrap(),
        ];
        for f in &fs {
            for xi in [[0.3, -0.2], [2.0, 1.0], [1e-4, 0.0]] {
                assert!(close(f.eval_m1(&xi) + 1.0, f.eval(&xi), 1e-15));
                let conj = f.eval(&[-xi[0], -xi[1]]).conj();
                assert!(close(conj, f.eval(&xi), 1e-15));
                assert!(f.eval(&xi).norm() <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn derivatives() {
        let g = CharFn::gaussian(1.5, 1).unwrap();
        // second derivative of e^{-t x^2} is (4 t^2 x^2 - 2 t) e^{-t x^2}
        let x = 0.4;
        let want = (4.0 * 1.5 * 1.5 * x * x - 2.0 * 1.5) * (-1.5 * x * x as f64).exp();
        assert_relative_eq!(g.derivative(&[2], &[x]).unwrap().re, want, max_relative = 1e-13);
        let a = CharFn::point_mass(&[2.0]).unwrap();
        let d1 = a.derivative(&[1], &[0.3]).unwrap();
        assert!(close(d1, Complex64::new(0.0, -2.0) * Complex64::new(0.0, -0.6).exp(), 1e-15));
        // product rule against a direct finite difference
        let ga = CharFn::product(&g, &CharFn::linnik(2.0, 1.0, 1).unwrap()).unwrap();
        assert!(ga.derivative(&[1], &[0.3]).is_none());
        let gp = CharFn::product(&g, &a).unwrap();
        let h = 1e-5;
        let fd = (gp.eval(&[x + h]) - gp.eval(&[x - h])) / (2.0 * h);
        assert!(close(gp.derivative(&[1], &[x]).unwrap(), fd, 1e-8));
    }

    #[test]
    fn analytic_moments() {
        let g = CharFn::gaussian(1.0, 1).unwrap();
        assert_relative_eq!(
            g.analytic_moment(1.0).unwrap().unwrap(),
            2.0 / std::f64::consts::PI.sqrt(),
            max_relative = 1e-13
        );
        let g4 = CharFn::dilate(&CharFn::linnik(2.0, 1.0, 1).unwrap(), 2.0).unwrap();
        assert_relative_eq!(g4.analytic_moment(2.0).unwrap().unwrap(), 8.0, max_relative = 1e-13);
        let e = CharFn::empirical(vec![vec![3.0, 4.0], vec![0.0, 1.0]]).unwrap();
        assert_relative_eq!(e.analytic_moment(0.5).unwrap().unwrap(), 0.5 * (5f64.sqrt() + 1.0));
    }
}
