//! Moments of convolutions and the Leibniz rule for iterated differences.

use num_complex::Complex64;
use serde::Serialize;

use crate::charfn::CharFn;
use crate::error::{Error, Result};
use crate::moment_engine::{absolute_moment, MomentResult, QuadratureSpec};
use crate::numeric::{binomial, difference_weights, ComplexSum, MAX_K};

/// `Delta_xi^j psi(y) = sum_l C(j,l) (-1)^{j-l} psi(y + l xi)`; `j = 0` is the identity.
fn difference_at(psi: &CharFn, y: &[f64], xi: &[f64], j: usize) -> Complex64 {
    let c = difference_weights(j);
    let mut s = ComplexSum::new();
    let mut z = vec![0.0; xi.len()];
    for (l, cl) in c.iter().enumerate() {
        for ((zi, yi), xv) in z.iter_mut().zip(y).zip(xi) {
            *zi = yi + l as f64 * xv;
        }
        s.add(psi.eval(&z) * *cl);
    }
    s.value()
}

/// `sum_m C(k,m) Delta_xi^m phi(0) Delta_xi^{k-m} psi(m xi)`, which equals
/// `Delta_xi^k (phi psi)(0)`.
pub fn leibniz_difference(phi: &CharFn, psi: &CharFn, xi: &[f64], k: usize) -> Result<Complex64> {
    if k == 0 || k > MAX_K {
        return Err(Error::Range(format!("difference order k must be in 1..={MAX_K}, got {k}")));
    }
    for f in [phi, psi] {
        if f.dim() != xi.len() {
            return Err(Error::DimensionMismatch { expected: f.dim(), got: xi.len() });
        }
    }
    let zero = vec![0.0; xi.len()];
    let mut s = ComplexSum::new();
    for m in 0..=k {
        let y: Vec<f64> = xi.iter().map(|x| m as f64 * x).collect();
        let a = difference_at(phi, &zero, xi, m);
        let b = difference_at(psi, &y, xi, k - m);
        s.add(a * b * binomial(k, m) as f64);
    }
    Ok(s.value())
}

/// `int |v|^gamma d(mu * nu)(v)`, computed from `phi psi`.
///
/// The caller asserts that `gamma` does not exceed the moment orders of
/// either factor; a heavier factor shows up as a divergence error.
pub fn convolution_moment(phi: &CharFn, psi: &CharFn, gamma: f64, spec: &QuadratureSpec) -> Result<MomentResult> {
    let prod = CharFn::product(phi, psi)?;
    absolute_moment(&prod, gamma, spec)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvolutionBoundReport {
    pub gamma: f64,
    pub lhs: f64,
    /// `M_mu(alpha)^{gamma/alpha} + M_nu(beta)^{gamma/beta}`
    pub rhs_core: f64,
    /// `lhs / rhs_core`; a lower bound for the constant in the convolution estimate.
    pub ratio: f64,
    pub moment_mu: f64,
    pub moment_nu: f64,
}

/// Moment of `mu`, from a closed form when one is known.
pub fn measure_moment(phi: &CharFn, alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
    match phi.analytic_moment(alpha) {
        Some(r) => r,
        None => Ok(absolute_moment(phi, alpha, spec)?.value),
    }
}

/// Compare `M_{mu*nu}(gamma)` with `M_mu(alpha)^{gamma/alpha} + M_nu(beta)^{gamma/beta}`,
/// `gamma = min(alpha, beta)`. No constant is asserted; the ratio is reported.
pub fn convolution_bound_report(
    phi: &CharFn,
    psi: &CharFn,
    alpha: f64,
    beta: f64,
    spec: &QuadratureSpec,
) -> Result<ConvolutionBoundReport> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Range(format!("moment orders must be positive, got alpha = {alpha}, beta = {beta}")));
    }
    let gamma = alpha.min(beta);
    let moment_mu = measure_moment(phi, alpha, spec)?;
    let moment_nu = measure_moment(psi, beta, spec)?;
    let lhs = convolution_moment(phi, psi, gamma, spec)?.value;
    let rhs_core = moment_mu.powf(gamma / alpha) + moment_nu.powf(gamma / beta);
    let ratio = if rhs_core > 0.0 {
        lhs / rhs_core
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(ConvolutionBoundReport { gamma, lhs, rhs_core, ratio, moment_mu, moment_nu })
}
