//! Quadrature building blocks: a 21-point Gauss–Kronrod rule with global
//! adaptive subdivision, Gauss–Legendre nodes for the sphere rules, and a
//! panel series with geometric (Aitken-type) remainder estimation used for
//! the dyadic panels near the origin and in power-law tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn magnitude(self) -> f64;
    /// Projection used to compare the direction of two consecutive panel sums.
    fn dot(self, other: Self) -> f64;
}

impl QuadValue for f64 {
    #[inline]
    fn magnitude(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn dot(self, other: Self) -> f64 {
        self * other
    }
}

impl QuadValue for Complex64 {
    #[inline]
    fn magnitude(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn dot(self, other: Self) -> f64 {
        self.re * other.re + self.im * other.im
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_517_160,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights for the nodes XGK[1], XGK[3], .., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of a quadrature: value, error estimate, and how many panels were used.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

/// One application of the 21-point Kronrod rule with the embedded 10-point
/// Gauss rule; returns `(kronrod, error)`.
pub fn gk21<T, F>(f: &F, a: f64, b: f64) -> (T, f64)
where
    T: QuadValue,
    F: Fn(f64) -> T + ?Sized,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[10];
    let mut gauss = T::default();
    let mut resabs = fc.magnitude() * WGK[10];
    let mut fv1 = [T::default(); 10];
    let mut fv2 = [T::default(); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kron = kron + (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut resasc = WGK[10] * (fc - mean).magnitude();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let abs_half = half.abs();
    resasc *= abs_half;
    resabs *= abs_half;
    let value = kron * half;
    let mut err = ((kron - gauss) * half).magnitude();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// error drops below `max(abs_tol, rel_tol * |I|)` or `max_panels` is reached.
pub fn adaptive<T, F>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_panels: usize) -> Estimate<T>
where
    T: QuadValue,
    F: Fn(f64) -> T + ?Sized,
{
    if a == b {
        return Estimate { value: T::default(), error: 0.0, panels: 0, converged: true };
    }
    let (v, e) = gk21(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut count = 1;
    loop {
        let tol = abs_tol.max(rel_tol * total.magnitude());
        if total_err <= tol {
            break;
        }
        if count >= max_panels {
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk21(f, worst.a, mid);
        let (v2, e2) = gk21(f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        count += 1;
    }
    // re-sum in panel order so the result does not depend on the refinement history
    let mut panels: Vec<Panel<T>> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = T::default();
    let mut error = 0.0;
    for p in &panels {
        value = value + p.value;
        error += p.error;
    }
    let tol = abs_tol.max(rel_tol * value.magnitude());
    Estimate { value, error, panels: panels.len(), converged: error <= tol }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// How a panel series ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStatus {
    Converged,
    Divergent,
    Exhausted,
}

/// Outcome of [`sum_panel_series`].
#[derive(Debug, Clone, Copy)]
pub struct SeriesOutcome<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
    /// Extrapolated remainder that was added to the computed panels.
    pub remainder: T,
    pub status: SeriesStatus,
    /// Last observed ratio of consecutive panel magnitudes.
    pub ratio: f64,
}

/// Sum `panel(0) + panel(1) + ...` where the panel contributions eventually
/// decay geometrically (dyadic panels on a power-law integrand).
///
/// Once three consecutive ratios agree, the tail is replaced by the geometric
/// remainder `c_j rho / (1 - rho)`. `scale` is the magnitude of whatever the
/// series is added to, so relative tolerances refer to the whole integral.
pub fn sum_panel_series<T, G>(
    mut panel: G,
    abs_tol: f64,
    rel_tol: f64,
    scale: f64,
    max_panels: usize,
) -> SeriesOutcome<T>
where
    T: QuadValue,
    G: FnMut(usize) -> Estimate<T>,
{
    let mut partial = T::default();
    let mut quad_err = 0.0;
    let mut prev: Option<T> = None;
    let mut prev_ratio: Option<f64> = None;
    let mut stable_ratios = 0usize;
    let mut growing = 0usize;
    let mut last_ratio = f64::NAN;
    for j in 0..max_panels {
        let est = panel(j);
        let c = est.value;
        partial = partial + c;
        quad_err += est.error;
        let tol = abs_tol.max(rel_tol * (scale + partial.magnitude()));
        let cm = c.magnitude();
        if let Some(p) = prev {
            let pm = p.magnitude();
            if cm == 0.0 && pm == 0.0 {
                if j >= 3 {
                    return SeriesOutcome {
                        value: partial,
                        error: quad_err,
                        panels: j + 1,
                        remainder: T::default(),
                        status: SeriesStatus::Converged,
                        ratio: 0.0,
                    };
                }
                prev = Some(c);
                continue;
            }
            let rho = if pm > 0.0 { cm / pm } else { f64::INFINITY };
            last_ratio = rho;
            let aligned = c.dot(p) > 0.0;
            if rho >= 1.0 {
                growing += 1;
            } else {
                growing = 0;
            }
            if aligned && rho < 1.0 {
                if let Some(pr) = prev_ratio {
                    if (rho - pr).abs() <= 0.05 * (1.0 - rho).max(1e-3) {
                        stable_ratios += 1;
                    } else {
                        stable_ratios = 0;
                    }
                    let denom = 1.0 - rho;
                    let remainder = c * (rho / denom);
                    let rem_uncertainty = cm * (rho - pr).abs() / (denom * denom) + 1e-13 * cm * rho / denom;
                    let small_enough = cm * rho / denom <= tol;
                    if j >= 3 && (small_enough || (stable_ratios >= 2 && rem_uncertainty <= tol)) {
                        return SeriesOutcome {
                            value: partial + remainder,
                            error: quad_err + rem_uncertainty.min(cm * rho / denom),
                            panels: j + 1,
                            remainder,
                            status: SeriesStatus::Converged,
                            ratio: rho,
                        };
                    }
                }
                prev_ratio = Some(rho);
            } else {
                stable_ratios = 0;
                prev_ratio = if rho < 1.0 { Some(rho) } else { None };
                if cm <= 1e-3 * tol && pm <= 1e-3 * tol && j >= 3 {
                    return SeriesOutcome {
                        value: partial,
                        error: quad_err + cm + pm,
                        panels: j + 1,
                        remainder: T::default(),
                        status: SeriesStatus::Converged,
                        ratio: rho,
                    };
                }
            }
            if growing >= 12 && j >= 24 {
                return SeriesOutcome {
                    value: partial,
                    error: f64::INFINITY,
                    panels: j + 1,
                    remainder: T::default(),
                    status: SeriesStatus::Divergent,
                    ratio: rho,
                };
            }
        }
        prev = Some(c);
    }
    SeriesOutcome {
        value: partial,
        error: f64::INFINITY,
        panels: max_panels,
        remainder: T::default(),
        status: SeriesStatus::Exhausted,
        ratio: last_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gk21_is_exact_for_polynomials() {
        let (v, _): (f64, f64) = gk21(&|x: f64| x.powi(20) - 3.0 * x.powi(7), -1.0, 2.0);
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert_relative_eq!(v, exact, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_handles_a_sharp_peak() {
        let f = |x: f64| 1.0 / (1e-4 + (x - 0.3) * (x - 0.3));
        let est: Estimate<f64> = adaptive(&f, 0.0, 1.0, 1e-12, 1e-12, 2000);
        let exact = 100.0 * ((0.7f64 / 1e-2).atan() + (0.3f64 / 1e-2).atan());
        assert!(est.converged);
        assert_relative_eq!(est.value, exact, max_relative = 1e-11);
    }

    #[test]
    fn adaptive_complex_oscillatory() {
        let f = |x: f64| Complex64::new(0.0, -20.0 * x).exp();
        let est: Estimate<Complex64> = adaptive(&f, 0.0, 3.0, 1e-13, 1e-13, 2000);
        let exact = (Complex64::new(0.0, -60.0).exp() - 1.0) / Complex64::new(0.0, -20.0);
        assert!((est.value - exact).norm() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        for n in [1usize, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-13);
            let deg = 2 * n - 2; // even degree below 2n - 1
            let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
            assert_relative_eq!(s, 2.0 / (deg as f64 + 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn panel_series_extrapolates_slow_geometric_decay() {
        // int_0^1 r^{-0.97} dr = 1 / 0.03 split into dyadic panels [2^-j-1, 2^-j]
        let s = 0.03;
        let panel = |j: usize| {
            let b = 0.5f64.powi(j as i32);
            let a = 0.5 * b;
            let value = (b.powf(s) - a.powf(s)) / s;
            Estimate { value, error: 0.0, panels: 1, converged: true }
        };
        let out = sum_panel_series(panel, 1e-12, 1e-12, 0.0, 4000);
        assert_eq!(out.status, SeriesStatus::Converged);
        assert_relative_eq!(out.value, 1.0 / s, max_relative = 1e-10);
        assert!(out.panels < 20);
    }

    #[test]
    fn panel_series_flags_growth() {
        let panel = |j: usize| Estimate { value: 1.1f64.powi(j as i32), error: 0.0, panels: 1, converged: true };
        let out = sum_panel_series(panel, 1e-12, 1e-12, 0.0, 200);
        assert_eq!(out.status, SeriesStatus::Divergent);
    }
}
