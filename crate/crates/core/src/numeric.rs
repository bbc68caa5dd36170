//! Small numeric helpers shared across modules: compensated summation and
//! exact binomial coefficients.

use num_complex::Complex64;

/// Largest number of iterated differences supported. The alternating sums
/// lose roughly `log10(2^k)` digits, so anything above 12 is rejected.
pub const MAX_K: usize = 12;

/// Neumaier (improved Kahan–Babuška) running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of complex terms (real and imaginary parts summed separately).
#[derive(Debug, Default, Clone, Copy)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Exact binomial coefficient `C(k, m)` for `k <= 62`.
pub fn binomial(k: usize, m: usize) -> u64 {
    if m > k {
        return 0;
    }
    let m = m.min(k - m);
    let mut c: u64 = 1;
    for i in 0..m {
        // c * (k - i) / (i + 1) stays integral at every step
        c = c * (k - i) as u64 / (i + 1) as u64;
    }
    c
}

/// Signed weights `C(k, m) (-1)^(k-m)` for `m = 0..=k`.
pub fn difference_weights(k: usize) -> Vec<f64> {
    (0..=k)
        .map(|m| {
            let c = binomial(k, m) as f64;
            if (k - m) % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect()
}
