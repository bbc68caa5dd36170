//! Monte-Carlo samplers and moment estimators, used as independent oracles.
//!
//! Generator: xoshiro256++ (Blackman & Vigna), 256-bit state, seeded from a
//! `u64` through SplitMix64 (increment `0x9e3779b97f4a7c15`, finalizer
//! multipliers `0xbf58476d1ce4e5b9` and `0x94d049bb133111eb`). Samples are
//! generated in blocks of `BLOCK` draws; block `b` uses the seeded state
//! advanced by `b` calls of the `2^128`-step jump, so the output does not
//! depend on the number of worker threads.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::charfn::CharFn;
use crate::error::{Error, Result};
use crate::measure::{norm, read_samples_csv};
use crate::numeric::NeumaierSum;

/// Draws per independent stream.
pub const BLOCK: usize = 1 << 16;

/// Batches used by [`mc_moment`] for its standard error.
pub const BATCHES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
    pub family: String,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Empirical characteristic function of the samples.
    pub fn to_charfn(&self) -> Result<CharFn> {
        CharFn::empirical(self.points.clone())
    }

    /// Header `x1,...,xd` followed by one row per sample, printed with
    /// shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        wr.write_record(&header).map_err(csv_err)?;
        for p in &self.points {
            wr.write_record(p.iter().map(|x| format!("{x:?}"))).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Samples from CSV; the dimension is the column count.
    pub fn read_csv<R: Read>(r: R, family: &str) -> Result<Self> {
        let points = read_samples_csv(r)?;
        Ok(Self { dim: points[0].len(), points, seed: 0, family: family.to_string() })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Range("sample size must be at least 1".into()));
    }
    Ok(())
}

/// Run `draw` over `n` samples split into jump-separated streams.
fn generate<F>(n: usize, seed: u64, draw: F) -> Vec<Vec<f64>>
where
    F: Fn(&mut Xoshiro256PlusPlus) -> Vec<f64> + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let mut rngs = Vec::with_capacity(blocks);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..blocks {
        rngs.push(rng.clone());
        rng.jump();
    }
    rngs.into_par_iter()
        .enumerate()
        .flat_map_iter(|(b, mut r)| {
            let m = BLOCK.min(n - b * BLOCK);
            (0..m).map(|_| draw(&mut r)).collect::<Vec<_>>()
        })
        .collect()
}

/// Gaussian with characteristic function `e^{-t |xi|^2}` (variance `2t` per coordinate).
pub fn sample_gaussian(t: f64, d: usize, n: usize, seed: u64) -> Result<SampleSet> {
    check_n(n)?;
    if !(t > 0.0) || d == 0 {
        return Err(Error::Range(format!("need t > 0 and d >= 1, got t = {t}, d = {d}")));
    }
    let s = (2.0 * t).sqrt();
    let points = generate(n, seed, |r| (0..d).map(|_| s * r.sample::<f64, _>(StandardNormal)).collect());
    Ok(SampleSet { dim: d, points, seed, family: format!("gaussian(t={t})") })
}

/// Isotropic Cauchy, `e^{-|xi|}`: `Z / |W|` with `Z ~ N(0, I_d)`, `W ~ N(0, 1)`.
pub fn sample_isotropic_cauchy(d: usize, n: usize, seed: u64) -> Result<SampleSet> {
    check_n(n)?;
    if d == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    let points = generate(n, seed, |r| {
        let z: Vec<f64> = (0..d).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let w = r.sample::<f64, _>(StandardNormal).abs();
        z.into_iter().map(|c| c / w).collect()
    });
    Ok(SampleSet { dim: d, points, seed, family: "cauchy".into() })
}

/// One symmetric stable draw with characteristic function `e^{-|xi|^p}`.
fn stable_draw<R: Rng>(p: f64, r: &mut R) -> f64 {
    if p == 2.0 {
        return 2f64.sqrt() * r.sample::<f64, _>(StandardNormal);
    }
    // V uniform on (-pi/2, pi/2); the open interval avoids tan blowing up
    let v = PI * (r.random::<f64>() - 0.5);
    if p == 1.0 {
        return v.tan();
    }
    let w: f64 = r.sample(Exp1);
    (p * v).sin() / v.cos().powf(1.0 / p) * ((v - p * v).cos() / w).powf((1.0 - p) / p)
}

/// Symmetric `p`-stable samples (Chambers-Mallows-Stuck).
pub fn sample_sym_stable_1d(p: f64, n: usize, seed: u64) -> Result<SampleSet> {
    check_n(n)?;
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::Range(format!("stability index must lie in (0, 2], got {p}")));
    }
    let points = generate(n, seed, |r| vec![stable_draw(p, r)]);
    Ok(SampleSet { dim: 1, points, seed, family: format!("stable(p={p})") })
}

/// Linnik samples `T^{1/p} S`, `T ~ Gamma(beta, 1)`, `S` symmetric `p`-stable;
/// characteristic function `(1 + |xi|^p)^{-beta}`.
pub fn sample_linnik_1d(p: f64, beta: f64, n: usize, seed: u64) -> Result<SampleSet> {
    check_n(n)?;
    if !(p > 0.0 && p <= 2.0) || !(beta > 0.0) {
        return Err(Error::Range(format!("need 0 < p <= 2 and beta > 0, got p = {p}, beta = {beta}")));
    }
    let g = Gamma::new(beta, 1.0).map_err(|e| Error::Range(e.to_string()))?;
    let points = generate(n, seed, |r| {
        let t: f64 = g.sample(r);
        vec![t.powf(1.0 / p) * stable_draw(p, r)]
    });
    Ok(SampleSet { dim: 1, points, seed, family: format!("linnik(p={p},beta={beta})") })
}

/// Sample mean of `|X|^alpha` with a batch-means standard error over
/// [`BATCHES`] contiguous batches.
pub fn mc_moment(samples: &SampleSet, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha >= 0.0) {
        return Err(Error::Range(format!("alpha must be >= 0, got {alpha}")));
    }
    let n = samples.len();
    if n == 0 {
        return Err(Error::Empty("no samples".into()));
    }
    let vals: Vec<f64> =
        samples.points.par_iter().map(|x| if alpha == 0.0 { 1.0 } else { norm(x).powf(alpha) }).collect();
    let mean = vals.iter().copied().collect::<NeumaierSum>().value() / n as f64;
    let b = BATCHES.min(n);
    if b < 2 {
        return Ok((mean, if vals.iter().all(|v| *v == vals[0]) { 0.0 } else { f64::INFINITY }));
    }
    let mut ss = NeumaierSum::new();
    for j in 0..b {
        let (lo, hi) = (j * n / b, (j + 1) * n / b);
        let m = vals[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        ss.add((m - mean) * (m - mean));
    }
    let stderr = (ss.value() / (b * (b - 1)) as f64).sqrt();
    Ok((mean, stderr))
}
