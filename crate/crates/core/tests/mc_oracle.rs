use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use fourier_moments::closed_forms::{ep_moment, linnik_moment};
use fourier_moments::mc_oracle::*;
use fourier_moments::SampleSet;

fn within(samples: &SampleSet, alpha: f64, want: f64, sigmas: f64) {
    let (m, se) = mc_moment(samples, alpha).unwrap();
    assert!((m - want).abs() <= sigmas * se, "{}: {m} +- {se} vs {want}", samples.family);
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
fn ks(samples: &SampleSet, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs: Vec<f64> = samples.points.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_sampler() {
    let s = sample_gaussian(0.7, 3, 100_000, 1).unwrap();
    within(&s, 2.0, 2.0 * 0.7 * 3.0, 3.0);
    for c in 0..3 {
        let mean = s.points.iter().map(|p| p[c]).sum::<f64>() / s.len() as f64;
        // coordinate sd is sqrt(1.4); 4 standard errors
        assert!(mean.abs() < 4.0 * (1.4f64 / 1e5).sqrt());
    }
    let g = sample_gaussian(1.0, 1, 1_000_000, 2).unwrap();
    within(&g, 1.0, 2.0 / PI.sqrt(), 3.0);
}

#[test]
fn cauchy_sampler() {
    let s = sample_isotropic_cauchy(1, 1_000_000, 3).unwrap();
    within(&s, 0.5, 2f64.sqrt(), 3.0);
    let s2 = sample_isotropic_cauchy(2, 1_000_000, 4).unwrap();
    within(&s2, 0.5, ep_moment(1.0, 0.5, 2).unwrap(), 3.0);
}

#[test]
fn cauchy_order_above_one_does_not_settle() {
    let s = sample_isotropic_cauchy(1, 1_000_000, 5).unwrap();
    let prefix = |n: usize| {
        let sub = SampleSet { points: s.points[..n].to_vec(), ..s.clone() };
        mc_moment(&sub, 1.5).unwrap().0
    };
    let m: Vec<f64> = [10_000, 100_000, 1_000_000].iter().map(|&n| prefix(n)).collect();
    // E|X|^{3/2} is infinite; the running mean grows roughly like sqrt(n)
    assert!(m[2] > 2.0 * m[0], "{m:?}");
}

#[test]
fn stable_sampler() {
    let cauchy_cdf = |x: f64| 0.5 + x.atan() / PI;
    let s1 = sample_sym_stable_1d(1.0, 100_000, 6).unwrap();
    let c1 = sample_isotropic_cauchy(1, 100_000, 7).unwrap();
    assert!(ks(&s1, cauchy_cdf) < 0.005);
    assert!(ks(&c1, cauchy_cdf) < 0.005);

    let s2 = sample_sym_stable_1d(2.0, 200_000, 8).unwrap();
    within(&s2, 2.0, 2.0, 3.0);
    let s15 = sample_sym_stable_1d(1.5, 1_000_000, 9).unwrap();
    within(&s15, 0.7, ep_moment(1.5, 0.7, 1).unwrap(), 3.0);
    assert!(sample_sym_stable_1d(2.1, 10, 0).is_err());
    assert!(sample_sym_stable_1d(1.0, 0, 0).is_err());
}

#[test]
fn linnik_sampler() {
    let s = sample_linnik_1d(1.0, 1.0, 1_000_000, 10).unwrap();
    within(&s, 0.5, linnik_moment(1.0, 1.0, 0.5).unwrap(), 3.0);
    assert_eq!(s, sample_linnik_1d(1.0, 1.0, 1_000_000, 10).unwrap());

    // scaled by beta^{-1/p}, the law tends to the stable one as beta grows
    let p = 1.5;
    let target = ep_moment(p, 0.5, 1).unwrap();
    let gaps: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&b: &f64| (linnik_moment(p, b, 0.5).unwrap() * b.powf(-0.5 / p) / target - 1.0).abs())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
    let big = sample_linnik_1d(p, 100.0, 400_000, 11).unwrap();
    let (m, se) = mc_moment(&big, 0.5).unwrap();
    let scaled = m * 100f64.powf(-0.5 / p);
    assert!((scaled - target).abs() < 3.0 * se * 100f64.powf(-0.5 / p) + gaps[2] * target);
}

#[test]
fn reproducible_bit_for_bit() {
    for n in [1, BLOCK - 1, BLOCK, 3 * BLOCK + 5] {
        let a = sample_isotropic_cauchy(2, n, 42).unwrap();
        let b = sample_isotropic_cauchy(2, n, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), n);
        assert!(a.points.iter().flatten().all(|x| x.is_finite()));
    }
    // prefixes agree: a longer run extends a shorter one
    let short = sample_gaussian(1.0, 1, BLOCK + 10, 3).unwrap();
    let long = sample_gaussian(1.0, 1, 2 * BLOCK, 3).unwrap();
    assert_eq!(short.points[..], long.points[..BLOCK + 10]);
}

#[test]
fn empirical_cf_bridge() {
    let s = sample_gaussian(0.5, 2, 5_000, 12).unwrap();
    let phi = s.to_charfn().unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
    for _ in 0..10 {
        let xi = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let direct: Complex64 = s
            .points
            .iter()
            .map(|x| Complex64::new(0.0, -(xi[0] * x[0] + xi[1] * x[1])).exp())
            .sum::<Complex64>()
            / s.len() as f64;
        assert!((phi.eval(&xi) - direct).norm() < 1e-14);
    }
}

#[test]
fn point_repeated_sample() {
    let s = SampleSet { dim: 2, points: vec![vec![3.0, 4.0]; 1000], seed: 0, family: "fixed".into() };
    let (m, se) = mc_moment(&s, 0.5).unwrap();
    assert!((m - 5f64.sqrt()).abs() < 1e-14);
    assert_eq!(se, 0.0);
    assert!(mc_moment(&s, -1.0).is_err());
}

#[test]
fn csv_export_feeds_the_empirical_cf() {
    let s = sample_sym_stable_1d(1.2, 300, 13).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let back = SampleSet::read_csv(buf.as_slice(), "stable").unwrap();
    assert_eq!(back.points, s.points);
    let (a, b) = (s.to_charfn().unwrap(), back.to_charfn().unwrap());
    assert_eq!(a.eval(&[0.37]), b.eval(&[0.37]));
}
