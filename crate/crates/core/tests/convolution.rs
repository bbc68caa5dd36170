use std::f64::consts::PI;

use fourier_moments::closed_forms::ep_moment;
use fourier_moments::convolution::{convolution_bound_report, convolution_moment, leibniz_difference};
use fourier_moments::moment_engine::absolute_moment;
use fourier_moments::{CharFn, Error, QuadratureSpec};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn empirical(n: usize, shift: f64, seed: f64) -> (Vec<f64>, CharFn) {
    let xs: Vec<f64> = (0..n).map(|j| ((j as f64 + seed) * 2.399).sin() * 1.5 + shift).collect();
    let cf = CharFn::empirical(xs.iter().map(|x| vec![*x]).collect()).unwrap();
    (xs, cf)
}

#[test]
fn leibniz_against_direct_sums() {
    let g1 = CharFn::gaussian(1.0, 1).unwrap();
    let g2 = CharFn::gaussian(2.0, 1).unwrap();
    let x = 0.7;
    let f = |s: f64| (-3.0 * s * s).exp();
    let direct = f(3.0 * x) - 3.0 * f(2.0 * x) + 3.0 * f(x) - 1.0;
    let got = leibniz_difference(&g1, &g2, &[x], 3).unwrap();
    assert!((got.re - direct).abs() < 1e-13 && got.im.abs() < 1e-13);
    assert!(leibniz_difference(&g1, &g2, &[x], 0).is_err());
    assert!(leibniz_difference(&g1, &CharFn::gaussian(1.0, 2).unwrap(), &[x], 1).is_err());
}

#[test]
fn gaussian_pair() {
    let spec = QuadratureSpec::default();
    let g = CharFn::gaussian(1.0, 1).unwrap();
    let m = convolution_moment(&g, &g, 1.0, &spec).unwrap().value;
    let want = 2.0 * (2.0 / PI).sqrt();
    assert!(rel(m, want) < 1e-8);
    assert!(rel(m, ep_moment(2.0, 1.0, 1).unwrap() * 2f64.sqrt()) < 1e-8);
}

#[test]
fn empirical_pair_sum() {
    let spec = QuadratureSpec::default();
    let (xs, a) = empirical(20, 0.3, 0.0);
    let (ys, b) = empirical(20, -0.8, 7.0);
    let exact = xs.iter().flat_map(|x| ys.iter().map(move |y| (x + y).abs().powf(0.7))).sum::<f64>() / 400.0;
    let m = convolution_moment(&a, &b, 0.7, &spec).unwrap().value;
    assert!(rel(m, exact) < 1e-3, "{m} vs {exact}");
}

#[test]
fn convolving_with_delta_changes_nothing() {
    let spec = QuadratureSpec::default();
    let l = CharFn::linnik(1.8, 1.3, 1).unwrap();
    let one = CharFn::one(1).unwrap();
    for a in [0.4, 1.1] {
        let m0 = absolute_moment(&l, a, &spec).unwrap().value;
        let m1 = convolution_moment(&l, &one, a, &spec).unwrap().value;
        assert!(rel(m1, m0) < 1e-10);
    }
}

#[test]
fn order_ceiling() {
    let spec = QuadratureSpec::default();
    let c = CharFn::stable(1.0, 1.0, 1).unwrap();
    let g = CharFn::gaussian(1.0, 1).unwrap();
    assert!(matches!(convolution_moment(&c, &g, 1.5, &spec), Err(Error::DivergenceSuspected(_))));
}

#[test]
fn bound_report_examples() {
    let spec = QuadratureSpec::default();
    let g = CharFn::gaussian(1.0, 1).unwrap();
    let c = CharFn::stable(1.0, 1.0, 1).unwrap();
    let r = convolution_bound_report(&g, &c, 2.0, 0.5, &spec).unwrap();
    assert_eq!(r.gamma, 0.5);
    assert!(r.ratio.is_finite() && r.ratio > 0.0);
    // |x + y|^g <= |x|^g + |y|^g for g <= 1
    let sub = ep_moment(2.0, 0.5, 1).unwrap() + ep_moment(1.0, 0.5, 1).unwrap();
    assert!(r.lhs > 0.0 && r.lhs <= sub);

    for (a, b) in [(0.5, 1.2), (-2.0, 0.7), (3.0, -3.0)] {
        let pa = CharFn::point_mass(&[a]).unwrap();
        let pb = CharFn::point_mass(&[b]).unwrap();
        for (al, be) in [(0.5, 0.9), (1.0, 0.3)] {
            let r = convolution_bound_report(&pa, &pb, al, be, &spec).unwrap();
            let g = al.min(be);
            assert!((r.lhs - (a + b).abs().powf(g)).abs() < 1e-6 * (1.0 + r.lhs), "{a} {b}: {r:?}");
            assert!(r.ratio <= 2.0 + 1e-9);
        }
    }
}

#[test]
fn ratio_is_scale_invariant() {
    let spec = QuadratureSpec::default();
    let base = convolution_bound_report(
        &CharFn::gaussian(1.0, 1).unwrap(),
        &CharFn::gaussian(1.0, 1).unwrap(),
        0.9,
        1.5,
        &spec,
    )
    .unwrap()
    .ratio;
    for c in [0.2, 3.0, 11.0] {
        let g = CharFn::dilate(&CharFn::gaussian(1.0, 1).unwrap(), c).unwrap();
        let r = convolution_bound_report(&g, &g, 0.9, 1.5, &spec).unwrap().ratio;
        assert!(rel(r, base) < 1e-6, "c={c}: {r} vs {base}");
    }
}

#[test]
fn ratios_stay_bounded() {
    let spec = QuadratureSpec::default().with_tol(1e-8);
    let family = |i: usize| -> CharFn {
        match i % 3 {
            0 => CharFn::gaussian(0.2 + 0.45 * i as f64, 1).unwrap(),
            1 => CharFn::linnik(2.0, 0.6 + 0.3 * i as f64, 1).unwrap(),
            _ => empirical(15, 0.25 * i as f64 - 1.0, i as f64).1,
        }
    };
    let orders = [0.5, 0.9, 1.5];
    let mut worst: f64 = 0.0;
    for n in 0..30 {
        let (i, j) = (n, (7 * n + 3) % 30);
        let (a, b) = (orders[n % 3], orders[(n / 3) % 3]);
        let r = convolution_bound_report(&family(i), &family(j), a, b, &spec).unwrap();
        assert!(r.ratio.is_finite() && r.lhs >= 0.0);
        worst = worst.max(r.ratio);
    }
    assert!(worst <= 4.0, "largest ratio {worst}");
}
