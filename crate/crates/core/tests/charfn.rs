use num_complex::Complex64;
use proptest::prelude::*;

use fourier_moments::charfn::{iterated_difference, real_part_difference};
use fourier_moments::measure::pathological_measure;
use fourier_moments::{CharFn, DiscreteMeasure};

fn builtins() -> Vec<CharFn> {
    let two_atoms = DiscreteMeasure::new(vec![vec![0.3], vec![-1.7]], vec![0.25, 0.75]).unwrap();
    let nu = DiscreteMeasure::new(vec![vec![1.0], vec![4.0]], vec![0.5, 0.5]).unwrap();
    vec![
        CharFn::gaussian(0.7, 1).unwrap(),
        CharFn::stable(1.3, 2.0, 1).unwrap(),
        CharFn::linnik(1.5, 2.0, 1).unwrap(),
        CharFn::schoenberg(nu, 1.0, 1).unwrap(),
        CharFn::discrete(two_atoms),
        CharFn::point_mass(&[2.5]).unwrap(),
        CharFn::empirical(vec![vec![0.1], vec![-0.4], vec![3.0]]).unwrap(),
    ]
}

#[test]
fn constructor_values() {
    let g = CharFn::gaussian(1.0, 1).unwrap();
    assert!((g.eval(&[1.0]) - Complex64::new((-1.0f64).exp(), 0.0)).norm() < 1e-15);

    let c = CharFn::stable(1.0, 1.0, 3).unwrap();
    assert!((c.eval(&[1.0, 2.0, 2.0]).re - (-3.0f64).exp()).abs() < 1e-15);

    let l = CharFn::linnik(2.0, 1.0, 1).unwrap();
    assert!((l.eval(&[2.0]).re - 0.2).abs() < 1e-15);

    let nu = DiscreteMeasure::new(vec![vec![1.0], vec![4.0]], vec![0.5, 0.5]).unwrap();
    let s = CharFn::schoenberg(nu, 2.0, 1).unwrap();
    let want = 0.5 * ((-1.0f64).exp() + (-4.0f64).exp());
    assert!((s.eval(&[1.0]).re - want).abs() < 1e-15);

    let one = DiscreteMeasure::point_mass(vec![1.0]).unwrap();
    let s1 = CharFn::schoenberg(one, 1.5, 2).unwrap();
    let st = CharFn::stable(1.5, 1.0, 2).unwrap();
    for xi in [[0.3, 0.1], [2.0, -1.0]] {
        assert!((s1.eval(&xi) - st.eval(&xi)).norm() < 1e-15);
    }
}

#[test]
fn declared_flags() {
    assert!(CharFn::gaussian(1.0, 2).unwrap().is_radial());
    assert!(CharFn::gaussian(1.0, 2).unwrap().is_real());
    let pm = CharFn::point_mass(&[1.0, 0.0]).unwrap();
    assert!(!pm.is_real() && !pm.is_radial());
    let sym = DiscreteMeasure::new(vec![vec![1.0], vec![-1.0]], vec![0.5, 0.5]).unwrap();
    assert!(CharFn::discrete(sym).is_real());
}

#[test]
fn product_rules() {
    let a = CharFn::gaussian(0.4, 1).unwrap();
    let b = CharFn::gaussian(1.1, 1).unwrap();
    let ab = CharFn::product(&a, &b).unwrap();
    let c = CharFn::gaussian(1.5, 1).unwrap();
    let one = CharFn::one(1).unwrap();
    let a1 = CharFn::product(&a, &one).unwrap();
    let pa = CharFn::point_mass(&[0.5]).unwrap();
    let pb = CharFn::point_mass(&[-2.0]).unwrap();
    let pab = CharFn::product(&pa, &pb).unwrap();
    let psum = CharFn::point_mass(&[-1.5]).unwrap();
    for x in [-3.0, -0.2, 0.0, 0.9, 4.0] {
        assert!((ab.eval(&[x]) - c.eval(&[x])).norm() < 1e-15);
        assert_eq!(a1.eval(&[x]), a.eval(&[x]));
        assert!((pab.eval(&[x]) - psum.eval(&[x])).norm() < 1e-14);
    }
    assert!(ab.is_radial() && ab.is_real());
    assert!(CharFn::product(&a, &CharFn::gaussian(1.0, 2).unwrap()).is_err());
}

#[test]
fn difference_examples() {
    let one = CharFn::one(2).unwrap();
    for k in 1..=6 {
        assert_eq!(iterated_difference(&one, &[0.3, 1.0], k).unwrap(), Complex64::new(0.0, 0.0));
    }

    let g = CharFn::gaussian(1.0, 1).unwrap();
    let want = (-4.0f64).exp() - 2.0 * (-1.0f64).exp() + 1.0;
    let got = iterated_difference(&g, &[1.0], 2).unwrap();
    assert!((got.re - want).abs() < 1e-15 && got.im == 0.0);
    assert!((want - 0.282_557).abs() < 1e-6);
    assert_eq!(real_part_difference(&g, &[1.0], 2).unwrap(), got.re);

    let (a, xi) = (1.3, 0.8);
    let pm = CharFn::point_mass(&[a]).unwrap();
    for k in 1..=5 {
        let want = (Complex64::new(0.0, -xi * a).exp() - 1.0).powu(k as u32);
        assert!((iterated_difference(&pm, &[xi], k).unwrap() - want).norm() < 1e-14);
    }
    assert!((real_part_difference(&pm, &[xi], 1).unwrap() - ((xi * a).cos() - 1.0)).abs() < 1e-15);
}

#[test]
fn real_part_of_asymmetric_measure() {
    let (x1, x2, w1, w2) = (0.4, -2.2, 0.3, 0.7);
    let mu = DiscreteMeasure::new(vec![vec![x1], vec![x2]], vec![w1, w2]).unwrap();
    let phi = CharFn::discrete(mu);
    let re = |s: f64| w1 * (s * x1).cos() + w2 * (s * x2).cos();
    let xi = 0.9;
    // third difference of the cosine sum at 0
    let want = re(3.0 * xi) - 3.0 * re(2.0 * xi) + 3.0 * re(xi) - re(0.0);
    assert!((real_part_difference(&phi, &[xi], 3).unwrap() - want).abs() < 1e-14);
}

#[test]
fn empirical_matches_direct_sum() {
    let pts: Vec<Vec<f64>> = (0..40).map(|j| vec![(j as f64 * 0.37).sin() * 3.0, j as f64 * 0.01]).collect();
    let phi = CharFn::empirical(pts.clone()).unwrap();
    let xi = [0.7, -1.9];
    let direct: Complex64 = pts
        .iter()
        .map(|x| Complex64::new(0.0, -(xi[0] * x[0] + xi[1] * x[1])).exp())
        .sum::<Complex64>()
        / pts.len() as f64;
    assert!((phi.eval(&xi) - direct).norm() < 1e-14);

    let alpha = 0.7;
    let brute = pts.iter().map(|x| (x[0] * x[0] + x[1] * x[1]).sqrt().powf(alpha)).sum::<f64>() / pts.len() as f64;
    let m = phi.analytic_moment(alpha).unwrap().unwrap();
    assert!((m - brute).abs() <= 1e-15 * brute);
}

#[test]
fn pathological_weights() {
    let one = pathological_measure(1.0, 1, 1).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one.point(0), &[2.0]);
    assert!((one.weight(0) - 1.0).abs() < 1e-15);

    let three = pathological_measure(1.0, 3, 2).unwrap();
    let raw = [0.5, 1.0 / 16.0, 1.0 / 72.0];
    let total: f64 = raw.iter().sum();
    for (j, w) in raw.iter().enumerate() {
        assert!((three.weight(j) - w / total).abs() < 1e-15);
        assert_eq!(three.point(j), &[2f64.powi(j as i32 + 1), 0.0]);
    }

    // order beta > alpha: the truncated moment keeps growing
    let m: Vec<f64> = [4, 8, 12].iter().map(|&k| pathological_measure(0.5, k, 1).unwrap().moment(1.0)).collect();
    assert!(m[0] < m[1] && m[1] < m[2] && m[2] > 1.5 * m[0]);
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(CharFn::gaussian(-1.0, 1).is_err());
    assert!(CharFn::stable(2.5, 1.0, 1).is_err());
    assert!(CharFn::linnik(1.0, 0.0, 1).is_err());
    assert!(CharFn::empirical(vec![]).is_err());
    assert!(CharFn::empirical(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    assert!(DiscreteMeasure::new(vec![vec![1.0]], vec![0.5]).is_err());
}

proptest! {
    #[test]
    fn hermitian_and_bounded(x in -30.0f64..30.0) {
        for phi in builtins() {
            let a = phi.eval(&[x]);
            let b = phi.eval(&[-x]);
            prop_assert!((a - b.conj()).norm() < 1e-14, "{}", phi.describe());
            prop_assert!(a.norm() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn leibniz_identity(x in -4.0f64..4.0, k in 1usize..=4, i in 0usize..7, j in 0usize..7) {
        let fs = builtins();
        let lhs = fourier_moments::convolution::leibniz_difference(&fs[i], &fs[j], &[x], k).unwrap();
        let rhs = iterated_difference(&CharFn::product(&fs[i], &fs[j]).unwrap(), &[x], k).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-13);
    }
}
