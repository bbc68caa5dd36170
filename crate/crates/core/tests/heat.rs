use std::f64::consts::PI;

use fourier_moments::closed_forms::ep_moment;
use fourier_moments::heat::*;
use fourier_moments::metrics::d_inf;
use fourier_moments::specfun::gamma;
use fourier_moments::{CharFn, MetricGrid, QuadratureSpec};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn evolution_values() {
    let one = CharFn::one(1).unwrap();
    let s = evolve(&one, 1.4, 0.6).unwrap();
    let st = CharFn::stable(1.4, 0.6, 1).unwrap();
    let g = CharFn::gaussian(0.5, 1).unwrap();
    let gt = evolve(&g, 2.0, 1.25).unwrap();
    let want = CharFn::gaussian(1.75, 1).unwrap();
    let pm = CharFn::point_mass(&[0.9]).unwrap();
    let pmt = evolve(&pm, 0.7, 2.0).unwrap();
    for x in [-4.0, -0.5, 0.0, 0.25, 3.0] {
        assert!((s.eval(&[x]) - st.eval(&[x])).norm() < 1e-15);
        assert!((gt.eval(&[x]) - want.eval(&[x])).norm() < 1e-15);
        assert!(pmt.eval(&[x]).norm() <= pm.eval(&[x]).norm() + 1e-15);
    }
    assert_eq!(evolve(&g, 2.0, 0.0).unwrap().eval(&[1.0]), g.eval(&[1.0]));
    assert!(evolve(&g, 2.5, 1.0).is_err());
    assert!(evolve(&g, 1.0, -1.0).is_err());
    let h = HeatSolution::new(&g, 2.0, 1.25).unwrap();
    assert_eq!(h.solution.eval(&[0.4]), gt.eval(&[0.4]));
}

#[test]
fn moment_propagation_from_delta() {
    let spec = QuadratureSpec::default();
    for (p, a, d) in [(2.0, 1.0, 1), (1.5, 0.7, 2), (0.9, 0.4, 3)] {
        let one = CharFn::one(d).unwrap();
        for t in [0.25, 1.0, 4.0] {
            let r = solution_moment_check(&one, p, t, a, None, &spec).unwrap();
            let want = t.powf(a / p) * ep_moment(p, a, d).unwrap();
            assert!(rel(r.moment.value, want) < 1e-6, "p={p} a={a} d={d} t={t}");
            assert!(r.ok);
        }
    }
}

#[test]
fn gaussian_variance_addition() {
    let spec = QuadratureSpec::default();
    let g = CharFn::gaussian(1.0, 1).unwrap();
    for t in [0.0, 0.5, 3.0] {
        let r = solution_moment_check(&g, 2.0, t, 1.0, None, &spec).unwrap();
        let want = ep_moment(2.0, 1.0, 1).unwrap() * (1.0 + t).sqrt();
        assert!(rel(r.moment.value, want) < 1e-8, "t={t}");
        assert!(r.ok && r.ratio <= 1.0 + 1e-8);
    }
}

#[test]
fn heavy_tailed_branch_needs_a_lower_order() {
    let spec = QuadratureSpec::default();
    let g = CharFn::gaussian(1.0, 1).unwrap();
    assert!(solution_moment_check(&g, 1.2, 1.0, 1.5, None, &spec).is_err());
    let r = solution_moment_check(&g, 1.2, 1.0, 1.5, Some(0.8), &spec).unwrap();
    assert_eq!(r.order, 0.8);
    assert!(r.ok);
}

/// `sup_x |G(x) - G(x - 1)|`, `G` the heat kernel at `t = 1`.
fn gaussian_difference_sup() -> f64 {
    let g = |x: f64| (4.0 * PI).powf(-0.5) * (-x * x / 4.0).exp();
    let f = |x: f64| (g(x) - g(x - 1.0)).abs();
    let (mut best, mut at) = (0.0, 0.0);
    for j in 0..=200_000 {
        let x = -10.0 + 20.0 * j as f64 / 200_000.0;
        if f(x) > best {
            best = f(x);
            at = x;
        }
    }
    let (mut lo, mut hi) = (at - 1e-4, at + 1e-4);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (a, b) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

#[test]
fn inversion_against_gaussian_closed_form() {
    let one = CharFn::one(1).unwrap();
    let pm = CharFn::point_mass(&[1.0]).unwrap();
    assert_eq!(derivative_sup_distance(&pm, &pm, 2.0, 1.0, 0, &[0.0, 0.5]).unwrap(), 0.0);

    // grid fine enough that the argmax sits within 2.5e-3 of a node
    let grid: Vec<f64> = (0..=4000).map(|j| -5.0 + 10.0 * j as f64 / 4000.0).collect();
    let got = derivative_sup_distance(&one, &pm, 2.0, 1.0, 0, &grid).unwrap();
    let want = gaussian_difference_sup();
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");

    let grid_m = MetricGrid::default();
    let dist = d_inf(&one, &pm, &grid_m).unwrap().value;
    let xs: Vec<f64> = (0..=200).map(|j| -8.0 + 16.0 * j as f64 / 200.0).collect();
    for t in [1.0, 2.0, 4.0, 8.0] {
        for sigma in [0, 1, 2] {
            let m = derivative_sup_distance(&one, &pm, 2.0, t, sigma, &xs).unwrap();
            let b = sup_constant(2.0, 1, sigma).unwrap() * t.powf(-(1.0 + sigma as f64) / 2.0) * dist;
            assert!(m <= b * (1.0 + 1e-9), "t={t} sigma={sigma}: {m} > {b}");
        }
    }
}

#[test]
fn sup_norm_of_the_kernel_is_sharp() {
    let one = CharFn::one(1).unwrap();
    for t in [0.5, 2.0, 7.0] {
        let s = derivative_sup(&one, 2.0, t, 0, &[0.0, 0.3, -1.0]).unwrap();
        assert!(rel(s, (4.0 * PI * t).powf(-0.5)) < 1e-9);
        assert!(rel(s, sup_constant(2.0, 1, 0).unwrap() * t.powf(-0.5)) < 1e-9);
    }
    assert!(rel(sup_constant(2.0, 1, 0).unwrap(), 0.5 / PI.sqrt()) < 1e-14);
}

#[test]
fn refined_rate_for_two_point_masses() {
    let spec = QuadratureSpec::default();
    let one = CharFn::one(1).unwrap();
    let pm = CharFn::point_mass(&[1.0]).unwrap();
    let times = [4.0, 8.0, 16.0, 32.0, 64.0];
    let r = refined_rate_check(&one, &pm, 2.0, 0.5, 0, &times, &spec).unwrap();
    assert!(r.bound_holds, "{r:?}");
    // the difference of two shifted kernels decays like the kernel's derivative, t^{-1},
    // faster than the t^{-3/4} of the bound
    assert!((r.fitted_rate + 1.0).abs() < 0.05, "{}", r.fitted_rate);

    let same = refined_rate_check(&pm, &pm, 2.0, 0.5, 0, &times[..2], &spec).unwrap();
    assert!(same.measured_sup.iter().all(|m| *m == 0.0));
    assert_eq!(same.rho, 0.0);
    assert!(refined_rate_check(&one, &pm, 2.0, 1.0, 0, &times, &spec).is_err());
}

#[test]
fn small_time_behaviour() {
    let spec = QuadratureSpec::default();
    let one = CharFn::one(1).unwrap();
    let a = 0.5;
    for t in [0.1, 1.0] {
        let r = small_time_check(&one, 2.0, t, a, &spec).unwrap();
        let closed = 2.0 * t.powf(a / 2.0) * gamma(1.0 - a / 2.0).unwrap() / a;
        assert!(rel(r.rho, closed) < 1e-8);
        assert!(rel(r.bound, closed) < 1e-8);
    }
    assert_eq!(small_time_check(&one, 2.0, 0.0, a, &spec).unwrap().rho, 0.0);

    let r1 = small_time_check(&one, 2.0, 0.02, a, &spec).unwrap().rho;
    let r2 = small_time_check(&one, 2.0, 0.01, a, &spec).unwrap().rho;
    assert!((r2 / r1 - 2f64.powf(-a / 2.0)).abs() < 1e-3);
    assert!(small_time_check(&one, 0.8, 0.1, 0.9, &spec).is_err());
}
