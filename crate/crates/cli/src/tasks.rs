//! Validation and dispatch of a [`TaskConfig`].

use std::f64::consts::PI;

use fourier_moments::closed_forms::{bg_tail_constant, ep_density, ep_moment, gamma_quantile_grid, schoenberg_moment};
use fourier_moments::convolution::{convolution_bound_report, convolution_moment, leibniz_difference};
use fourier_moments::heat::{
    derivative_sup, derivative_sup_distance, evolve, refined_rate_check, small_time_check, solution_moment_check,
    sup_constant,
};
use fourier_moments::mc_oracle::{
    mc_moment, sample_gaussian, sample_isotropic_cauchy, sample_linnik_1d, sample_sym_stable_1d,
};
use fourier_moments::metrics::{
    composite_metric, d_beta, d_inf, difference_sup, membership, rho_alpha, seminorm_alpha_k, seminorm_real_part,
};
use fourier_moments::moment_engine::{absolute_moment, moment_with, select_k};
use fourier_moments::specfun::{constant_a, constant_i, gamma, sum_s};
use fourier_moments::{
    CharFn, Classification, Error, Formula, MetricGrid, MetricResult, MomentResult, QuadratureSpec, SampleSet,
};
use serde_json::json;

use crate::build::build;
use crate::config::{HeatCheck, MeasureSpec, MetricKind, SamplerSpec, Task, TaskConfig};
use crate::error::CliError;
use crate::report::{Report, Row};
use crate::row;

/// Largest difference order accepted.
const MAX_K: usize = 12;

/// What a run produced.
pub enum Output {
    Report(Report),
    /// Raw samples, written as plain CSV so they can be read back as a `samples` measure.
    Samples(SampleSet, Report),
}

impl Output {
    pub fn report(&self) -> &Report {
        match self {
            Output::Report(r) | Output::Samples(_, r) => r,
        }
    }

    /// Failed checks of a `verify` run.
    pub fn failures(&self) -> usize {
        self.report().rows.iter().filter(|r| r.get("status").and_then(|s| s.as_str()) == Some("FAIL")).count()
    }
}

pub fn run(cfg: &TaskConfig) -> Result<Output, CliError> {
    let task = cfg.task.ok_or_else(|| CliError::Config("no task given".into()))?;
    validate(task, cfg)?;
    let hash = cfg.hash();
    let rows = match task {
        Task::Moment => moment_task(cfg)?,
        Task::Metric => metric_task(cfg)?,
        Task::Membership => membership_task(cfg)?,
        Task::Heat => heat_task(cfg)?,
        Task::Convolve => convolve_task(cfg)?,
        Task::Verify => verify_task(cfg),
        Task::Sample => {
            let s = sample_task(cfg)?;
            let summary = row! {
                "family" => &s.family, "n" => s.len(), "d" => s.dim, "seed" => s.seed,
                "points" => &s.points,
            };
            return Ok(Output::Samples(s, Report::new(task.name(), hash, vec![summary])));
        }
    };
    Ok(Output::Report(Report::new(task.name(), hash, rows)))
}

fn need<T: Copy>(v: Option<T>, task: Task, what: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("task `{}` needs `{what}`", task.name())))
}

fn need_measure<'a>(v: &'a Option<MeasureSpec>, task: Task, what: &str) -> Result<&'a MeasureSpec, CliError> {
    v.as_ref().ok_or_else(|| CliError::Config(format!("task `{}` needs `{what}`", task.name())))
}

fn is_even_integer(a: f64) -> bool {
    a == a.round() && (a as i64) % 2 == 0
}

fn alphas(cfg: &TaskConfig, task: Task) -> Result<Vec<f64>, CliError> {
    match (&cfg.alphas, cfg.alpha) {
        (Some(v), _) if !v.is_empty() => Ok(v.clone()),
        (_, Some(a)) => Ok(vec![a]),
        _ => Err(CliError::Config(format!("task `{}` needs `alpha` or `alphas`", task.name()))),
    }
}

fn times(cfg: &TaskConfig, task: Task) -> Result<Vec<f64>, CliError> {
    match (&cfg.times, cfg.t) {
        (Some(v), _) if !v.is_empty() => Ok(v.clone()),
        (_, Some(t)) => Ok(vec![t]),
        _ => Err(CliError::Config(format!("task `{}` needs `t` or `times`", task.name()))),
    }
}

fn hyp(msg: String) -> CliError {
    CliError::Hypothesis(msg)
}

/// Heavy-tailed families whose moments stop below `p`.
fn moment_ceiling(m: &MeasureSpec) -> Option<(&'static str, f64)> {
    match m {
        MeasureSpec::Stable { p, .. } if *p < 2.0 => Some(("stable", *p)),
        MeasureSpec::Cauchy { .. } => Some(("Cauchy", 1.0)),
        MeasureSpec::Linnik { p, .. } if *p < 2.0 => Some(("Linnik", *p)),
        _ => None,
    }
}

/// Parameter checks run before any computation, phrased in terms of the
/// hypothesis that fails.
pub fn validate(task: Task, cfg: &TaskConfig) -> Result<(), CliError> {
    cfg.spec().validate()?;
    if let Some(k) = cfg.k {
        if k == 0 || k > MAX_K {
            return Err(hyp(format!("k = {k}: the difference order must be in 1..={MAX_K}")));
        }
    }
    if let Some(p) = cfg.p {
        if !(p > 0.0 && p <= 2.0) {
            return Err(hyp(format!("p = {p}: the fractional Laplacian exponent must lie in (0, 2]")));
        }
    }
    match task {
        Task::Moment => {
            let m = need_measure(&cfg.measure, task, "measure")?;
            for a in alphas(cfg, task)? {
                if !(a > 0.0) || !a.is_finite() {
                    return Err(hyp(format!("alpha = {a}: moment orders must be positive")));
                }
                if let Some((name, p)) = moment_ceiling(m) {
                    if a >= p {
                        return Err(hyp(format!(
                            "alpha = {a} >= p = {p}: the {name} law has finite moments only of order below p"
                        )));
                    }
                }
                match cfg.formula {
                    Some(f @ (Formula::M12 | Formula::M13)) if is_even_integer(a) => {
                        return Err(hyp(format!(
                            "alpha = {a} is an even integer: excluded by the {f:?} difference formula since \
                             S(k, alpha) vanishes there; use formula \"even-limit\""
                        )))
                    }
                    Some(Formula::M12) => {
                        if let Some(k) = cfg.k {
                            if a >= k as f64 {
                                return Err(hyp(format!("alpha = {a}, k = {k}: M12 needs alpha < k")));
                            }
                        }
                    }
                    Some(Formula::M13) => {
                        if let Some(k) = cfg.k {
                            if k % 2 == 0 {
                                return Err(hyp(format!("k = {k}: M13 needs odd k")));
                            }
                            if a >= k as f64 + 1.0 {
                                return Err(hyp(format!("alpha = {a}, k = {k}: M13 needs alpha < k + 1")));
                            }
                        }
                    }
                    Some(Formula::EvenLimit) if !is_even_integer(a) => {
                        return Err(hyp(format!("alpha = {a}: the even limit applies to even integer orders only")))
                    }
                    _ => {}
                }
                if cfg.formula.is_none() && cfg.k.is_some() && is_even_integer(a) {
                    return Err(hyp(format!(
                        "alpha = {a} is an even integer: a fixed k cannot be used because S(k, alpha) vanishes; \
                         drop `k` to use the even limit"
                    )));
                }
            }
        }
        Task::Metric => {
            need_measure(&cfg.measure, task, "measure")?;
            let kind = need(cfg.kind, task, "kind")?;
            if kind != MetricKind::KBeta {
                need_measure(&cfg.other, task, "other")?;
            }
            let needs_alpha = !matches!(kind, MetricKind::DInf | MetricKind::DBeta | MetricKind::KBeta);
            let alpha = if needs_alpha { Some(need(cfg.alpha, task, "alpha")?) } else { None };
            if let Some(a) = alpha {
                if !(a > 0.0) {
                    return Err(hyp(format!("alpha = {a}: must be positive")));
                }
            }
            if matches!(kind, MetricKind::DBeta | MetricKind::KBeta | MetricKind::F | MetricKind::H) {
                let b = need(cfg.beta, task, "beta")?;
                if !(b > 0.0 && b < 2.0) {
                    return Err(hyp(format!("beta = {b}: d_beta needs 0 < beta < 2")));
                }
                if let (Some(a), true) = (alpha, matches!(kind, MetricKind::F | MetricKind::H)) {
                    if b > a.min(1.0) {
                        return Err(hyp(format!(
                            "beta = {b}, alpha = {a}: the {kind:?} metric needs 0 < beta <= min(alpha, 1)"
                        )));
                    }
                }
            }
            if kind == MetricKind::Rho {
                let a = alpha.unwrap();
                if a >= 1.0 {
                    return Err(hyp(format!("alpha = {a}: rho_alpha is defined for 0 < alpha < 1")));
                }
            }
            if matches!(kind, MetricKind::SeminormRe | MetricKind::G | MetricKind::H) {
                if let Some(k) = cfg.k {
                    if alpha.unwrap() >= k as f64 && k % 2 == 0 {
                        return Err(hyp(format!("k = {k}: the real-part seminorm with alpha >= k needs odd k")));
                    }
                }
            }
        }
        Task::Membership => {
            need_measure(&cfg.measure, task, "measure")?;
            let a = need(cfg.alpha, task, "alpha")?;
            if !(a > 0.0) {
                return Err(hyp(format!("alpha = {a}: must be positive")));
            }
            if let Some(k) = cfg.k {
                if (k as f64) < a && !(k % 2 == 1 && a < k as f64 + 1.0) {
                    return Err(hyp(format!(
                        "alpha = {a}, k = {k}: the membership integral needs alpha < k, or odd k with alpha < k + 1"
                    )));
                }
            }
        }
        Task::Heat => {
            need_measure(&cfg.measure, task, "measure")?;
            need(cfg.p, task, "p")?;
            let check = cfg.check.unwrap_or_default();
            if check != HeatCheck::Sup {
                need(cfg.alpha, task, "alpha")?;
            }
            if check == HeatCheck::Rate || (check == HeatCheck::Sup && cfg.other.is_some()) {
                need_measure(&cfg.other, task, "other")?;
            }
            for t in times(cfg, task)? {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(hyp(format!("t = {t}: times must be finite and nonnegative")));
                }
            }
            if matches!(check, HeatCheck::Rate | HeatCheck::SmallTime) {
                let a = cfg.alpha.unwrap();
                if !(a > 0.0 && a < 1.0) {
                    return Err(hyp(format!("alpha = {a}: this check uses rho_alpha, which needs 0 < alpha < 1")));
                }
            }
        }
        Task::Convolve => {
            need_measure(&cfg.measure, task, "measure")?;
            need_measure(&cfg.other, task, "other")?;
            let a = need(cfg.alpha, task, "alpha")?;
            let b = cfg.beta.unwrap_or(a);
            if !(a > 0.0 && b > 0.0) {
                return Err(hyp(format!("alpha = {a}, beta = {b}: moment orders must be positive")));
            }
        }
        Task::Sample => {
            need(cfg.n, task, "n")?;
            cfg.sampler.as_ref().ok_or_else(|| CliError::Config("task `sample` needs `sampler`".into()))?;
        }
        Task::Verify => {}
    }
    Ok(())
}

fn moment_row(phi: &CharFn, alpha: f64, r: &MomentResult) -> Row {
    let d = phi.dim();
    let k = r.k_used;
    let has_k = k > 0 && matches!(r.formula, Formula::M12 | Formula::M13);
    let closed = phi.analytic_moment(alpha).and_then(|v| v.ok());
    row! {
        "measure" => phi.describe(),
        "alpha" => alpha,
        "value" => r.value,
        "error_estimate" => r.error_estimate,
        "formula" => r.formula,
        "k" => k,
        "constant_a" => if has_k { constant_a(k, alpha, d).ok() } else { None },
        "sum_s" => if has_k { sum_s(k, alpha).ok() } else { None },
        "constant_i" => if has_k { constant_i(k, alpha).ok() } else { None },
        "closed_form" => closed,
        "diagnostics" => r.diagnostics,
    }
}

fn moment_task(cfg: &TaskConfig) -> Result<Vec<Row>, CliError> {
    let spec = cfg.spec();
    let phi = build(cfg.measure.as_ref().unwrap(), cfg)?;
    let mut rows = Vec::new();
    for a in alphas(cfg, Task::Moment)? {
        let r = match (cfg.formula, cfg.k) {
            (None, None) => absolute_moment(&phi, a, &spec)?,
            (Some(f), k) => {
                let k = match (f, k) {
                    (_, Some(k)) => k,
                    (Formula::M12, None) => select_k(a, false)?.0,
                    _ => select_k(a, true)?.0,
                };
                moment_with(&phi, a, k, f, &spec)?
            }
            (None, Some(k)) => {
                let f = if k % 2 == 1 && a < k as f64 + 1.0 { Formula::M13 } else { Formula::M12 };
                moment_with(&phi, a, k, f, &spec)?
            }
        };
        rows.push(moment_row(&phi, a, &r));
    }
    Ok(rows)
}

fn metric_row(kind: MetricKind, r: &MetricResult) -> Row {
    row! {
        "kind" => kind,
        "value" => r.value,
        "sup_component" => r.sup_component,
        "integral_component" => r.integral_component,
        "error_estimate" => r.error_estimate,
        "grid_report" => r.grid_report,
    }
}

/// Default difference order: smallest `k > alpha`, odd for real-part functionals.
fn default_k(alpha: f64, real: bool) -> Result<usize, CliError> {
    Ok(if real { select_k(alpha, true)?.0 } else { alpha.floor() as usize + 1 })
}

fn metric_task(cfg: &TaskConfig) -> Result<Vec<Row>, CliError> {
    let spec = cfg.spec();
    let grid: &MetricGrid = &cfg.grid;
    let kind = cfg.kind.unwrap();
    let phi = build(cfg.measure.as_ref().unwrap(), cfg)?;
    let psi = match &cfg.other {
        Some(m) => Some(build(m, cfg)?),
        None => None,
    };
    let real = matches!(kind, MetricKind::SeminormRe | MetricKind::G | MetricKind::H);
    let k = match (cfg.k, cfg.alpha) {
        (Some(k), _) => k,
        (None, Some(a)) => default_k(a, real)?,
        (None, None) => 1,
    };
    let alpha = cfg.alpha.unwrap_or(f64::NAN);
    let beta = cfg.beta.unwrap_or(f64::NAN);
    let r = match kind {
        MetricKind::DInf => d_inf(&phi, psi.as_ref().unwrap(), grid)?,
        MetricKind::DBeta => d_beta(&phi, psi.as_ref().unwrap(), beta, grid)?,
        MetricKind::Rho => rho_alpha(&phi, psi.as_ref().unwrap(), alpha, &spec)?,
        MetricKind::Seminorm => seminorm_alpha_k(&phi, psi.as_ref().unwrap(), alpha, k, &spec)?,
        MetricKind::SeminormRe => seminorm_real_part(&phi, psi.as_ref().unwrap(), alpha, k, &spec)?,
        MetricKind::KBeta => difference_sup(&phi, cfg.k.unwrap_or(1), beta, grid)?,
        _ => composite_metric(kind.composite().unwrap(), &phi, psi.as_ref().unwrap(), alpha, beta, k, &spec, grid)?,
    };
    let mut row = metric_row(kind, &r);
    row.insert("alpha".into(), json!(cfg.alpha));
    row.insert("beta".into(), json!(cfg.beta));
    row.insert("k".into(), json!(k));
    Ok(vec![row])
}

fn membership_task(cfg: &TaskConfig) -> Result<Vec<Row>, CliError> {
    let spec = cfg.spec();
    let phi = build(cfg.measure.as_ref().unwrap(), cfg)?;
    let a = cfg.alpha.unwrap();
    let k = match cfg.k {
        Some(k) => k,
        None => default_k(a, false)?,
    };
    let r = membership(&phi, a, k, &spec)?;
    let mut row = row! { "measure" => phi.describe(), "alpha" => a, "k" => k };
    if let serde_json::Value::Object(m) = json!(r) {
        row.extend(m);
    }
    Ok(vec![row])
}

fn heat_task(cfg: &TaskConfig) -> Result<Vec<Row>, CliError> {
    let spec = cfg.spec();
    let p = cfg.p.unwrap();
    let phi = build(cfg.measure.as_ref().unwrap(), cfg)?;
    let ts = times(cfg, Task::Heat)?;
    let sigma = cfg.sigma.unwrap_or(0);
    let mut rows = Vec::new();
    match cfg.check.unwrap_or_default() {
        HeatCheck::Moment => {
            let a = cfg.alpha.unwrap();
            for t in ts {
                let r = solution_moment_check(&phi, p, t, a, cfg.beta, &spec)?;
                rows.push(row! {
                    "check" => "moment", "t" => t, "order" => r.order,
                    "value" => r.moment.value, "error_estimate" => r.moment.error_estimate,
                    "formula" => r.moment.formula, "k" => r.moment.k_used,
                    "bound" => r.bound, "rhs_core" => r.rhs_core, "ratio" => r.ratio, "ok" => r.ok,
                });
            }
        }
        HeatCheck::Rate => {
            let psi = build(cfg.other.as_ref().unwrap(), cfg)?;
            let r = refined_rate_check(&phi, &psi, p, cfg.alpha.unwrap(), sigma, &ts, &spec)?;
            for i in 0..r.times.len() {
                rows.push(row! {
                    "check" => "rate", "t" => r.times[i], "sigma" => sigma,
                    "measured_sup" => r.measured_sup[i], "bound" => r.bound[i],
                    "rho" => r.rho, "fitted_rate" => r.fitted_rate,
                    "expected_rate" => -(cfg.alpha.unwrap() + 1.0 + sigma as f64) / p,
                    "bound_holds" => r.bound_holds,
                });
            }
        }
        HeatCheck::SmallTime => {
            let a = cfg.alpha.unwrap();
            for t in ts {
                let r = small_time_check(&phi, p, t, a, &spec)?;
                rows.push(row! { "check" => "small-time", "t" => t, "rho" => r.rho, "bound" => r.bound, "sup_phi" => r.sup_phi });
            }
        }
        HeatCheck::Sup => {
            let xs = cfg.x.clone().unwrap_or_else(|| (0..=400).map(|j| -10.0 + j as f64 / 20.0).collect());
            let psi = match &cfg.other {
                Some(m) => Some(build(m, cfg)?),
                None => None,
            };
            let c = sup_constant(p, phi.dim(), sigma).ok();
            for t in ts {
                let s = match &psi {
                    Some(psi) => derivative_sup_distance(&phi, psi, p, t, sigma, &xs)?,
                    None => derivative_sup(&phi, p, t, sigma, &xs)?,
                };
                rows.push(row! { "check" => "sup", "t" => t, "sigma" => sigma, "sup" => s, "sup_constant" => c });
            }
        }
    }
    Ok(rows)
}

fn convolve_task(cfg: &TaskConfig) -> Result<Vec<Row>, CliError> {
    let spec = cfg.spec();
    let phi = build(cfg.measure.as_ref().unwrap(), cfg)?;
    let psi = build(cfg.other.as_ref().unwrap(), cfg)?;
    let a = cfg.alpha.unwrap();
    let b = cfg.beta.unwrap_or(a);
    let r = convolution_bound_report(&phi, &psi, a, b, &spec)?;
    Ok(vec![row! {
        "alpha" => a, "beta" => b, "gamma" => r.gamma, "lhs" => r.lhs, "rhs_core" => r.rhs_core,
        "ratio" => r.ratio, "moment_mu" => r.moment_mu, "moment_nu" => r.moment_nu,
    }])
}

fn sample_task(cfg: &TaskConfig) -> Result<SampleSet, CliError> {
    let n = cfg.n.unwrap();
    let seed = cfg.seed.unwrap_or(0);
    Ok(match cfg.sampler.as_ref().unwrap() {
        SamplerSpec::Gaussian { t, d } => sample_gaussian(*t, *d, n, seed)?,
        SamplerSpec::Cauchy { d } => sample_isotropic_cauchy(*d, n, seed)?,
        SamplerSpec::Stable { p } => sample_sym_stable_1d(*p, n, seed)?,
        SamplerSpec::Linnik { p, beta } => sample_linnik_1d(*p, *beta, n, seed)?,
    })
}

/// One invariant: observed value, reference value and whether it passed.
struct Check {
    value: f64,
    expected: f64,
    pass: bool,
    detail: String,
}

fn close(value: f64, expected: f64, rel: f64) -> Check {
    let err = (value - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
    Check { value, expected, pass: err <= rel, detail: format!("relative error {err:.2e} (tol {rel:.0e})") }
}

fn close_abs(value: f64, expected: f64, tol: f64) -> Check {
    let err = (value - expected).abs();
    Check { value, expected, pass: err <= tol, detail: format!("absolute error {err:.2e} (tol {tol:.0e})") }
}

type CheckFn = Box<dyn Fn(&QuadratureSpec, u64) -> fourier_moments::Result<Check>>;

fn verify_suite() -> Vec<(&'static str, CheckFn)> {
    let mut v: Vec<(&'static str, CheckFn)> = Vec::new();
    v.push(("constant_i(1,1) = -pi", Box::new(|_, _| Ok(close_abs(constant_i(1, 1.0)?, -PI, 1e-10)))));
    v.push(("constant_i(3,3) = pi", Box::new(|_, _| Ok(close_abs(constant_i(3, 3.0)?, PI, 1e-10)))));
    v.push((
        "cauchy d=1 order 0.5 = sqrt 2",
        Box::new(|s, _| Ok(close(absolute_moment(&CharFn::stable(1.0, 1.0, 1)?, 0.5, s)?.value, 2f64.sqrt(), 1e-6))),
    ));
    v.push((
        "gaussian d=1 order 1 = 2/sqrt(pi)",
        Box::new(|s, _| Ok(close(absolute_moment(&CharFn::gaussian(1.0, 1)?, 1.0, s)?.value, 2.0 / PI.sqrt(), 1e-6))),
    ));
    v.push((
        "M12 and M13 coincide",
        Box::new(|s, _| {
            let l = CharFn::linnik(1.5, 2.0, 1)?;
            let a = moment_with(&l, 0.6, 1, Formula::M12, s)?.value;
            let b = moment_with(&l, 0.6, 1, Formula::M13, s)?.value;
            Ok(close(a, b, 1e-8))
        }),
    ));
    v.push((
        "even limit: gaussian order 2 = 2",
        Box::new(|s, _| Ok(close_abs(absolute_moment(&CharFn::gaussian(1.0, 1)?, 2.0, s)?.value, 2.0, 1e-4))),
    ));
    v.push((
        "empirical quadrature vs exact sum",
        Box::new(|s, _| {
            let xs: Vec<Vec<f64>> = (0..50).map(|j| vec![(j as f64 * 2.399).sin() * 1.5 + 0.3]).collect();
            let exact = xs.iter().map(|x| x[0].abs().sqrt()).sum::<f64>() / 50.0;
            Ok(close(absolute_moment(&CharFn::empirical(xs)?, 0.5, s)?.value, exact, 1e-3))
        }),
    ));
    v.push((
        "rho equals the k=1 seminorm",
        Box::new(|s, _| {
            let (g, one) = (CharFn::gaussian(1.0, 1)?, CharFn::one(1)?);
            Ok(close(rho_alpha(&g, &one, 0.5, s)?.value, seminorm_alpha_k(&g, &one, 0.5, 1, s)?.value, 1e-12))
        }),
    ));
    v.push((
        "rho(gaussian, delta) closed form",
        Box::new(|s, _| {
            let (t, a): (f64, f64) = (2.0, 0.5);
            let want = 2.0 * t.powf(a / 2.0) * gamma(1.0 - a / 2.0)? / a;
            Ok(close(rho_alpha(&CharFn::gaussian(t, 1)?, &CharFn::one(1)?, a, s)?.value, want, 1e-6))
        }),
    ));
    v.push((
        "d_inf(gaussian, delta) >= 0.999",
        Box::new(|_, _| {
            let d = d_inf(&CharFn::gaussian(1.0, 1)?, &CharFn::one(1)?, &MetricGrid::default())?.value;
            Ok(Check { value: d, expected: 0.999, pass: d >= 0.999, detail: "lower bound".into() })
        }),
    ));
    v.push((
        "membership: gaussian finite, cauchy order 1.5 not",
        Box::new(|s, _| {
            let g = membership(&CharFn::gaussian(1.0, 1)?, 1.5, 2, s)?;
            let c = membership(&CharFn::stable(1.0, 1.0, 1)?, 1.5, 2, s)?;
            let pass =
                g.classification == Classification::Finite && c.classification == Classification::DivergenceSuspected;
            Ok(Check { value: c.slope, expected: 1.5, pass, detail: format!("{:?} / {:?}", g.classification, c.classification) })
        }),
    ));
    v.push((
        "heat semigroup",
        Box::new(|_, _| {
            let g = CharFn::linnik(1.0, 1.0, 1)?;
            let two = evolve(&evolve(&g, 1.3, 0.4)?, 1.3, 0.9)?;
            let one = evolve(&g, 1.3, 1.3)?;
            let err = [0.1, 0.7, 2.5].iter().map(|x| (two.eval(&[*x]) - one.eval(&[*x])).norm()).fold(0.0, f64::max);
            Ok(close_abs(err, 0.0, 1e-14))
        }),
    ));
    v.push((
        "delta-initial moment scales like t^(alpha/p)",
        Box::new(|s, _| {
            let r = solution_moment_check(&CharFn::one(1)?, 1.5, 3.0, 0.7, None, s)?;
            Ok(close(r.moment.value, 3f64.powf(0.7 / 1.5) * ep_moment(1.5, 0.7, 1)?, 1e-6))
        }),
    ));
    v.push((
        "kernel sup = (4 pi t)^(-1/2)",
        Box::new(|_, _| {
            let s = derivative_sup(&CharFn::one(1)?, 2.0, 2.0, 0, &[0.0, 0.5])?;
            Ok(close(s, (8.0 * PI).powf(-0.5), 1e-9))
        }),
    ));
    v.push((
        "leibniz identity",
        Box::new(|_, _| {
            let (a, b) = (CharFn::linnik(1.2, 0.8, 1)?, CharFn::point_mass(&[0.7])?);
            let lhs = leibniz_difference(&a, &b, &[0.9], 4)?;
            let prod = CharFn::product(&a, &b)?;
            let rhs = fourier_moments::charfn::iterated_difference(&prod, &[0.9], 4)?;
            Ok(close_abs((lhs - rhs).norm(), 0.0, 1e-12))
        }),
    ));
    v.push((
        "cauchy * gaussian has no order-1.5 moment",
        Box::new(|s, _| {
            let r = convolution_moment(&CharFn::stable(1.0, 1.0, 1)?, &CharFn::gaussian(1.0, 1)?, 1.5, s);
            let pass = matches!(r, Err(Error::DivergenceSuspected(_)));
            Ok(Check { value: f64::NAN, expected: f64::NAN, pass, detail: format!("{:?}", r.map(|m| m.value)) })
        }),
    ));
    v.push((
        "monte carlo gaussian order 1",
        Box::new(|s, seed| {
            let (m, se) = mc_moment(&sample_gaussian(1.0, 1, 200_000, seed)?, 1.0)?;
            let e = absolute_moment(&CharFn::gaussian(1.0, 1)?, 1.0, s)?.value;
            let pass = (m - e).abs() <= 4.0 * se;
            Ok(Check { value: m, expected: e, pass, detail: format!("{:.2} standard errors", (m - e).abs() / se) })
        }),
    ));
    v.push((
        "stable tail constant p=1 d=1",
        Box::new(|_, _| Ok(close(80f64.powi(2) * ep_density(1.0, &[80.0], 0)?, bg_tail_constant(1.0, 1)?, 0.1))),
    ));
    v.push((
        "gamma mixture moment ratio",
        Box::new(|_, _| {
            let nu = gamma_quantile_grid(1.7, 200)?;
            let r = schoenberg_moment(&nu, 1.0, 0.4, 2)? / ep_moment(1.0, 0.4, 2)?;
            Ok(close(r, gamma(2.1)? / gamma(1.7)?, 1e-3))
        }),
    ));
    v
}

fn num(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn verify_task(cfg: &TaskConfig) -> Vec<Row> {
    let spec = cfg.spec();
    let seed = cfg.seed.unwrap_or(0);
    verify_suite()
        .into_iter()
        .map(|(name, f)| match f(&spec, seed) {
            Ok(c) => row! {
                "check" => name, "status" => if c.pass { "PASS" } else { "FAIL" },
                "value" => num(c.value), "expected" => num(c.expected), "detail" => c.detail,
            },
            Err(e) => row! {
                "check" => name, "status" => "FAIL", "value" => serde_json::Value::Null,
                "expected" => serde_json::Value::Null, "detail" => e.to_string(),
            },
        })
        .collect()
}
