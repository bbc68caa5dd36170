//! Turning a [`MeasureSpec`] into a characteristic function.

use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use fourier_moments::measure::pathological_measure;
use fourier_moments::{CharFn, CustomOptions, DiscreteMeasure, SampleSet};
use num_complex::Complex64;

use crate::config::{MeasureSpec, MixtureComponent, TaskConfig};
use crate::error::CliError;

/// Read a sample CSV; the dimension is the number of columns.
pub fn ingest_samples(path: &Path) -> Result<SampleSet, CliError> {
    let f = File::open(path).map_err(|e| CliError::Io(format!("cannot open sample file {}: {e}", path.display())))?;
    SampleSet::read_csv(f, "samples").map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn build(spec: &MeasureSpec, cfg: &TaskConfig) -> Result<CharFn, CliError> {
    Ok(match spec {
        MeasureSpec::Gaussian { t, d } => CharFn::gaussian(*t, *d)?,
        MeasureSpec::Stable { p, t, d } => CharFn::stable(*p, *t, *d)?,
        MeasureSpec::Cauchy { d } => CharFn::stable(1.0, 1.0, *d)?,
        MeasureSpec::Linnik { p, beta, d } => CharFn::linnik(*p, *beta, *d)?,
        MeasureSpec::Schoenberg { p, d, t, weights } => {
            let pts = t.iter().map(|s| vec![*s]).collect();
            CharFn::schoenberg(discrete(pts, weights.clone())?, *p, *d)?
        }
        MeasureSpec::PointMass { at } => CharFn::point_mass(at)?,
        MeasureSpec::Discrete { points, weights } => CharFn::discrete(discrete(points.clone(), weights.clone())?),
        MeasureSpec::Samples { path } => ingest_samples(&cfg.resolve(path))?.to_charfn()?,
        MeasureSpec::Pathological { alpha, truncation, d } => {
            CharFn::discrete(pathological_measure(*alpha, *truncation, *d)?)
        }
        MeasureSpec::Product { factors } => {
            let mut it = factors.iter();
            let first = it.next().ok_or_else(|| CliError::Config("product needs at least one factor".into()))?;
            let mut acc = build(first, cfg)?;
            for f in it {
                acc = CharFn::product(&acc, &build(f, cfg)?)?;
            }
            acc
        }
        MeasureSpec::Mixture { components } => mixture(components, cfg)?,
        MeasureSpec::Scaled { c, measure } => CharFn::dilate(&build(measure, cfg)?, *c)?,
    })
}

fn discrete(points: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<DiscreteMeasure, CliError> {
    Ok(match weights {
        Some(w) => DiscreteMeasure::new(points, w)?,
        None => DiscreteMeasure::uniform(points)?,
    })
}

/// Convex combination. Discrete components are merged into one discrete
/// measure; otherwise the parts are summed pointwise and each optional
/// capability (profile, closed-form moment, derivative) is kept only when
/// every component has it.
fn mixture(components: &[MixtureComponent], cfg: &TaskConfig) -> Result<CharFn, CliError> {
    if components.is_empty() {
        return Err(CliError::Config("mixture needs at least one component".into()));
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    if components.iter().any(|c| !(c.weight >= 0.0)) || !(total > 0.0) {
        return Err(CliError::Config("mixture weights must be nonnegative with a positive sum".into()));
    }
    let parts: Vec<(f64, CharFn)> = components
        .iter()
        .map(|c| Ok((c.weight / total, build(&c.measure, cfg)?)))
        .collect::<Result<_, CliError>>()?;
    let d = parts[0].1.dim();
    if let Some((_, bad)) = parts.iter().find(|(_, p)| p.dim() != d) {
        return Err(fourier_moments::Error::DimensionMismatch { expected: d, got: bad.dim() }.into());
    }

    if parts.iter().all(|(_, p)| p.atoms().is_some()) {
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for (w, p) in &parts {
            for (x, v) in p.atoms().unwrap().iter() {
                pts.push(x.to_vec());
                ws.push(w * v);
            }
        }
        return Ok(CharFn::discrete(DiscreteMeasure::new(pts, ws)?));
    }

    let parts = Arc::new(parts);
    let all = |f: &dyn Fn(&CharFn) -> bool| parts.iter().all(|(_, p)| f(p));
    let mut opts = CustomOptions {
        is_real: all(&|p| p.is_real()),
        decays: all(&|p| p.decays()),
        scale_hint: Some(parts.iter().map(|(_, p)| p.scale_hint()).fold(f64::INFINITY, f64::min)),
        ..Default::default()
    };
    if all(&|p| p.is_radial()) {
        let ps = parts.clone();
        opts.profile = Some(Arc::new(move |r| ps.iter().map(|(w, p)| *w * p.profile(r).unwrap_or_default()).sum()));
    }
    if all(&|p| p.derivative(&vec![0; d], &vec![0.0; d]).is_some()) {
        let ps = parts.clone();
        opts.derivative = Some(Arc::new(move |s, xi| ps.iter().map(|(w, p)| *w * p.derivative(s, xi).unwrap_or_default()).sum()));
    }
    if all(&|p| p.analytic_moment(0.5).is_some()) {
        let ps = parts.clone();
        opts.analytic_moment = Some(Arc::new(move |a| {
            let mut acc = 0.0;
            for (w, p) in ps.iter() {
                acc += w * p.analytic_moment(a).expect("checked above")?;
            }
            Ok(acc)
        }));
    }
    let ps = parts.clone();
    let eval = Arc::new(move |xi: &[f64]| ps.iter().map(|(w, p)| *w * p.eval(xi)).sum::<Complex64>());
    Ok(CharFn::custom(d, eval, opts)?)
}
