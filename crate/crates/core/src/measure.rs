//! Finitely supported probability measures.

use std::io::Read;

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// A probability measure with finitely many atoms in R^d.
///
/// Points are stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Build from points and positive weights. Weights are renormalized to
    /// sum to one; they must already do so up to `1e-9`, otherwise the input
    /// is probably not what the caller meant.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("discrete measure needs at least one atom".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        let total: f64 = weights.iter().copied().collect::<NeumaierSum>().value();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weights sum to {total}, expected 1")));
        }
        Self::with_unnormalized(points, weights)
    }

    /// Build from points and positive weights of arbitrary total mass.
    pub fn with_unnormalized(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("discrete measure needs at least one atom".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Domain("points must have dimension >= 1".into()));
        }
        let mut flat = Vec::with_capacity(dim * points.len());
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain("atom coordinates must be finite".into()));
            }
            flat.extend_from_slice(p);
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("atom weights must be positive and finite".into()));
        }
        let total: f64 = weights.iter().copied().collect::<NeumaierSum>().value();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { dim, points: flat, weights })
    }

    /// Equal weights `1/n` on the given points (an empirical measure).
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::with_unnormalized(points, vec![1.0; n])
    }

    /// Single atom at `a`.
    pub fn point_mass(a: Vec<f64>) -> Result<Self> {
        Self::with_unnormalized(vec![a], vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    /// Exact absolute moment `sum_j w_j |x_j|^alpha`.
    pub fn moment(&self, alpha: f64) -> f64 {
        let mut s = NeumaierSum::new();
        for (x, w) in self.iter() {
            let r = norm(x);
            // 0^0 is taken as 1: the zeroth moment of a probability measure
            s.add(w * if alpha == 0.0 { 1.0 } else { r.powf(alpha) });
        }
        s.value()
    }

    /// Largest atom norm.
    pub fn max_norm(&self) -> f64 {
        self.iter().map(|(x, _)| norm(x)).fold(0.0, f64::max)
    }

    /// Whether the measure is invariant under `x -> -x`, checked exactly on
    /// the multiset of (point, weight) pairs.
    pub fn is_symmetric(&self) -> bool {
        let key = |x: &[f64], w: f64, sign: f64| {
            let mut v: Vec<f64> = x.iter().map(|c| sign * c + 0.0).collect();
            v.push(w);
            v
        };
        let cmp = |a: &Vec<f64>, b: &Vec<f64>| {
            a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        };
        let mut plus: Vec<Vec<f64>> = self.iter().map(|(x, w)| key(x, w, 1.0)).collect();
        let mut minus: Vec<Vec<f64>> = self.iter().map(|(x, w)| key(x, w, -1.0)).collect();
        plus.sort_by(cmp);
        minus.sort_by(cmp);
        plus == minus
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other` (all pairwise sums).
    pub fn convolve(&self, other: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut pts = Vec::with_capacity(self.len() * other.len());
        let mut ws = Vec::with_capacity(self.len() * other.len());
        for (x, w) in self.iter() {
            for (y, v) in other.iter() {
                pts.push(x.iter().zip(y).map(|(a, b)| a + b).collect());
                ws.push(w * v);
            }
        }
        DiscreteMeasure::with_unnormalized(pts, ws)
    }

    /// Law of `c X`.
    pub fn scaled(&self, c: f64) -> DiscreteMeasure {
        DiscreteMeasure {
            dim: self.dim,
            points: self.points.iter().map(|x| c * x).collect(),
            weights: self.weights.clone(),
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    match x.len() {
        1 => x[0].abs(),
        _ => x.iter().map(|c| c * c).sum::<f64>().sqrt(),
    }
}

/// First `K` atoms of `sum_k 2^{-k alpha} k^{-2} delta_{2^k e_1}`, renormalized.
///
/// The full series has every moment of order below `alpha` but none of order
/// above it; the truncations are used to watch moment integrals blow up.
pub fn pathological_measure(alpha: f64, truncation: usize, d: usize) -> Result<DiscreteMeasure> {
    if !(alpha > 0.0) {
        return Err(Error::Range(format!("alpha must be positive, got {alpha}")));
    }
    if truncation == 0 {
        return Err(Error::Range("truncation must be at least 1".into()));
    }
    if d == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    let mut pts = Vec::with_capacity(truncation);
    let mut ws = Vec::with_capacity(truncation);
    for k in 1..=truncation {
        let mut p = vec![0.0; d];
        p[0] = 2f64.powi(k as i32);
        pts.push(p);
        ws.push(2f64.powf(-(k as f64) * alpha) / (k * k) as f64);
    }
    DiscreteMeasure::with_unnormalized(pts, ws)
}

/// Read sample points from CSV: one row per sample, `d` numeric columns.
///
/// A first row that does not parse as numbers is treated as a header. Any
/// later row that fails to parse, or whose column count differs from the
/// first data row, is an error carrying its 1-based line number.
pub fn read_samples_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 1;
        let rec = rec.map_err(|e| Error::MalformedRow { line, message: e.to_string() })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(line);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(Error::MalformedRow { line, message: "non-finite value".into() });
                }
                match dim {
                    None => dim = Some(row.len()),
                    Some(d) if d != row.len() => {
                        return Err(Error::MalformedRow {
                            line,
                            message: format!("expected {d} columns, found {}", row.len()),
                        })
                    }
                    _ => {}
                }
                out.push(row);
            }
            Err(e) => {
                if out.is_empty() && dim.is_none() && idx == 0 {
                    continue; // header
                }
                return Err(Error::MalformedRow { line, message: e.to_string() });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Empty("sample file has no data rows".into()));
    }
    Ok(out)
}
