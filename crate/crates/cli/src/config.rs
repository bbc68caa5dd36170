//! Task configuration, read from JSON.
//!
//! ```json
//! {
//!   "task": "moment",
//!   "measure": { "family": "stable", "p": 1.0, "d": 1 },
//!   "alpha": 0.5,
//!   "quadrature": { "rel_tol": 1e-10 }
//! }
//! ```
//!
//! Unknown keys are rejected so typos surface as errors instead of silently
//! falling back to defaults.

use std::path::{Path, PathBuf};

use fourier_moments::{CompositeKind, Formula, MetricGrid, QuadratureSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Moment,
    Metric,
    Membership,
    Heat,
    Convolve,
    Verify,
    Sample,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Moment => "moment",
            Task::Metric => "metric",
            Task::Membership => "membership",
            Task::Heat => "heat",
            Task::Convolve => "convolve",
            Task::Verify => "verify",
            Task::Sample => "sample",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

/// Which metric the `metric` task computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "d-inf")]
    DInf,
    #[serde(rename = "d-beta")]
    DBeta,
    #[serde(rename = "rho")]
    Rho,
    /// `||phi - psi||_{alpha,k}`
    #[serde(rename = "seminorm")]
    Seminorm,
    /// `||Re phi - Re psi||_{alpha,k}`
    #[serde(rename = "seminorm-re")]
    SeminormRe,
    /// `sup |Delta_xi phi(0)| / |xi|^beta` of the first measure
    #[serde(rename = "kbeta")]
    KBeta,
    D,
    F,
    G,
    H,
}

impl MetricKind {
    pub fn composite(self) -> Option<CompositeKind> {
        match self {
            MetricKind::D => Some(CompositeKind::D),
            MetricKind::F => Some(CompositeKind::F),
            MetricKind::G => Some(CompositeKind::G),
            MetricKind::H => Some(CompositeKind::H),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeatCheck {
    /// Moment of the solution against the propagation bound.
    #[default]
    Moment,
    /// Sup-distance decay of two solutions against the refined bound.
    Rate,
    /// `rho_alpha(f_t, mu)` for small `t`.
    SmallTime,
    /// `sup_x |d^sigma (f - g)(x, t)|` by Fourier inversion.
    Sup,
}

fn one() -> f64 {
    1.0
}

fn dim1() -> usize {
    1
}

/// Declarative description of a probability measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Characteristic function `e^{-t |xi|^2}`.
    Gaussian {
        #[serde(default = "one")]
        t: f64,
        #[serde(default = "dim1")]
        d: usize,
    },
    /// `e^{-t |xi|^p}`.
    Stable {
        p: f64,
        #[serde(default = "one")]
        t: f64,
        #[serde(default = "dim1")]
        d: usize,
    },
    /// `e^{-|xi|}`.
    Cauchy {
        #[serde(default = "dim1")]
        d: usize,
    },
    /// `(1 + |xi|^p)^{-beta}`.
    Linnik {
        p: f64,
        beta: f64,
        #[serde(default = "dim1")]
        d: usize,
    },
    /// `sum_j w_j e^{-t_j |xi|^p}`.
    Schoenberg {
        p: f64,
        #[serde(default = "dim1")]
        d: usize,
        t: Vec<f64>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    PointMass { at: Vec<f64> },
    Discrete {
        points: Vec<Vec<f64>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// Empirical measure of a CSV sample file.
    Samples { path: PathBuf },
    /// First `truncation` atoms of `sum_k 2^{-k alpha} k^{-2} delta_{2^k e_1}`.
    Pathological {
        alpha: f64,
        truncation: usize,
        #[serde(default = "dim1")]
        d: usize,
    },
    /// Convolution of the factors.
    Product { factors: Vec<MeasureSpec> },
    Mixture { components: Vec<MixtureComponent> },
    /// Law of `c X`.
    Scaled { c: f64, measure: Box<MeasureSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub measure: MeasureSpec,
}

/// Sampler used by the `sample` task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplerSpec {
    Gaussian {
        #[serde(default = "one")]
        t: f64,
        #[serde(default = "dim1")]
        d: usize,
    },
    Cauchy {
        #[serde(default = "dim1")]
        d: usize,
    },
    Stable { p: f64 },
    Linnik { p: f64, beta: f64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub task: Option<Task>,
    #[serde(alias = "a")]
    pub measure: Option<MeasureSpec>,
    #[serde(alias = "b")]
    pub other: Option<MeasureSpec>,
    pub alpha: Option<f64>,
    /// Several orders at once (`moment` task).
    pub alphas: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub k: Option<usize>,
    pub formula: Option<Formula>,
    pub p: Option<f64>,
    pub t: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub sigma: Option<usize>,
    pub kind: Option<MetricKind>,
    pub check: Option<HeatCheck>,
    /// Evaluation points for the `sup` heat check.
    pub x: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub sampler: Option<SamplerSpec>,
    pub quadrature: QuadratureSpec,
    pub grid: MetricGrid,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    /// Directory that relative sample paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl TaskConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Resolve a path from the config against its directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// The quadrature spec with the `tol` override applied.
    pub fn spec(&self) -> QuadratureSpec {
        let mut spec = self.quadrature.clone();
        if let Some(t) = self.tol {
            spec.rel_tol = t;
        }
        spec
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring where and how the
    /// report is written.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.out = None;
        c.format = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(&bytes))
    }
}
