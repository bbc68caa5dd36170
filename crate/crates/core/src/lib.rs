//! Absolute moments of probability measures computed from their
//! characteristic functions, Fourier-based probability metrics, and the
//! fractional heat equation with measure-valued initial data.

pub mod charfn;
pub mod closed_forms;
pub mod convolution;
pub mod error;
pub mod heat;
pub mod mc_oracle;
pub mod measure;
pub mod metrics;
pub mod moment_engine;
pub mod numeric;
pub mod quadrature;
pub mod specfun;

/// Library version, echoed in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use charfn::{CharFn, CustomOptions};
pub use convolution::ConvolutionBoundReport;
pub use error::{Error, Result};
pub use heat::{DecayReport, HeatSolution};
pub use mc_oracle::SampleSet;
pub use measure::DiscreteMeasure;
pub use metrics::{Classification, CompositeKind, MembershipReport, MetricGrid, MetricResult};
pub use moment_engine::{Formula, MomentResult, QuadratureSpec, TailMode};
