//! Batch driver: JSON task configs in, JSON or CSV reports out.

pub mod build;
pub mod config;
pub mod error;
pub mod report;
pub mod tasks;

pub use build::{build, ingest_samples};
pub use config::{Format, MeasureSpec, Task, TaskConfig};
pub use error::CliError;
pub use report::Report;
pub use tasks::{run, Output};
