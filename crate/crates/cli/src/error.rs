use fourier_moments::Error;
use serde_json::json;

/// Failure of a CLI run, mapped onto a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    /// A parameter violates a hypothesis checked before dispatch.
    #[error("{0}")]
    Hypothesis(String),
    #[error(transparent)]
    Engine(#[from] Error),
    #[error("{0} verification check(s) failed")]
    Verify(usize),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Hypothesis(_) => "range",
            CliError::Verify(_) => "verify",
            CliError::Engine(e) => match e {
                Error::Pole(_) | Error::Domain(_) => "domain",
                Error::Range(_) => "range",
                Error::DimensionMismatch { .. } | Error::UnsupportedDimension(_) => "dimension",
                Error::DivergenceSuspected(_) | Error::SeriesDivergence(_) => "divergence",
                Error::NonConvergence(_) => "non-convergence",
                Error::MissingOracle(_) => "missing-oracle",
                Error::Empty(_) | Error::MalformedRow { .. } => "input",
                Error::Io(_) => "io",
            },
        }
    }

    /// 2: bad input, 3: parameter out of range, 4: numerical failure, 5: verify failures.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" | "io" | "input" => 2,
            "range" | "domain" | "dimension" | "missing-oracle" => 3,
            "verify" => 5,
            _ => 4,
        }
    }

    /// The machine-readable object written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() } })
    }
}
