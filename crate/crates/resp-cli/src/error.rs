//! One error type per exit code, with a machine-readable category.
//!
//! Every failure surfaces on stderr as a single JSON line
//! `{"error":{"category":…,"exit":…,"message":…}}` so batch drivers can
//! branch on the category without parsing prose. The mapping is fixed:
//! configuration problems (bad config values, missing blocks, manifest
//! mismatches) exit 2, data problems (unreadable or malformed input files)
//! exit 3, numerical failures (factorization breakdown, non-finite values)
//! exit 4.

use resp_core::assess::AssessError;
use resp_core::gibbs::GibbsError;
use resp_core::posteriorops::PosteriorError;
use resp_core::reducedrank::RankError;
use resp_core::resplike::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    /// The stderr line: category and exit code first, message last.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": {
                "category": self.category(),
                "exit": self.exit_code(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}

pub fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

pub fn data_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Data(msg.to_string())
}

pub fn numerical_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Numerical(msg.to_string())
}

/// Classify a sampler error: bad settings are config problems, everything
/// that breaks mid-run (factorization, non-finite likelihood) is numerical.
pub fn from_gibbs(e: GibbsError) -> CliError {
    match e {
        GibbsError::Config(_) => CliError::Config(e.to_string()),
        GibbsError::BadChainFile(_) | GibbsError::Io(_) | GibbsError::Csv(_) => {
            CliError::Data(e.to_string())
        }
        GibbsError::Model(ref m) => from_model_ref(m, &e),
        _ => CliError::Numerical(e.to_string()),
    }
}

/// Classify a model error: shape/finiteness complaints about user-supplied
/// values are data problems; parameter-domain violations are config; the
/// rest (likelihood breakdown) is numerical.
pub fn from_model(e: ModelError) -> CliError {
    match &e {
        ModelError::Shape(_) | ModelError::NonFinite(_) => CliError::Data(e.to_string()),
        ModelError::BadParam { .. } | ModelError::Kernel(_) => CliError::Config(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn from_model_ref(m: &ModelError, outer: &dyn std::fmt::Display) -> CliError {
    match m {
        ModelError::Shape(_) | ModelError::NonFinite(_) => CliError::Data(outer.to_string()),
        ModelError::BadParam { .. } | ModelError::Kernel(_) => CliError::Config(outer.to_string()),
        _ => CliError::Numerical(outer.to_string()),
    }
}

pub fn from_posterior(e: PosteriorError) -> CliError {
    match &e {
        PosteriorError::Shape(_) | PosteriorError::Draws { .. } | PosteriorError::TooFewDraws => {
            CliError::Config(e.to_string())
        }
        PosteriorError::BadCovFile { .. } | PosteriorError::Io(_) => CliError::Data(e.to_string()),
        PosteriorError::Model(m) => from_model_ref(m, &e),
        _ => CliError::Numerical(e.to_string()),
    }
}

pub fn from_rank(e: RankError) -> CliError {
    match &e {
        RankError::NotCentered { .. } => CliError::Data(format!(
            "{e}; enable `standardize` so the remote field is centered before EOF analysis"
        )),
        RankError::RankExceeded { .. }
        | RankError::DegenerateBBox { .. }
        | RankError::EmptyKnotGrid
        | RankError::BadKnotCount
        | RankError::Kernel(_) => CliError::Config(e.to_string()),
        RankError::Shape(_) => CliError::Data(e.to_string()),
        RankError::Linalg(_) => CliError::Numerical(e.to_string()),
    }
}

pub fn from_assess(e: AssessError) -> CliError {
    match &e {
        AssessError::ZeroVariance { .. }
        | AssessError::ShortTraining { .. }
        | AssessError::TooFewYears(_)
        | AssessError::Empty(_)
        | AssessError::Shape(_)
        | AssessError::Io(_) => CliError::Data(e.to_string()),
        AssessError::Gibbs(GibbsError::Config(_)) => CliError::Config(e.to_string()),
        AssessError::BadCategory { .. } | AssessError::BadIndex { .. } => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Numerical(e.to_string()),
    }
}
