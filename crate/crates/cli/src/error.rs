use std::path::Path;

use plc_core::eval::EvalError;
use plc_core::insights::InsightError;
use plc_core::lnn::{LnnError, ModelIoError};
use plc_core::pruning::PruneError;
use plc_core::store::StoreError;
use plc_core::synth::SynthError;
use thiserror::Error;

/// Every failure maps to one of three exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration.
    #[error("usage: {0}")]
    Usage(String),
    /// Missing, malformed or mismatched inputs and artifacts.
    #[error("data: {0}")]
    Data(String),
    /// Training or scoring produced non-finite values.
    #[error("numeric: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    pub fn at(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PruneError> for CliError {
    fn from(e: PruneError) -> Self {
        match e {
            PruneError::Store(s) => s.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<LnnError> for CliError {
    fn from(e: LnnError) -> Self {
        match e {
            LnnError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            LnnError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ModelIoError> for CliError {
    fn from(e: ModelIoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::NanScore { .. } => CliError::Numeric(e.to_string()),
            EvalError::Model(m) => m.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<InsightError> for CliError {
    fn from(e: InsightError) -> Self {
        match e {
            InsightError::ZeroK => CliError::Usage(e.to_string()),
            InsightError::Model(m) => m.into(),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Io(_) => CliError::Data(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}
