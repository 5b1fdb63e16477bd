use std::fmt;
use std::io;
use std::path::Path;

use attn_topo_core::attention::AttnError;
use attn_topo_core::classifier::ClassifierError;
use attn_topo_core::features::{CsvError, FeatureError};
use attn_topo_core::synth::SynthError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage,
    Data,
    Numeric,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Usage => 1,
            ExitKind::Data => 2,
            ExitKind::Numeric => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        Self::new(ExitKind::Data, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<AttnError> for CliError {
    fn from(e: AttnError) -> Self {
        Self::new(ExitKind::Data, e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        Self::new(ExitKind::Data, e.to_string())
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        Self::new(ExitKind::Data, e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        Self::new(ExitKind::Usage, e.to_string())
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        let kind = match e {
            ClassifierError::NonFiniteFeature { .. }
            | ClassifierError::NonFiniteStatistics { .. }
            | ClassifierError::NonFiniteLoss { .. } => ExitKind::Numeric,
            ClassifierError::TrainFraction(_) | ClassifierError::Lambda(_) => ExitKind::Usage,
            _ => ExitKind::Data,
        };
        Self::new(kind, e.to_string())
    }
}
