use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::numerics::NumericsError;
use crate::params::ParamError;
use crate::sim::SimError;

/// Umbrella error for callers that do not care which layer failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
