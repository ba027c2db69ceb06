//! Transport estimators: parametric g-computation with bootstrap inference,
//! the discrete stratified transport formula, and positivity diagnostics.

mod bootstrap;
mod design;
mod discrete;
mod gcomp;
mod moments;
mod ols;
mod positivity;

use thiserror::Error;

use crate::data::DataError;

pub use bootstrap::{
    bootstrap_estimate, bootstrap_estimates, BootstrapEngine, BootstrapOptions, CiMethod, TransportEstimate, DEFAULT_MAX_RETRIES,
    WALD_Z,
};
pub use design::{expand_design, expand_design_with, DesignMatrix, DesignSpec, Expansion, Term, MAX_TRANSPORT_SET};
pub use discrete::{
    discrete_transport, empirical_tables, DiscreteTransportResult, SourceConditionals, Stratum, TargetDistribution,
};
pub use gcomp::{g_transport, g_transport_with, Standardization, TransportFit};
pub use ols::{fit_ols, fit_ols_owned, OlsFit, RANK_TOLERANCE};
pub use positivity::{positivity_diagnostic, CovariatePositivity, PositivityReport};

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("transport set has {size} variables; at most {limit} are supported")]
    TooManyVariables { size: usize, limit: usize },
    #[error("no design column survives the collinearity check")]
    NoRetainedColumns,
    #[error("{rows} rows cannot identify {columns} design columns")]
    TooFewRows { rows: usize, columns: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("positivity violation: target stratum ({stratum}) has no source data under Z={treatment}")]
    Positivity { stratum: String, treatment: u8 },
    #[error("{failed} of {n_boot} bootstrap replicates failed after retries")]
    BootstrapFailures { failed: usize, n_boot: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
