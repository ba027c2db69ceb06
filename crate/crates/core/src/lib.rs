//! Transporting causal effect estimates from a source to a target population.
//!
//! * [`diagram`]: selection diagrams, d-separation and s-admissible sets.
//! * [`data`]: the dataset model, CSV interchange and the simulation samplers.
//! * [`estimate`]: the g-computation transport estimator, bootstrap inference,
//!   the discrete transport formula and positivity diagnostics.
//! * [`simulate`]: the Monte Carlo variable-selection experiment.

pub mod data;
pub mod diagram;
pub mod estimate;
pub mod rng;
pub mod simulate;

pub use diagram::{parse_diagram, AdmissibilityMode, DiagramError, SelectionDiagram, TransportSet};
