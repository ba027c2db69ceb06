//! Monte Carlo variable-selection experiment.
//!
//! Each (model, replicate) pair draws one dataset and bootstraps every
//! transport set on it with shared resamples, so per-set estimates are paired.
//! Work items run on a bounded pool and are reduced in index order; all seeds
//! derive from the master seed, so reports do not depend on the worker count.

mod config;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{sample_dgp, DataError, DgpSpec, Population};
use crate::estimate::{bootstrap_estimates, BootstrapOptions, EstimateError, TransportEstimate};
use crate::rng::derive_seed;

pub use config::{standard_sets, NamedSet, SimConfig, WorkerCount};
pub use report::{CellReport, SimulationReport};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config `{key}`: {message}")]
    InvalidConfig { key: String, message: String },
    #[error("model {model}, {transport_set}: {failed} of {replicates} replicates failed, more than 1%")]
    TooManyFailures { model: u8, transport_set: String, failed: usize, replicates: usize },
    #[error("model {0} does not exist; models are 1, 2 and 3")]
    UnknownModel(u8),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// `E(Y^{Z=1}) - E(Y^{Z=0})` in `population` under any of the three models:
/// `20 + 10 E(MSTS | S) + 10 E(W_c)` with `E(MSTS | S) = 1 + 3S` and `E(W_c) = 1`.
pub fn truth_phi(model: u8, population: Population) -> Result<f64, SimError> {
    if !(1..=3).contains(&model) {
        return Err(SimError::UnknownModel(model));
    }
    let s = match population {
        Population::Source => 1.0,
        Population::Target => 0.0,
    };
    let mean_msts = 1.0 + 3.0 * s;
    let mean_wc = 1.0;
    Ok(20.0 + 10.0 * mean_msts + 10.0 * mean_wc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub bias: f64,
    /// Mean squared deviation from the replicate mean (divisor `R`).
    pub variance: f64,
    /// `bias² + variance`.
    pub mse: f64,
    pub coverage: f64,
    pub mean_se: f64,
}

/// Bias, variance, MSE and interval coverage of `estimates` against `truth`.
/// Returns `None` for an empty list.
pub fn aggregate_metrics(estimates: &[TransportEstimate], truth: f64) -> Option<Metrics> {
    if estimates.is_empty() {
        return None;
    }
    let r = estimates.len() as f64;
    let mean = estimates.iter().map(|e| e.phi_hat).sum::<f64>() / r;
    let variance = estimates.iter().map(|e| (e.phi_hat - mean).powi(2)).sum::<f64>() / r;
    let bias = mean - truth;
    let covered = estimates.iter().filter(|e| e.covers(truth)).count();
    Some(Metrics {
        bias,
        variance,
        mse: bias * bias + variance,
        coverage: covered as f64 / r,
        mean_se: estimates.iter().map(|e| e.se).sum::<f64>() / r,
    })
}

/// Estimates of every transport set on one replicate dataset; `None` marks a
/// failed estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub model: u8,
    pub replicate: usize,
    pub estimates: Vec<Option<TransportEstimate>>,
}

/// Per-replicate estimates in `(model, replicate)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateGrid {
    pub set_names: Vec<String>,
    pub results: Vec<ReplicateResult>,
}

impl ReplicateGrid {
    /// `phi_hat` per replicate for one cell, `None` where the estimate failed.
    pub fn phi_hats(&self, model: u8, set: &str) -> Vec<Option<f64>> {
        let Some(j) = self.set_names.iter().position(|n| n == set) else {
            return Vec::new();
        };
        self.results
            .iter()
            .filter(|r| r.model == model)
            .map(|r| r.estimates[j].as_ref().map(|e| e.phi_hat))
            .collect()
    }
}

/// Seed of the dataset drawn for `(model, replicate)`.
pub fn replicate_seed(master_seed: u64, model: u8, replicate: usize) -> u64 {
    derive_seed(master_seed, "replicate", &[u64::from(model), replicate as u64])
}

fn bootstrap_seed(master_seed: u64, model: u8, replicate: usize) -> u64 {
    derive_seed(master_seed, "replicate-bootstrap", &[u64::from(model), replicate as u64])
}

pub fn run_experiment(config: &SimConfig) -> Result<SimulationReport, SimError> {
    run_experiment_with_grid(config).map(|(report, _)| report)
}

pub fn run_experiment_with_grid(config: &SimConfig) -> Result<(SimulationReport, ReplicateGrid), SimError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.resolve())
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    let sets: Vec<Vec<String>> = config.transport_sets.iter().map(|s| s.members.clone()).collect();
    let jobs: Vec<(u8, usize)> =
        config.models.iter().flat_map(|&m| (0..config.replicates).map(move |r| (m, r))).collect();

    let results: Vec<ReplicateResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(model, replicate)| run_replicate(config, &sets, model, replicate))
            .collect::<Result<_, _>>()
    })?;

    let grid = ReplicateGrid {
        set_names: config.transport_sets.iter().map(|s| s.name.clone()).collect(),
        results,
    };
    let report = SimulationReport::from_grid(config, &grid)?;
    Ok((report, grid))
}

fn run_replicate(config: &SimConfig, sets: &[Vec<String>], model: u8, replicate: usize) -> Result<ReplicateResult, SimError> {
    let spec = DgpSpec::new(model, config.n_per_replicate, replicate_seed(config.master_seed, model, replicate))?;
    let dataset = sample_dgp(&spec)?;
    let mut options = BootstrapOptions::new(config.n_boot, bootstrap_seed(config.master_seed, model, replicate));
    options.ci = config.ci;
    options.expansion = config.expansion;
    let estimates = match bootstrap_estimates(&dataset, sets, &options) {
        Ok(per_set) => per_set.into_iter().map(Result::ok).collect(),
        Err(_) => vec![None; sets.len()],
    };
    Ok(ReplicateResult { model, replicate, estimates })
}
