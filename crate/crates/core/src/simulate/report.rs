use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{aggregate_metrics, truth_phi, Metrics, ReplicateGrid, SimConfig, SimError};
use crate::data::Population;
use crate::estimate::TransportEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub model: u8,
    pub ts_name: String,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub coverage: f64,
    pub mean_se: f64,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub truth: f64,
    pub config: SimConfig,
    pub cells: Vec<CellReport>,
}

impl SimulationReport {
    pub(super) fn from_grid(config: &SimConfig, grid: &ReplicateGrid) -> Result<Self, SimError> {
        let truth = truth_phi(config.models[0], Population::Target)?;
        let mut cells = Vec::new();
        for &model in &config.models {
            for (j, set) in config.transport_sets.iter().enumerate() {
                let ok: Vec<TransportEstimate> = grid
                    .results
                    .iter()
                    .filter(|r| r.model == model)
                    .filter_map(|r| r.estimates[j].clone())
                    .collect();
                let n_failed = config.replicates - ok.len();
                if n_failed * 100 > config.replicates {
                    return Err(SimError::TooManyFailures {
                        model,
                        transport_set: set.name.clone(),
                        failed: n_failed,
                        replicates: config.replicates,
                    });
                }
                let Metrics { bias, variance, mse, coverage, mean_se } =
                    aggregate_metrics(&ok, truth).expect("at most 1% of at least 2 replicates failed");
                cells.push(CellReport {
                    model,
                    ts_name: set.name.clone(),
                    bias,
                    variance,
                    mse,
                    coverage,
                    mean_se,
                    n_failed,
                });
            }
        }
        Ok(Self { truth, config: config.clone(), cells })
    }

    pub fn cell(&self, model: u8, ts_name: &str) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.model == model && c.ts_name == ts_name)
    }

    /// One row per cell: `model,ts_name,bias,variance,mse,coverage,mean_se,n_failed`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["model", "ts_name", "bias", "variance", "mse", "coverage", "mean_se", "n_failed"])
            .expect("in-memory write");
        for c in &self.cells {
            w.write_record([
                c.model.to_string(),
                c.ts_name.clone(),
                c.bias.to_string(),
                c.variance.to_string(),
                c.mse.to_string(),
                c.coverage.to_string(),
                c.mean_se.to_string(),
                c.n_failed.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    /// Transport sets down the side, one bias / variance / MSE / coverage
    /// group per model across the top.
    pub fn to_table(&self) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Truth {} | {} replicates of n = {} | {} bootstrap samples | seed {}",
            self.truth, cfg.replicates, cfg.n_per_replicate, cfg.n_boot, cfg.master_seed
        );
        let members: Vec<String> = cfg.transport_sets.iter().map(|s| format!("{{{}}}", s.members.join(", "))).collect();
        let name_w = cfg.transport_sets.iter().map(|s| s.name.len()).max().unwrap_or(0).max(3);
        let mem_w = members.iter().map(String::len).max().unwrap_or(0).max(7);
        const COL: usize = 9;
        let group_w = 4 * COL + 3;

        let _ = write!(out, "{:name_w$}  {:mem_w$}", "", "");
        for m in &cfg.models {
            let _ = write!(out, " | {:^group_w$}", format!("Model {m}"));
        }
        out.push('\n');
        let _ = write!(out, "{:name_w$}  {:mem_w$}", "Set", "Members");
        for _ in &cfg.models {
            let _ = write!(out, " | {:>COL$} {:>COL$} {:>COL$} {:>COL$}", "Bias", "Variance", "MSE", "Coverage");
        }
        out.push('\n');
        let width = name_w + 2 + mem_w + cfg.models.len() * (group_w + 3);
        out.push_str(&"-".repeat(width));
        out.push('\n');
        for (set, mem) in cfg.transport_sets.iter().zip(&members) {
            let _ = write!(out, "{:name_w$}  {:mem_w$}", set.name, mem);
            for &m in &cfg.models {
                match self.cell(m, &set.name) {
                    Some(c) => {
                        let _ = write!(
                            out,
                            " | {:>COL$.3} {:>COL$.3} {:>COL$.3} {:>COL$.3}",
                            c.bias, c.variance, c.mse, c.coverage
                        );
                    }
                    None => {
                        let _ = write!(out, " | {:>group_w$}", "-");
                    }
                }
            }
            out.push('\n');
        }
        let failed: usize = self.cells.iter().map(|c| c.n_failed).sum();
        if failed > 0 {
            let _ = writeln!(out, "{failed} failed estimates excluded");
        }
        out
    }
}
