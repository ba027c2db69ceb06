//! Practical positivity diagnostics.

use serde::{Deserialize, Serialize};

use super::EstimateError;
use crate::data::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariatePositivity {
    pub name: String,
    /// Fraction of target rows whose bin holds no source row with `Z = z`, indexed by `z`.
    pub violation_fraction: [f64; 2],
    /// Fraction of target rows outside the source range.
    pub outside_source_range: f64,
    pub target_min: f64,
    pub target_max: f64,
    pub source_min: f64,
    pub source_max: f64,
}

impl CovariatePositivity {
    /// Larger of the two per-arm violation fractions.
    pub fn max_violation(&self) -> f64 {
        self.violation_fraction[0].max(self.violation_fraction[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub n_bins: usize,
    pub covariates: Vec<CovariatePositivity>,
}

impl PositivityReport {
    pub fn get(&self, name: &str) -> Option<&CovariatePositivity> {
        self.covariates.iter().find(|c| c.name == name)
    }
}

/// Bins each covariate into `n_bins` equal-width bins over its pooled range
/// and measures how much target mass lands in bins without source support.
pub fn positivity_diagnostic(
    dataset: &Dataset,
    transport_set: &[String],
    n_bins: usize,
) -> Result<PositivityReport, EstimateError> {
    if n_bins < 2 {
        return Err(EstimateError::InvalidInput(format!("n_bins must be at least 2, got {n_bins}")));
    }
    let (source, target) = dataset.split_population()?;
    let z = dataset.z();
    let covariates = transport_set
        .iter()
        .map(|name| {
            let col = dataset.covariate(name)?;
            let (lo, hi) = min_max(col.iter().copied());
            let width = hi - lo;
            let bin = |x: f64| {
                if width > 0.0 {
                    (((x - lo) / width * n_bins as f64) as usize).min(n_bins - 1)
                } else {
                    0
                }
            };
            let mut support = vec![[false; 2]; n_bins];
            for &i in source.rows() {
                support[bin(col[i])][usize::from(z[i])] = true;
            }
            let (source_min, source_max) = min_max(source.rows().iter().map(|&i| col[i]));
            let (target_min, target_max) = min_max(target.rows().iter().map(|&i| col[i]));
            let mut violations = [0usize; 2];
            let mut outside = 0usize;
            for &i in target.rows() {
                let x = col[i];
                let b = bin(x);
                for (arm, count) in violations.iter_mut().enumerate() {
                    if !support[b][arm] {
                        *count += 1;
                    }
                }
                if x < source_min || x > source_max {
                    outside += 1;
                }
            }
            let n_t = target.len() as f64;
            Ok(CovariatePositivity {
                name: name.clone(),
                violation_fraction: violations.map(|v| v as f64 / n_t),
                outside_source_range: outside as f64 / n_t,
                target_min,
                target_max,
                source_min,
                source_max,
            })
        })
        .collect::<Result<_, EstimateError>>()?;
    Ok(PositivityReport { n_bins, covariates })
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}
