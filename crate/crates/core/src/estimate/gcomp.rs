//! Parametric g-computation transport estimator.
//!
//! The outcome model is fit on the source rows only; every target row is then
//! predicted with `Z` forced to 1 and to 0 at its observed covariates, and the
//! estimate is the mean of the differences.
//!
//! Covariates are centred and scaled with source moments before the design is
//! expanded. Both expansions span the same column space under any affine map of
//! a covariate, so predictions are unchanged while the design is much better
//! conditioned.

use super::design::{DesignSpec, Expansion, Term};
use super::ols::{fit_ols_owned, OlsFit};
use super::EstimateError;
use crate::data::{Dataset, PopulationView};

#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub names: Vec<String>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Source-population mean and standard deviation of each covariate. A
    /// constant covariate keeps scale 1.
    pub fn from_source(source: &PopulationView<'_>, names: &[String]) -> Result<Self, EstimateError> {
        let mut center = Vec::with_capacity(names.len());
        let mut scale = Vec::with_capacity(names.len());
        for name in names {
            let col = source.dataset().covariate(name)?;
            let n = source.len() as f64;
            let mean = source.rows().iter().map(|&i| col[i]).sum::<f64>() / n;
            let var = source.rows().iter().map(|&i| (col[i] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            center.push(mean);
            scale.push(if sd > 0.0 && sd.is_finite() { sd } else { 1.0 });
        }
        Ok(Self { names: names.to_vec(), center, scale })
    }

    /// Standardized covariate columns for `rows`, one `Vec` per covariate.
    pub fn columns(&self, dataset: &Dataset, rows: &[usize]) -> Result<Vec<Vec<f64>>, EstimateError> {
        self.names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let col = dataset.covariate(name)?;
                Ok(rows.iter().map(|&i| (col[i] - self.center[j]) / self.scale[j]).collect())
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct TransportFit {
    /// Estimated `E(Y^{Z=1}) - E(Y^{Z=0})` in the target population.
    pub phi_hat: f64,
    /// Source outcome model, on standardized covariates.
    pub fit: OlsFit,
    pub standardization: Standardization,
    pub n_source: usize,
    pub n_target: usize,
}

pub fn g_transport(dataset: &Dataset, transport_set: &[String]) -> Result<TransportFit, EstimateError> {
    g_transport_with(dataset, transport_set, Expansion::Full)
}

pub fn g_transport_with(
    dataset: &Dataset,
    transport_set: &[String],
    expansion: Expansion,
) -> Result<TransportFit, EstimateError> {
    let spec = DesignSpec::new(transport_set, expansion)?;
    let (source, target) = dataset.split_population()?;
    let standardization = Standardization::from_source(&source, transport_set)?;
    let source_contrast = difference_in_means(&source)?;

    let src_cols = standardization.columns(dataset, source.rows())?;
    let src_views: Vec<&[f64]> = src_cols.iter().map(Vec::as_slice).collect();
    let z: Vec<f64> = source.z().map(f64::from).collect();
    let y: Vec<f64> = source.y().collect();
    let fit = fit_ols_owned(spec.build(&z, &src_views), &y)?;

    if transport_set.is_empty() {
        // the intercept-and-Z model reproduces the arm means; use them directly
        return Ok(TransportFit { phi_hat: source_contrast, fit, standardization, n_source: source.len(), n_target: target.len() });
    }

    // prediction(Z=1) - prediction(Z=0) only involves terms containing Z
    let contrast: Vec<(Term, f64)> = spec
        .terms()
        .iter()
        .zip(&fit.coefficients)
        .filter(|(t, &b)| t.has_treatment() && b != 0.0)
        .map(|(&t, &b)| (t, b))
        .collect();
    let tgt_cols = standardization.columns(dataset, target.rows())?;
    let mut row = vec![0.0; transport_set.len()];
    let mut total = 0.0;
    for i in 0..target.len() {
        for (slot, col) in row.iter_mut().zip(&tgt_cols) {
            *slot = col[i];
        }
        let diff: f64 = contrast.iter().map(|&(t, b)| b * spec.evaluate(t, 1.0, &row)).sum();
        total += diff;
    }
    let phi_hat = total / target.len() as f64;
    if !phi_hat.is_finite() {
        return Err(EstimateError::NonFinite("transport estimate"));
    }
    Ok(TransportFit { phi_hat, fit, standardization, n_source: source.len(), n_target: target.len() })
}

/// `mean(Y | Z=1) - mean(Y | Z=0)` over the rows of `view`.
fn difference_in_means(view: &PopulationView<'_>) -> Result<f64, EstimateError> {
    let mut sum = [0.0; 2];
    let mut count = [0usize; 2];
    for (z, y) in view.z().zip(view.y()) {
        sum[usize::from(z)] += y;
        count[usize::from(z)] += 1;
    }
    if count.contains(&0) {
        return Err(EstimateError::InvalidInput("a treatment arm has no source rows".into()));
    }
    Ok(sum[1] / count[1] as f64 - sum[0] / count[0] as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    #[test]
    fn empty_set_is_source_difference_in_means() {
        let s = vec![1, 1, 1, 1, 1, 0, 0];
        let z = vec![0, 1, 1, 0, 1, 0, 1];
        let y = vec![1.0, 4.0, 6.5, 2.0, 3.0, 100.0, -50.0];
        let d = Dataset::new(s, z, y, IndexMap::new()).unwrap();
        let fit = g_transport(&d, &[]).unwrap();
        let expected = (4.0 + 6.5 + 3.0) / 3.0 - (1.0 + 2.0) / 2.0;
        assert_eq!(fit.phi_hat, expected);
        assert_eq!((fit.n_source, fit.n_target), (5, 2));
    }

    #[test]
    fn effect_modifier_shift_is_transported() {
        // Y = 1 + Z (2 + 3V) exactly; target mean of V is 2 → Φ = 8
        let s = vec![1, 1, 1, 1, 1, 1, 0, 0];
        let z = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let v = vec![0.0, 0.0, 1.0, 1.0, 0.5, 0.5, 1.0, 3.0];
        let y: Vec<f64> = (0..8).map(|i| 1.0 + f64::from(z[i]) * (2.0 + 3.0 * v[i])).collect();
        let cov = IndexMap::from([("V".to_string(), v)]);
        let d = Dataset::new(s, z, y, cov).unwrap();
        let fit = g_transport(&d, &["V".to_string()]).unwrap();
        assert!((fit.phi_hat - 8.0).abs() < 1e-10, "{}", fit.phi_hat);
    }

    #[test]
    fn unknown_covariate() {
        let d = Dataset::new(vec![1, 0], vec![0, 1], vec![0.0, 1.0], IndexMap::new()).unwrap();
        assert!(matches!(
            g_transport(&d, &["NOPE".to_string()]),
            Err(EstimateError::Data(crate::data::DataError::UnknownCovariate(_)))
        ));
    }
}
