//! Stratified transport for binary outcomes:
//! `P(Y=1 | do(Z=z), S=0) = Σ_strata P(Y=1 | Z=z, stratum, S=1) · P(stratum | S=0)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EstimateError;
use crate::data::Dataset;

/// Values of the stratifying variables, in the order of the table's names.
pub type Stratum = Vec<i64>;

/// `P(Y=1 | Z=z, stratum, S=1)` for `z = 0, 1`; `None` when the source has
/// no rows in that cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceConditionals {
    pub names: Vec<String>,
    pub table: BTreeMap<Stratum, [Option<f64>; 2]>,
}

/// `P(stratum | S=0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution {
    pub names: Vec<String>,
    pub table: BTreeMap<Stratum, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTransportResult {
    /// Transported risk under `Z = 0` and `Z = 1`.
    pub risks: [f64; 2],
    pub risk_difference: f64,
    /// `None` when the transported risk under `Z = 0` is zero.
    pub risk_ratio: Option<f64>,
}

pub const TARGET_MASS_TOLERANCE: f64 = 1e-9;

fn format_stratum(names: &[String], stratum: &[i64]) -> String {
    names.iter().zip(stratum).map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(", ")
}

pub fn discrete_transport(
    source: &SourceConditionals,
    target: &TargetDistribution,
) -> Result<DiscreteTransportResult, EstimateError> {
    if source.names != target.names {
        return Err(EstimateError::InvalidInput(format!(
            "source strata {:?} and target strata {:?} differ",
            source.names, target.names
        )));
    }
    let mut total = 0.0;
    for (stratum, &mass) in &target.table {
        if !(0.0..=1.0).contains(&mass) {
            return Err(EstimateError::InvalidInput(format!(
                "target mass {mass} for stratum ({}) is not a probability",
                format_stratum(&target.names, stratum)
            )));
        }
        total += mass;
    }
    if (total - 1.0).abs() > TARGET_MASS_TOLERANCE {
        return Err(EstimateError::InvalidInput(format!("target distribution sums to {total}, not 1")));
    }

    let mut risks = [0.0; 2];
    for (stratum, &mass) in &target.table {
        if mass == 0.0 {
            continue;
        }
        let cell = source.table.get(stratum);
        for (z, risk) in risks.iter_mut().enumerate() {
            let p = cell.and_then(|c| c[z]).ok_or_else(|| EstimateError::Positivity {
                stratum: format_stratum(&target.names, stratum),
                treatment: z as u8,
            })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(EstimateError::InvalidInput(format!("source risk {p} is not a probability")));
            }
            *risk += p * mass;
        }
    }
    Ok(DiscreteTransportResult {
        risks,
        risk_difference: risks[1] - risks[0],
        risk_ratio: (risks[0] > 0.0).then(|| risks[1] / risks[0]),
    })
}

fn stratum_of(cols: &[&[f64]], row: usize) -> Result<Stratum, EstimateError> {
    cols.iter()
        .map(|c| {
            let v = c[row];
            if v.fract() == 0.0 && v.is_finite() {
                Ok(v as i64)
            } else {
                Err(EstimateError::InvalidInput(format!("stratifying value {v} is not an integer")))
            }
        })
        .collect()
}

/// Empirical source risks and target stratum frequencies. Requires a binary
/// outcome and integer-valued stratifying covariates.
pub fn empirical_tables(
    dataset: &Dataset,
    strata: &[String],
) -> Result<(SourceConditionals, TargetDistribution), EstimateError> {
    let (source, target) = dataset.split_population()?;
    let cols: Vec<&[f64]> = strata.iter().map(|n| dataset.covariate(n)).collect::<Result<_, _>>()?;
    let y = dataset.y();
    if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(EstimateError::InvalidInput(format!("outcome value {v} is not binary")));
    }

    let mut counts: BTreeMap<Stratum, [(f64, f64); 2]> = BTreeMap::new();
    for &i in source.rows() {
        let cell = counts.entry(stratum_of(&cols, i)?).or_default();
        let arm = &mut cell[usize::from(dataset.z()[i])];
        arm.0 += y[i];
        arm.1 += 1.0;
    }
    let table = counts
        .into_iter()
        .map(|(k, arms)| (k, arms.map(|(events, n)| (n > 0.0).then(|| events / n))))
        .collect();

    let mut mass: BTreeMap<Stratum, f64> = BTreeMap::new();
    for &i in target.rows() {
        *mass.entry(stratum_of(&cols, i)?).or_default() += 1.0;
    }
    let n_target = target.len() as f64;
    mass.values_mut().for_each(|m| *m /= n_target);

    Ok((
        SourceConditionals { names: strata.to_vec(), table },
        TargetDistribution { names: strata.to_vec(), table: mass },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["B".into()]
    }

    #[test]
    fn null_effect_single_stratum() {
        let source = SourceConditionals { names: names(), table: BTreeMap::from([(vec![0], [Some(0.5), Some(0.5)])]) };
        let target = TargetDistribution { names: names(), table: BTreeMap::from([(vec![0], 1.0)]) };
        let r = discrete_transport(&source, &target).unwrap();
        assert_eq!(r.risk_difference, 0.0);
        assert_eq!(r.risk_ratio, Some(1.0));
    }

    #[test]
    fn standardizes_over_target_mass() {
        let source = SourceConditionals {
            names: names(),
            table: BTreeMap::from([(vec![0], [Some(0.2), Some(0.1)]), (vec![1], [Some(0.6), Some(0.3)])]),
        };
        let target = TargetDistribution { names: names(), table: BTreeMap::from([(vec![0], 0.75), (vec![1], 0.25)]) };
        let r = discrete_transport(&source, &target).unwrap();
        assert!((r.risks[0] - 0.3).abs() < 1e-15);
        assert!((r.risks[1] - 0.15).abs() < 1e-15);
        assert!((r.risk_ratio.unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn positivity_violation_names_the_stratum() {
        let source = SourceConditionals { names: names(), table: BTreeMap::from([(vec![0], [Some(0.2), None])]) };
        let target = TargetDistribution { names: names(), table: BTreeMap::from([(vec![0], 1.0)]) };
        let err = discrete_transport(&source, &target).unwrap_err();
        assert!(matches!(err, EstimateError::Positivity { ref stratum, treatment: 1 } if stratum == "B=0"));

        let source = SourceConditionals { names: names(), table: BTreeMap::from([(vec![0], [Some(0.2), Some(0.1)])]) };
        let target = TargetDistribution { names: names(), table: BTreeMap::from([(vec![0], 0.5), (vec![1], 0.5)]) };
        let err = discrete_transport(&source, &target).unwrap_err();
        assert!(err.to_string().contains("B=1"), "{err}");
    }

    #[test]
    fn zero_mass_strata_need_no_source_support() {
        let source = SourceConditionals { names: names(), table: BTreeMap::from([(vec![0], [Some(0.2), Some(0.1)])]) };
        let target = TargetDistribution { names: names(), table: BTreeMap::from([(vec![0], 1.0), (vec![1], 0.0)]) };
        assert!(discrete_transport(&source, &target).is_ok());
    }

    #[test]
    fn target_must_sum_to_one() {
        let source = SourceConditionals { names: names(), table: BTreeMap::from([(vec![0], [Some(0.2), Some(0.1)])]) };
        let target = TargetDistribution { names: names(), table: BTreeMap::from([(vec![0], 0.9)]) };
        assert!(matches!(discrete_transport(&source, &target), Err(EstimateError::InvalidInput(_))));
    }

    #[test]
    fn zero_control_risk_has_no_ratio() {
        let source = SourceConditionals { names: names(), table: BTreeMap::from([(vec![0], [Some(0.0), Some(0.1)])]) };
        let target = TargetDistribution { names: names(), table: BTreeMap::from([(vec![0], 1.0)]) };
        assert_eq!(discrete_transport(&source, &target).unwrap().risk_ratio, None);
    }
}
