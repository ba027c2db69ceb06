//! Design matrices with treatment-by-covariate interaction expansions.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::EstimateError;
use crate::data::Dataset;

/// Largest transport set accepted by [`expand_design`]; the full expansion
/// then has 2^13 columns.
pub const MAX_TRANSPORT_SET: usize = 12;

/// Product of a subset of `{Z} ∪ transport_set`. Bit 0 is the treatment,
/// bit `j + 1` the `j`-th transport-set covariate; the empty product is the
/// intercept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term(pub u32);

impl Term {
    pub const INTERCEPT: Term = Term(0);
    pub const TREATMENT: Term = Term(1);

    pub fn has_treatment(self) -> bool {
        self.0 & 1 == 1
    }

    /// Covariate members as a bitmask over the transport set.
    pub fn covariate_mask(self) -> u32 {
        self.0 >> 1
    }

    pub fn covariate(j: usize) -> Term {
        Term(1 << (j + 1))
    }

    pub fn with_treatment(self) -> Term {
        Term(self.0 | 1)
    }

    pub fn order(self) -> u32 {
        self.0.count_ones()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expansion {
    /// Every product of every subset of `{Z} ∪ transport_set`.
    #[default]
    Full,
    /// Intercept, `Z`, each covariate and each `Z × covariate` product.
    TreatmentInteractions,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignSpec {
    transport_set: Vec<String>,
    terms: Vec<Term>,
    expansion: Expansion,
}

impl DesignSpec {
    pub fn new(transport_set: &[String], expansion: Expansion) -> Result<Self, EstimateError> {
        let k = transport_set.len();
        if k > MAX_TRANSPORT_SET {
            return Err(EstimateError::TooManyVariables { size: k, limit: MAX_TRANSPORT_SET });
        }
        for (i, name) in transport_set.iter().enumerate() {
            if transport_set[..i].contains(name) {
                return Err(EstimateError::InvalidInput(format!("`{name}` listed twice in the transport set")));
            }
        }
        let terms = match expansion {
            Expansion::Full => (0..1u32 << (k + 1)).map(Term).collect(),
            Expansion::TreatmentInteractions => (0..1u32 << (k + 1))
                .map(Term)
                .filter(|t| t.covariate_mask().count_ones() <= 1)
                .collect(),
        };
        Ok(Self { transport_set: transport_set.to_vec(), terms, expansion })
    }

    pub fn transport_set(&self) -> &[String] {
        &self.transport_set
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn expansion(&self) -> Expansion {
        self.expansion
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, term: Term) -> Option<usize> {
        self.terms.binary_search(&term).ok()
    }

    /// Human-readable label such as `Z:MSTS:W_c`.
    pub fn label(&self, term: Term) -> String {
        if term == Term::INTERCEPT {
            return "(Intercept)".to_string();
        }
        let mut parts = Vec::new();
        if term.has_treatment() {
            parts.push("Z");
        }
        for (j, name) in self.transport_set.iter().enumerate() {
            if term.covariate_mask() >> j & 1 == 1 {
                parts.push(name);
            }
        }
        parts.join(":")
    }

    /// Value of `term` for one row, given `Z` and the transport-set values.
    #[inline]
    pub fn evaluate(&self, term: Term, z: f64, covariates: &[f64]) -> f64 {
        let mut value = if term.has_treatment() { z } else { 1.0 };
        let mut mask = term.covariate_mask();
        while mask != 0 {
            let j = mask.trailing_zeros() as usize;
            value *= covariates[j];
            mask &= mask - 1;
        }
        value
    }

    /// Column-major design for the given rows of `Z` and covariate columns.
    pub fn build(&self, z: &[f64], covariates: &[&[f64]]) -> DesignMatrix {
        let n = z.len();
        let mut data = vec![0.0; n * self.terms.len()];
        for (c, &term) in self.terms.iter().enumerate() {
            let col = &mut data[c * n..(c + 1) * n];
            if term.has_treatment() {
                col.copy_from_slice(z);
            } else {
                col.fill(1.0);
            }
            let mut mask = term.covariate_mask();
            while mask != 0 {
                let j = mask.trailing_zeros() as usize;
                for (v, x) in col.iter_mut().zip(covariates[j]) {
                    *v *= x;
                }
                mask &= mask - 1;
            }
        }
        DesignMatrix { spec: self.clone(), n_rows: n, data }
    }
}

impl fmt::Display for DesignSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.terms.iter().map(|&t| self.label(t)).collect();
        write!(f, "Y ~ {}", labels.join(" + "))
    }
}

/// Column-major `n_rows × terms` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    spec: DesignSpec,
    n_rows: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    /// Wraps raw column-major data; every column belongs to one term of `spec`.
    pub fn from_columns(spec: DesignSpec, n_rows: usize, data: Vec<f64>) -> Result<Self, EstimateError> {
        if data.len() != n_rows * spec.len() {
            return Err(EstimateError::InvalidInput(format!(
                "design data has {} values, expected {} × {}",
                data.len(),
                n_rows,
                spec.len()
            )));
        }
        Ok(Self { spec, n_rows, data })
    }

    pub fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.spec.len()
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_rows..(c + 1) * self.n_rows]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.n_rows + row]
    }

    pub(crate) fn into_parts(self) -> (DesignSpec, usize, Vec<f64>) {
        (self.spec, self.n_rows, self.data)
    }
}

/// Full interaction design over `rows` of `dataset`, using observed `Z`.
pub fn expand_design(dataset: &Dataset, transport_set: &[String], rows: &[usize]) -> Result<DesignMatrix, EstimateError> {
    expand_design_with(dataset, transport_set, rows, Expansion::Full)
}

pub fn expand_design_with(
    dataset: &Dataset,
    transport_set: &[String],
    rows: &[usize],
    expansion: Expansion,
) -> Result<DesignMatrix, EstimateError> {
    let spec = DesignSpec::new(transport_set, expansion)?;
    let cols: Vec<Vec<f64>> = transport_set
        .iter()
        .map(|name| dataset.covariate(name).map(|c| rows.iter().map(|&i| c[i]).collect()))
        .collect::<Result<_, _>>()?;
    let z: Vec<f64> = rows.iter().map(|&i| f64::from(dataset.z()[i])).collect();
    let views: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    Ok(spec.build(&z, &views))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn column_counts() {
        assert_eq!(DesignSpec::new(&[], Expansion::Full).unwrap().len(), 2);
        let one = DesignSpec::new(&names(&["V"]), Expansion::Full).unwrap();
        let labels: Vec<String> = one.terms().iter().map(|&t| one.label(t)).collect();
        assert_eq!(labels, vec!["(Intercept)", "Z", "V", "Z:V"]);
        assert_eq!(DesignSpec::new(&names(&["A", "B"]), Expansion::Full).unwrap().len(), 8);
        let ts10 = names(&["MSTS", "W_a", "W_b", "W_c", "W_d", "W_e"]);
        assert_eq!(DesignSpec::new(&ts10, Expansion::Full).unwrap().len(), 128);
        assert_eq!(DesignSpec::new(&ts10, Expansion::TreatmentInteractions).unwrap().len(), 14);
    }

    #[test]
    fn full_expansion_contains_every_subset_once() {
        let spec = DesignSpec::new(&names(&["A", "B", "C"]), Expansion::Full).unwrap();
        let mut seen = std::collections::HashSet::new();
        for t in spec.terms() {
            assert!(seen.insert(t.0));
        }
        assert_eq!(seen.len(), 16);
        assert_eq!(spec.terms()[0], Term::INTERCEPT);
    }

    #[test]
    fn cap_and_duplicates() {
        let thirteen: Vec<String> = (0..13).map(|i| format!("V{i}")).collect();
        assert!(matches!(
            DesignSpec::new(&thirteen, Expansion::Full),
            Err(EstimateError::TooManyVariables { size: 13, limit: 12 })
        ));
        assert!(DesignSpec::new(&thirteen[..12], Expansion::Full).is_ok());
        assert!(DesignSpec::new(&names(&["A", "A"]), Expansion::Full).is_err());
    }

    #[test]
    fn build_multiplies_members() {
        let spec = DesignSpec::new(&names(&["A", "B"]), Expansion::Full).unwrap();
        let x = spec.build(&[1.0, 0.0], &[&[2.0, 3.0], &[5.0, 7.0]]);
        for (c, &t) in spec.terms().iter().enumerate() {
            for r in 0..2 {
                let expect = spec.evaluate(t, [1.0, 0.0][r], &[[2.0, 3.0][r], [5.0, 7.0][r]]);
                assert_eq!(x.get(r, c), expect);
            }
        }
        let zab = spec.position(Term(0b111)).unwrap();
        assert_eq!(x.column(zab), &[10.0, 0.0]);
    }
}
