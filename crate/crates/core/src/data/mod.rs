//! Column-oriented datasets with a population indicator `S`, a binary
//! treatment `Z`, a real outcome `Y` and named real covariates.

mod csv_io;
mod dgp;
mod toy;

use std::path::PathBuf;

use indexmap::IndexMap;
use thiserror::Error;

pub use csv_io::{read_csv, read_csv_from, write_csv, write_csv_to};
pub use dgp::{sample_dgp, DgpSpec, SIM_COVARIATES};
pub use toy::{sample_toy, ToyModel};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("column `{column}` has {found} rows, expected {expected}")]
    LengthMismatch { column: String, expected: usize, found: usize },
    #[error("column `{column}` row {row}: value {value} is not 0 or 1")]
    NotBinary { column: String, row: usize, value: f64 },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("covariate name `{0}` is reserved")]
    ReservedName(String),
    #[error("missing mandatory column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}, column `{column}`: `{value}` is not a number")]
    NonNumeric { line: u64, column: String, value: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged { line: u64, expected: u64, found: u64 },
    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),
    #[error("{0} population is empty")]
    EmptyPopulation(Population),
    #[error("invalid sampler specification: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    /// `S = 1`
    Source,
    /// `S = 0`
    Target,
}

impl std::fmt::Display for Population {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Population::Source => "source",
            Population::Target => "target",
        })
    }
}

pub const RESERVED_COLUMNS: [&str; 3] = ["S", "Z", "Y"];

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    s: Vec<u8>,
    z: Vec<u8>,
    y: Vec<f64>,
    covariates: IndexMap<String, Vec<f64>>,
}

fn check_binary(column: &str, values: &[u8]) -> Result<(), DataError> {
    match values.iter().position(|&v| v > 1) {
        Some(row) => Err(DataError::NotBinary { column: column.to_string(), row, value: f64::from(values[row]) }),
        None => Ok(()),
    }
}

impl Dataset {
    pub fn new(s: Vec<u8>, z: Vec<u8>, y: Vec<f64>, covariates: IndexMap<String, Vec<f64>>) -> Result<Self, DataError> {
        let n = s.len();
        for (name, len) in [("Z", z.len()), ("Y", y.len())] {
            if len != n {
                return Err(DataError::LengthMismatch { column: name.into(), expected: n, found: len });
            }
        }
        check_binary("S", &s)?;
        check_binary("Z", &z)?;
        for (name, col) in &covariates {
            if RESERVED_COLUMNS.contains(&name.as_str()) {
                return Err(DataError::ReservedName(name.clone()));
            }
            if col.len() != n {
                return Err(DataError::LengthMismatch { column: name.clone(), expected: n, found: col.len() });
            }
        }
        Ok(Self { s, z, y, covariates })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s(&self) -> &[u8] {
        &self.s
    }

    pub fn z(&self) -> &[u8] {
        &self.z
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn covariate_names(&self) -> impl Iterator<Item = &str> {
        self.covariates.keys().map(String::as_str)
    }

    pub fn covariate(&self, name: &str) -> Result<&[f64], DataError> {
        self.covariates.get(name).map(Vec::as_slice).ok_or_else(|| DataError::UnknownCovariate(name.to_string()))
    }

    pub fn covariates(&self) -> &IndexMap<String, Vec<f64>> {
        &self.covariates
    }

    /// New dataset with covariate `name` replaced by `f(value)`.
    pub fn map_covariate(&self, name: &str, f: impl Fn(f64) -> f64) -> Result<Dataset, DataError> {
        let mut out = self.clone();
        let col = out.covariates.get_mut(name).ok_or_else(|| DataError::UnknownCovariate(name.to_string()))?;
        col.iter_mut().for_each(|v| *v = f(*v));
        Ok(out)
    }

    /// Rows with `S = 1` and rows with `S = 0`.
    pub fn split_population(&self) -> Result<(PopulationView<'_>, PopulationView<'_>), DataError> {
        let (source, target): (Vec<usize>, Vec<usize>) = (0..self.len()).partition(|&i| self.s[i] == 1);
        if source.is_empty() {
            return Err(DataError::EmptyPopulation(Population::Source));
        }
        if target.is_empty() {
            return Err(DataError::EmptyPopulation(Population::Target));
        }
        Ok((
            PopulationView { data: self, population: Population::Source, rows: source },
            PopulationView { data: self, population: Population::Target, rows: target },
        ))
    }
}

/// Row subset of a [`Dataset`] belonging to one population.
#[derive(Debug, Clone)]
pub struct PopulationView<'a> {
    data: &'a Dataset,
    population: Population,
    rows: Vec<usize>,
}

impl<'a> PopulationView<'a> {
    pub fn population(&self) -> Population {
        self.population
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.data
    }

    /// Row indices into the parent dataset.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn z(&self) -> impl Iterator<Item = u8> + '_ {
        self.rows.iter().map(|&i| self.data.z[i])
    }

    pub fn y(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|&i| self.data.y[i])
    }

    pub fn covariate(&self, name: &str) -> Result<Vec<f64>, DataError> {
        let col = self.data.covariate(name)?;
        Ok(self.rows.iter().map(|&i| col[i]).collect())
    }
}
