//! Samplers for the three data-generating models of the variable-selection
//! experiment.
//!
//! ```text
//! S ~ Ber(0.5), Z ~ Ber(0.5)
//! MSTS, W_a, W_b ~ N(1 + 3S, sd_m)      sd_1 = 1 + 5S, sd_2 = 1 + 3S, sd_3 = 1 + S
//! W_c, W_d ~ N(1, 1), W_e ~ N(0, 1)
//! Y ~ N(100 + 20Z + 10 MSTS Z + 10 W_a + 10 W_c Z + 10 W_d, sd 5)
//! ```

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};
use crate::rng;

/// Covariate columns produced by [`sample_dgp`], in column order.
pub const SIM_COVARIATES: [&str; 6] = ["MSTS", "W_a", "W_b", "W_c", "W_d", "W_e"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DgpSpec {
    /// Data-generating model, 1, 2 or 3.
    pub model: u8,
    /// Total rows across both populations.
    pub n: usize,
    pub seed: u64,
}

impl DgpSpec {
    pub fn new(model: u8, n: usize, seed: u64) -> Result<Self, DataError> {
        let spec = Self { model, n, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if !(1..=3).contains(&self.model) {
            return Err(DataError::InvalidSpec(format!("model must be 1, 2 or 3, got {}", self.model)));
        }
        if self.n < 2 {
            return Err(DataError::InvalidSpec(format!("n must be at least 2, got {}", self.n)));
        }
        Ok(())
    }

    /// Standard deviation of MSTS, W_a and W_b given `S = s`.
    pub fn shifted_sd(&self, s: u8) -> f64 {
        let slope = match self.model {
            1 => 5.0,
            2 => 3.0,
            _ => 1.0,
        };
        1.0 + slope * f64::from(s)
    }
}

pub const OUTCOME_SD: f64 = 5.0;

/// Conditional mean of `Y`.
#[inline]
pub fn outcome_mean(z: f64, msts: f64, w_a: f64, w_c: f64, w_d: f64) -> f64 {
    100.0 + 20.0 * z + 10.0 * msts * z + 10.0 * w_a + 10.0 * w_c * z + 10.0 * w_d
}

/// Draws `spec.n` i.i.d. rows. Deterministic in `spec`.
pub fn sample_dgp(spec: &DgpSpec) -> Result<Dataset, DataError> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = rng::substream(spec.seed, "dgp", &[u64::from(spec.model)]);
    let mut s = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut cols: [Vec<f64>; 6] = Default::default();
    for c in &mut cols {
        c.reserve_exact(n);
    }
    for _ in 0..n {
        let si = u8::from(rng::bernoulli(&mut rng, 0.5));
        let zi = u8::from(rng::bernoulli(&mut rng, 0.5));
        let shifted_mean = 1.0 + 3.0 * f64::from(si);
        let sd = spec.shifted_sd(si);
        let msts = rng::normal(&mut rng, shifted_mean, sd);
        let w_a = rng::normal(&mut rng, shifted_mean, sd);
        let w_b = rng::normal(&mut rng, shifted_mean, sd);
        let w_c = rng::normal(&mut rng, 1.0, 1.0);
        let w_d = rng::normal(&mut rng, 1.0, 1.0);
        let w_e = rng::normal(&mut rng, 0.0, 1.0);
        let mean = outcome_mean(f64::from(zi), msts, w_a, w_c, w_d);
        y.push(rng::normal(&mut rng, mean, OUTCOME_SD));
        s.push(si);
        z.push(zi);
        for (col, v) in cols.iter_mut().zip([msts, w_a, w_b, w_c, w_d, w_e]) {
            col.push(v);
        }
    }
    let covariates: IndexMap<String, Vec<f64>> =
        SIM_COVARIATES.iter().map(|name| name.to_string()).zip(cols).collect();
    Dataset::new(s, z, y, covariates)
}
