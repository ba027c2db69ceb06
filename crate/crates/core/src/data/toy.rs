//! Binary toy model with two population-dependent causes of the outcome:
//! `B` (high blood pressure) and `G` (risk-allele carrier).
//!
//! Only the conditional risk difference is pinned down by the example,
//! `P(Y=1|Z=1,B,G) - P(Y=1|Z=0,B,G) = -0.4 B - 0.001 (1 - B)`, together with
//! the target risk difference of -0.121. The remaining parameters are a
//! reconstruction: the target prevalence of `B` is solved from the risk
//! difference, and the baseline risk is chosen so the target risks come out at
//! 0.680 (control) and 0.559 (treated), and 0.632 / 0.511 when transported
//! with `B` alone.

use indexmap::IndexMap;

use super::{DataError, Dataset};
use crate::estimate::{SourceConditionals, TargetDistribution};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    /// `P(S = 1)`
    pub p_source: f64,
    /// `P(B = 1 | S = s)`, indexed by `s`
    pub p_b: [f64; 2],
    /// `P(G = 1 | S = s)`, indexed by `s`
    pub p_g: [f64; 2],
    /// `P(Y = 1 | Z = 0, B = 0, G = 0)`
    pub baseline: f64,
    /// additive effect of `B` on the control risk
    pub b_effect: f64,
    /// additive effect of `G` on the control risk
    pub g_effect: f64,
}

/// Target-population control risk the reconstruction is calibrated to.
const TARGET_CONTROL_RISK: f64 = 0.680;

impl Default for ToyModel {
    fn default() -> Self {
        // -0.4 p - 0.001 (1 - p) = -0.121
        let p_b_target = 0.120 / 0.399;
        let p_g = [0.3, 0.5];
        let b_effect = 0.2;
        // 0.632 - 0.680 = g_effect * (p_g[1] - p_g[0])
        let g_effect = -0.24;
        let baseline = TARGET_CONTROL_RISK - b_effect * p_b_target - g_effect * p_g[0];
        Self { p_source: 0.5, p_b: [p_b_target, 0.60], p_g, baseline, b_effect, g_effect }
    }
}

impl ToyModel {
    /// Conditional risk difference given `B`.
    pub fn risk_difference_given_b(b: u8) -> f64 {
        if b == 1 {
            -0.4
        } else {
            -0.001
        }
    }

    /// `P(Y = 1 | Z = z, B = b, G = g)`; identical in both populations.
    pub fn risk(&self, z: u8, b: u8, g: u8) -> f64 {
        let control = self.baseline + self.b_effect * f64::from(b) + self.g_effect * f64::from(g);
        control + f64::from(z) * Self::risk_difference_given_b(b)
    }

    fn bern(p: f64, v: u8) -> f64 {
        if v == 1 {
            p
        } else {
            1.0 - p
        }
    }

    /// Exact `P(Y^{Z=z} = 1 | S = 0)` for `z = 0, 1`.
    pub fn target_risks(&self) -> [f64; 2] {
        [0u8, 1].map(|z| {
            let mut total = 0.0;
            for b in 0..=1 {
                for g in 0..=1 {
                    total += self.risk(z, b, g) * Self::bern(self.p_b[0], b) * Self::bern(self.p_g[0], g);
                }
            }
            total
        })
    }

    /// Exact source conditionals and target distribution stratified on `{B, G}`.
    pub fn tables_bg(&self) -> (SourceConditionals, TargetDistribution) {
        let names = vec!["B".to_string(), "G".to_string()];
        let mut source = SourceConditionals { names: names.clone(), table: Default::default() };
        let mut target = TargetDistribution { names, table: Default::default() };
        for b in 0..=1u8 {
            for g in 0..=1u8 {
                let key = vec![i64::from(b), i64::from(g)];
                source.table.insert(key.clone(), [Some(self.risk(0, b, g)), Some(self.risk(1, b, g))]);
                target.table.insert(key, Self::bern(self.p_b[0], b) * Self::bern(self.p_g[0], g));
            }
        }
        (source, target)
    }

    /// Exact source conditionals and target distribution stratified on `{B}`;
    /// `G` is averaged over its source distribution.
    pub fn tables_b(&self) -> (SourceConditionals, TargetDistribution) {
        let names = vec!["B".to_string()];
        let mut source = SourceConditionals { names: names.clone(), table: Default::default() };
        let mut target = TargetDistribution { names, table: Default::default() };
        for b in 0..=1u8 {
            let risk = |z| (0..=1u8).map(|g| self.risk(z, b, g) * Self::bern(self.p_g[1], g)).sum::<f64>();
            source.table.insert(vec![i64::from(b)], [Some(risk(0)), Some(risk(1))]);
            target.table.insert(vec![i64::from(b)], Self::bern(self.p_b[0], b));
        }
        (source, target)
    }

    /// Draws `n` rows with covariates `B` and `G`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset, DataError> {
        if n < 2 {
            return Err(DataError::InvalidSpec(format!("n must be at least 2, got {n}")));
        }
        let mut rng = rng::substream(seed, "toy", &[]);
        let (mut s, mut z, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let (mut bs, mut gs) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let si = u8::from(rng::bernoulli(&mut rng, self.p_source));
            let b = u8::from(rng::bernoulli(&mut rng, self.p_b[usize::from(si)]));
            let g = u8::from(rng::bernoulli(&mut rng, self.p_g[usize::from(si)]));
            let zi = u8::from(rng::bernoulli(&mut rng, 0.5));
            let yi = rng::bernoulli(&mut rng, self.risk(zi, b, g));
            s.push(si);
            z.push(zi);
            y.push(if yi { 1.0 } else { 0.0 });
            bs.push(f64::from(b));
            gs.push(f64::from(g));
        }
        let covariates = IndexMap::from([("B".to_string(), bs), ("G".to_string(), gs)]);
        Dataset::new(s, z, y, covariates)
    }
}

/// Samples the default toy model.
pub fn sample_toy(n: usize, seed: u64) -> Result<Dataset, DataError> {
    ToyModel::default().sample(n, seed)
}
