//! Stratified nonparametric bootstrap for the g-computation estimator.
//!
//! Source and target rows are resampled separately at their original sizes.
//! Replicate `b` on attempt `a` draws from `substream(seed, "bootstrap", [b, a])`,
//! so results do not depend on batching or thread count. A replicate whose
//! source fit loses rank relative to the original sample is redrawn on the next
//! attempt.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{DesignSpec, Expansion};
use super::gcomp::{g_transport_with, Standardization};
use super::moments::{MomentEngine, SetLayout, MAX_TABLE_ENTRIES};
use super::ols::fit_ols_owned;
use super::EstimateError;
use crate::data::{Dataset, PopulationView};
use crate::rng::{index, substream};

pub const WALD_Z: f64 = 1.96;
pub const DEFAULT_MAX_RETRIES: usize = 10;
const BATCH: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// `phi_hat ± 1.96 se`.
    #[default]
    Wald,
    /// 2.5% and 97.5% quantiles of the replicate estimates.
    Percentile,
}

/// How replicate fits are computed. Both give the same estimates up to
/// floating-point rounding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapEngine {
    /// Sufficient statistics when the monomial table fits in memory, refits otherwise.
    #[default]
    Auto,
    Moments,
    Refit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub n_boot: usize,
    pub seed: u64,
    pub ci: CiMethod,
    pub expansion: Expansion,
    pub max_retries: usize,
    pub engine: BootstrapEngine,
}

impl BootstrapOptions {
    pub fn new(n_boot: usize, seed: u64) -> Self {
        Self {
            n_boot,
            seed,
            ci: CiMethod::Wald,
            expansion: Expansion::Full,
            max_retries: DEFAULT_MAX_RETRIES,
            engine: BootstrapEngine::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportEstimate {
    pub phi_hat: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_boot: usize,
    /// Replicates that still failed after every retry.
    pub n_failed: usize,
    /// Replicates that needed at least one redraw.
    pub n_redrawn: usize,
}

impl TransportEstimate {
    pub fn covers(&self, truth: f64) -> bool {
        self.ci_low <= truth && truth <= self.ci_high
    }
}

pub fn bootstrap_estimate(
    dataset: &Dataset,
    transport_set: &[String],
    options: &BootstrapOptions,
) -> Result<TransportEstimate, EstimateError> {
    bootstrap_estimates(dataset, &[transport_set.to_vec()], options)?
        .pop()
        .expect("one set in, one result out")
}

/// Bootstraps several transport sets on shared resamples, so estimates for
/// different sets are paired replicate by replicate. The outer error covers
/// problems with the dataset itself; each set then succeeds or fails on its own.
pub fn bootstrap_estimates(
    dataset: &Dataset,
    sets: &[Vec<String>],
    options: &BootstrapOptions,
) -> Result<Vec<Result<TransportEstimate, EstimateError>>, EstimateError> {
    if options.n_boot < 2 {
        return Err(EstimateError::InvalidInput(format!("n_boot must be at least 2, got {}", options.n_boot)));
    }
    let (source, target) = dataset.split_population()?;
    let points: Vec<Result<f64, EstimateError>> = sets
        .iter()
        .map(|ts| g_transport_with(dataset, ts, options.expansion).map(|f| f.phi_hat))
        .collect();
    let live: Vec<usize> = (0..sets.len()).filter(|&i| points[i].is_ok()).collect();
    let live_sets: Vec<&[String]> = live.iter().map(|&i| sets[i].as_slice()).collect();

    let mut replicates = vec![Vec::new(); sets.len()];
    let mut failed = vec![0usize; sets.len()];
    let mut redrawn = vec![0usize; sets.len()];
    if !live.is_empty() {
        let runner = Runner::new(dataset, &source, &target, &live_sets, options)?;
        let (reps, fails, redraws) = runner.run();
        for (slot, &i) in live.iter().enumerate() {
            replicates[i] = reps[slot].clone();
            failed[i] = fails[slot];
            redrawn[i] = redraws[slot];
        }
    }

    Ok(points
        .into_iter()
        .enumerate()
        .map(|(i, point)| {
            let phi_hat = point?;
            summarize(phi_hat, &replicates[i], failed[i], redrawn[i], options)
        })
        .collect())
}

fn summarize(
    phi_hat: f64,
    replicates: &[f64],
    n_failed: usize,
    n_redrawn: usize,
    options: &BootstrapOptions,
) -> Result<TransportEstimate, EstimateError> {
    let n_boot = options.n_boot;
    if n_failed * 100 > n_boot || replicates.len() < 2 {
        return Err(EstimateError::BootstrapFailures { failed: n_failed, n_boot });
    }
    let m = replicates.len() as f64;
    let mean = replicates.iter().sum::<f64>() / m;
    let se = (replicates.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    if !se.is_finite() {
        return Err(EstimateError::NonFinite("bootstrap standard error"));
    }
    let (ci_low, ci_high) = match options.ci {
        CiMethod::Wald => (phi_hat - WALD_Z * se, phi_hat + WALD_Z * se),
        CiMethod::Percentile => {
            let mut sorted = replicates.to_vec();
            sorted.sort_by(f64::total_cmp);
            (quantile(&sorted, 0.025).min(phi_hat), quantile(&sorted, 0.975).max(phi_hat))
        }
    };
    Ok(TransportEstimate { phi_hat, se, ci_low, ci_high, n_boot, n_failed, n_redrawn })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Multiplicities for one resample of both populations.
fn draw_counts(seed: u64, replicate: usize, attempt: usize, n_source: usize, n_target: usize) -> (Vec<u32>, Vec<u32>) {
    let mut rng = substream(seed, "bootstrap", &[replicate as u64, attempt as u64]);
    let mut src = vec![0u32; n_source];
    for _ in 0..n_source {
        src[index(&mut rng, n_source)] += 1;
    }
    let mut tgt = vec![0u32; n_target];
    for _ in 0..n_target {
        tgt[index(&mut rng, n_target)] += 1;
    }
    (src, tgt)
}

enum Backend<'a> {
    Moments(MomentEngine),
    Refit(RefitBackend<'a>),
}

struct RefitBackend<'a> {
    dataset: &'a Dataset,
    source_rows: Vec<usize>,
    target_rows: Vec<usize>,
    specs: Vec<DesignSpec>,
    standardization: Vec<Standardization>,
}

struct Runner<'a> {
    backend: Backend<'a>,
    expected_rank: Vec<usize>,
    n_source: usize,
    n_target: usize,
    seed: u64,
    n_boot: usize,
    max_retries: usize,
}

/// Rank and contrast, or `None` when the fit fails outright.
type Outcome = Option<(usize, f64)>;

impl<'a> Runner<'a> {
    fn new(
        dataset: &'a Dataset,
        source: &PopulationView<'_>,
        target: &PopulationView<'_>,
        sets: &[&[String]],
        options: &BootstrapOptions,
    ) -> Result<Self, EstimateError> {
        let specs: Vec<DesignSpec> =
            sets.iter().map(|ts| DesignSpec::new(ts, options.expansion)).collect::<Result<_, _>>()?;
        let mut union: Vec<String> = Vec::new();
        for ts in sets {
            for name in ts.iter() {
                if !union.contains(name) {
                    union.push(name.clone());
                }
            }
        }
        let use_moments = match options.engine {
            BootstrapEngine::Moments => true,
            BootstrapEngine::Refit => false,
            BootstrapEngine::Auto => MomentEngine::table_entries(union.len(), source.len()) <= MAX_TABLE_ENTRIES,
        };
        let backend = if use_moments {
            let std = Standardization::from_source(source, &union)?;
            let layouts = sets
                .iter()
                .zip(&specs)
                .map(|(ts, spec)| {
                    let idx: Vec<usize> =
                        ts.iter().map(|n| union.iter().position(|u| u == n).expect("in union")).collect();
                    SetLayout::new(spec, &idx)
                })
                .collect();
            let z: Vec<u8> = source.z().collect();
            let y: Vec<f64> = source.y().collect();
            Backend::Moments(MomentEngine::new(
                &std.columns(dataset, source.rows())?,
                &z,
                &y,
                &std.columns(dataset, target.rows())?,
                target.len(),
                layouts,
            ))
        } else {
            let standardization =
                sets.iter().map(|ts| Standardization::from_source(source, ts)).collect::<Result<_, _>>()?;
            Backend::Refit(RefitBackend {
                dataset,
                source_rows: source.rows().to_vec(),
                target_rows: target.rows().to_vec(),
                specs,
                standardization,
            })
        };
        let mut runner = Self {
            backend,
            expected_rank: Vec::new(),
            n_source: source.len(),
            n_target: target.len(),
            seed: options.seed,
            n_boot: options.n_boot,
            max_retries: options.max_retries,
        };
        let unit = runner.evaluate(&[vec![1; source.len()]], &[vec![1; target.len()]]);
        runner.expected_rank = unit[0].iter().map(|o| o.map_or(0, |(rank, _)| rank)).collect();
        Ok(runner)
    }

    fn n_sets(&self) -> usize {
        match &self.backend {
            Backend::Moments(engine) => engine.n_sets(),
            Backend::Refit(r) => r.specs.len(),
        }
    }

    fn evaluate(&self, src: &[Vec<u32>], tgt: &[Vec<u32>]) -> Vec<Vec<Outcome>> {
        match &self.backend {
            Backend::Moments(engine) => engine
                .evaluate(src, tgt)
                .into_iter()
                .map(|row| row.into_iter().map(|r| Some((r.rank, r.phi))).collect())
                .collect(),
            Backend::Refit(r) => src.iter().zip(tgt).map(|(s, t)| r.evaluate(s, t)).collect(),
        }
    }

    fn accept(&self, set: usize, outcome: Outcome) -> Option<f64> {
        outcome.filter(|&(rank, phi)| rank == self.expected_rank[set] && phi.is_finite()).map(|(_, phi)| phi)
    }

    /// Per-set replicate estimates in replicate order, failure counts and redraw counts.
    fn run(&self) -> (Vec<Vec<f64>>, Vec<usize>, Vec<usize>) {
        let n_sets = self.n_sets();
        let starts: Vec<usize> = (0..self.n_boot).step_by(BATCH).collect();
        let batches: Vec<Vec<Vec<Option<f64>>>> = starts
            .par_iter()
            .map(|&start| {
                let end = (start + BATCH).min(self.n_boot);
                let (src, tgt): (Vec<_>, Vec<_>) =
                    (start..end).map(|b| draw_counts(self.seed, b, 0, self.n_source, self.n_target)).unzip();
                self.evaluate(&src, &tgt)
                    .into_iter()
                    .map(|row| row.into_iter().enumerate().map(|(s, o)| self.accept(s, o)).collect())
                    .collect()
            })
            .collect();

        let mut reps = vec![Vec::with_capacity(self.n_boot); n_sets];
        let mut failed = vec![0; n_sets];
        let mut redrawn = vec![0; n_sets];
        for (b, row) in batches.into_iter().flatten().enumerate() {
            for (s, value) in row.into_iter().enumerate() {
                let value = match value {
                    Some(v) => Some(v),
                    None => {
                        redrawn[s] += 1;
                        self.retry(b, s)
                    }
                };
                match value {
                    Some(v) => reps[s].push(v),
                    None => failed[s] += 1,
                }
            }
        }
        (reps, failed, redrawn)
    }

    fn retry(&self, replicate: usize, set: usize) -> Option<f64> {
        (1..=self.max_retries).find_map(|attempt| {
            let (src, tgt) = draw_counts(self.seed, replicate, attempt, self.n_source, self.n_target);
            self.accept(set, self.evaluate(&[src], &[tgt])[0][set])
        })
    }
}

impl RefitBackend<'_> {
    fn evaluate(&self, src_counts: &[u32], tgt_counts: &[u32]) -> Vec<Outcome> {
        let expand = |rows: &[usize], counts: &[u32]| -> Vec<usize> {
            rows.iter().zip(counts).flat_map(|(&r, &c)| std::iter::repeat(r).take(c as usize)).collect()
        };
        let src_rows = expand(&self.source_rows, src_counts);
        let tgt_rows = expand(&self.target_rows, tgt_counts);
        let z: Vec<f64> = src_rows.iter().map(|&i| f64::from(self.dataset.z()[i])).collect();
        let y: Vec<f64> = src_rows.iter().map(|&i| self.dataset.y()[i]).collect();
        self.specs
            .iter()
            .zip(&self.standardization)
            .map(|(spec, std)| {
                let src_cols = std.columns(self.dataset, &src_rows).ok()?;
                let views: Vec<&[f64]> = src_cols.iter().map(Vec::as_slice).collect();
                let fit = fit_ols_owned(spec.build(&z, &views), &y).ok()?;
                let tgt_cols = std.columns(self.dataset, &tgt_rows).ok()?;
                let mut row = vec![0.0; tgt_cols.len()];
                let mut total = 0.0;
                for i in 0..tgt_rows.len() {
                    for (slot, col) in row.iter_mut().zip(&tgt_cols) {
                        *slot = col[i];
                    }
                    for (&t, &b) in spec.terms().iter().zip(&fit.coefficients) {
                        if t.has_treatment() && b != 0.0 {
                            total += b * spec.evaluate(t, 1.0, &row);
                        }
                    }
                }
                Some((fit.rank(), total / tgt_rows.len() as f64))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    fn toy_dataset() -> Dataset {
        let n = 60;
        let s: Vec<u8> = (0..n).map(|i| u8::from(i % 3 != 0)).collect();
        let z: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let v: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64 / 3.0).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 2.0 + f64::from(z[i]) * (1.0 + v[i]) + ((i * 13) % 5) as f64 * 0.1)
            .collect();
        Dataset::new(s, z, y, IndexMap::from([("V".to_string(), v)])).unwrap()
    }

    #[test]
    fn deterministic_given_seed() {
        let d = toy_dataset();
        let ts = vec!["V".to_string()];
        let opts = BootstrapOptions::new(2, 9);
        let a = bootstrap_estimate(&d, &ts, &opts).unwrap();
        let b = bootstrap_estimate(&d, &ts, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.ci_low <= a.phi_hat && a.phi_hat <= a.ci_high);
    }

    #[test]
    fn engines_agree() {
        let d = toy_dataset();
        let ts = vec!["V".to_string()];
        let mut opts = BootstrapOptions::new(40, 3);
        opts.engine = BootstrapEngine::Moments;
        let m = bootstrap_estimate(&d, &ts, &opts).unwrap();
        opts.engine = BootstrapEngine::Refit;
        let r = bootstrap_estimate(&d, &ts, &opts).unwrap();
        assert_eq!(m.phi_hat, r.phi_hat);
        assert!((m.se - r.se).abs() < 1e-9 * (1.0 + r.se), "{} vs {}", m.se, r.se);
    }

    #[test]
    fn rejects_tiny_n_boot() {
        let d = toy_dataset();
        assert!(matches!(
            bootstrap_estimate(&d, &[], &BootstrapOptions::new(1, 0)),
            Err(EstimateError::InvalidInput(_))
        ));
    }

    #[test]
    fn percentile_interval_brackets_estimate() {
        let d = toy_dataset();
        let mut opts = BootstrapOptions::new(50, 1);
        opts.ci = CiMethod::Percentile;
        let e = bootstrap_estimate(&d, &["V".to_string()], &opts).unwrap();
        assert!(e.ci_low <= e.phi_hat && e.phi_hat <= e.ci_high);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.5), 2.0);
    }
}
