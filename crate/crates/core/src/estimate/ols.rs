//! Least squares by Householder QR with column pivoting.
//!
//! At step `k` the remaining column with the largest residual norm is moved to
//! position `k`. The factorization stops once that norm falls to
//! `RANK_TOLERANCE × (largest initial column norm)`; the columns left over are
//! reported as dropped and get a zero coefficient.

use super::design::{DesignMatrix, DesignSpec, Term};
use super::EstimateError;

pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub design: DesignSpec,
    /// One coefficient per design term; dropped terms carry 0.
    pub coefficients: Vec<f64>,
    /// Classical standard errors; NaN for dropped terms or zero residual df.
    pub std_errors: Vec<f64>,
    pub dropped_terms: Vec<Term>,
    pub residual_sd: f64,
    pub n_used: usize,
}

impl OlsFit {
    pub fn rank(&self) -> usize {
        self.design.len() - self.dropped_terms.len()
    }

    pub fn coefficient(&self, term: Term) -> Option<f64> {
        self.design.position(term).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, term: Term) -> Option<f64> {
        self.design.position(term).map(|i| self.std_errors[i])
    }

    /// Fitted value for one row of `Z` and transport-set values.
    pub fn predict(&self, z: f64, covariates: &[f64]) -> f64 {
        self.design
            .terms()
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, &b)| b != 0.0)
            .map(|(&t, &b)| b * self.design.evaluate(t, z, covariates))
            .sum()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn fit_ols(design: &DesignMatrix, y: &[f64]) -> Result<OlsFit, EstimateError> {
    fit_ols_owned(design.clone(), y)
}

/// As [`fit_ols`], consuming the design to factor it in place.
pub fn fit_ols_owned(design: DesignMatrix, y: &[f64]) -> Result<OlsFit, EstimateError> {
    let (spec, n, mut a) = design.into_parts();
    let p = spec.len();
    if y.len() != n {
        return Err(EstimateError::InvalidInput(format!("design has {n} rows but y has {}", y.len())));
    }
    if a.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(EstimateError::InvalidInput("design or outcome contains non-finite values".into()));
    }
    let col = |j: usize| j * n..(j + 1) * n;

    let mut perm: Vec<usize> = (0..p).collect();
    let mut norms: Vec<f64> = (0..p).map(|j| dot(&a[col(j)], &a[col(j)])).collect();
    let mut exact_norms = norms.clone();
    let largest = norms.iter().copied().fold(0.0, f64::max).sqrt();
    let tol = RANK_TOLERANCE * largest;
    let mut qty = y.to_vec();
    let mut rdiag = vec![0.0; p];

    let steps = n.min(p);
    let mut rank = 0;
    while rank < steps {
        let k = rank;
        // pivot: largest remaining norm, lowest index on ties
        let (offset, &best) = norms[k..]
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
        if best.max(0.0).sqrt() <= tol {
            break;
        }
        let jp = k + offset;
        if jp != k {
            let (lo, hi) = a.split_at_mut(jp * n);
            lo[k * n..(k + 1) * n].swap_with_slice(&mut hi[..n]);
            perm.swap(k, jp);
            norms.swap(k, jp);
            exact_norms.swap(k, jp);
        }

        // Householder reflector zeroing a[k+1.., k]
        let ck = col(k);
        let x = &mut a[ck.start + k..ck.end];
        let sigma = dot(x, x).sqrt();
        let alpha = if x[0] > 0.0 { -sigma } else { sigma };
        x[0] -= alpha;
        let vnorm2 = dot(x, x);
        rdiag[k] = alpha;
        if vnorm2 > 0.0 {
            let v = x.to_vec();
            let scale = 2.0 / vnorm2;
            for j in k + 1..p {
                let cj = col(j);
                let target = &mut a[cj.start + k..cj.end];
                let f = scale * dot(&v, target);
                axpy(-f, &v, target);
            }
            let f = scale * dot(&v, &qty[k..]);
            axpy(-f, &v, &mut qty[k..]);
            // keep v below the diagonal for later use of Q if needed
            a[ck.start + k..ck.end].copy_from_slice(&v);
        }

        for j in k + 1..p {
            let r = a[j * n + k];
            norms[j] -= r * r;
            // recompute when cancellation has eaten most of the digits
            if norms[j] <= 1e-8 * exact_norms[j] {
                let cj = col(j);
                let tail = &a[cj.start + k + 1..cj.end];
                norms[j] = dot(tail, tail);
                exact_norms[j] = norms[j];
            }
        }
        rank += 1;
    }

    if rank == 0 {
        return Err(EstimateError::NoRetainedColumns);
    }
    if rank == n && n < p {
        return Err(EstimateError::TooFewRows { rows: n, columns: p });
    }

    // back substitution R[..rank, ..rank] b = qty[..rank]
    let r_at = |i: usize, j: usize| if i == j { rdiag[i] } else { a[j * n + i] };
    let mut b = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = qty[i];
        for j in i + 1..rank {
            s -= r_at(i, j) * b[j];
        }
        b[i] = s / r_at(i, i);
    }

    let rss: f64 = qty[rank..].iter().map(|v| v * v).sum();
    let df = n - rank;
    let residual_sd = if df > 0 { (rss / df as f64).sqrt() } else { 0.0 };

    // diag((RᵀR)⁻¹) = squared row norms of R⁻¹
    let mut rinv = vec![0.0; rank * rank];
    for j in 0..rank {
        rinv[j * rank + j] = 1.0 / r_at(j, j);
        for i in (0..j).rev() {
            let mut s = 0.0;
            for l in i + 1..=j {
                s += r_at(i, l) * rinv[j * rank + l];
            }
            rinv[j * rank + i] = -s / r_at(i, i);
        }
    }
    let mut coefficients = vec![0.0; p];
    let mut std_errors = vec![f64::NAN; p];
    for i in 0..rank {
        coefficients[perm[i]] = b[i];
        if df > 0 {
            let row: f64 = (i..rank).map(|j| rinv[j * rank + i].powi(2)).sum();
            std_errors[perm[i]] = residual_sd * row.sqrt();
        }
    }
    let mut dropped: Vec<usize> = perm[rank..].to_vec();
    dropped.sort_unstable();
    let dropped_terms = dropped.into_iter().map(|j| spec.terms()[j]).collect();
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(EstimateError::NonFinite("regression coefficients"));
    }

    Ok(OlsFit { design: spec, coefficients, std_errors, dropped_terms, residual_sd, n_used: n })
}
