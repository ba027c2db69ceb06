//! Bootstrap refits from sufficient statistics.
//!
//! In an interaction design every source Gram entry is a sum, over the rows of
//! one treatment arm, of a covariate monomial whose exponents are at most 2,
//! and every target prediction mean is a mean of a multilinear monomial. A
//! bootstrap replicate only changes row multiplicities, so these sums for a
//! batch of replicates come out of one matrix product against a precomputed
//! monomial table. Each replicate then costs a small pivoted Cholesky solve
//! instead of a refit over all rows.

use ndarray::{linalg::general_mat_mul, Array2};

use super::design::DesignSpec;

/// Pivots whose remaining diagonal falls below this fraction of the largest
/// Gram diagonal are treated as collinear.
pub(crate) const CHOLESKY_TOLERANCE: f64 = 1e-12;

/// Above this many monomial-table entries the engine is not used.
pub(crate) const MAX_TABLE_ENTRIES: usize = 1 << 25;

/// Terms of one transport set, with covariate masks over the union of all
/// sets handled by the engine.
#[derive(Debug, Clone)]
pub(crate) struct SetLayout {
    terms: Vec<(bool, u32)>,
}

impl SetLayout {
    /// `union_index[j]` is the union position of the set's `j`-th covariate.
    pub(crate) fn new(spec: &DesignSpec, union_index: &[usize]) -> Self {
        let terms = spec
            .terms()
            .iter()
            .map(|t| {
                let mut mask = 0u32;
                let mut m = t.covariate_mask();
                while m != 0 {
                    let j = m.trailing_zeros() as usize;
                    mask |= 1 << union_index[j];
                    m &= m - 1;
                }
                (t.has_treatment(), mask)
            })
            .collect();
        Self { terms }
    }

    pub(crate) fn len(&self) -> usize {
        self.terms.len()
    }
}

/// Rank of the source fit and transported contrast for one set in one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Refit {
    pub rank: usize,
    pub phi: f64,
}

struct Arm {
    /// Source-view positions of this arm's rows.
    rows: Vec<usize>,
    /// `rows.len() × (3^k + 2^k)`: ternary monomials, then `y` times binary ones.
    table: Array2<f64>,
}

pub(crate) struct MomentEngine {
    tern_len: usize,
    bin_len: usize,
    tern_of: Vec<usize>,
    arms: [Arm; 2],
    n_source: usize,
    /// `n_target × 2^k` multilinear monomials.
    target: Array2<f64>,
    sets: Vec<SetLayout>,
}

fn ternary_monomials(x: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    let mut stride = 1;
    for &v in x {
        let sq = v * v;
        for i in 0..stride {
            let m = out[i];
            out[i + stride] = m * v;
            out[i + 2 * stride] = m * sq;
        }
        stride *= 3;
    }
}

fn binary_monomials(x: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    let mut stride = 1;
    for &v in x {
        for i in 0..stride {
            out[i + stride] = out[i] * v;
        }
        stride *= 2;
    }
}

impl MomentEngine {
    /// Table size for `k` union covariates and `n_source` source rows.
    pub(crate) fn table_entries(k: usize, n_source: usize) -> usize {
        (3usize.pow(k as u32) + (1 << k)) * n_source
    }

    /// `source_x` and `target_x` hold one column per union covariate, of the
    /// source and target lengths.
    pub(crate) fn new(
        source_x: &[Vec<f64>],
        source_z: &[u8],
        source_y: &[f64],
        target_x: &[Vec<f64>],
        n_target: usize,
        sets: Vec<SetLayout>,
    ) -> Self {
        let k = source_x.len();
        let tern_len = 3usize.pow(k as u32);
        let bin_len = 1usize << k;
        let tern_of = (0..bin_len)
            .map(|mask| (0..k).filter(|v| mask >> v & 1 == 1).map(|v| 3usize.pow(v as u32)).sum())
            .collect();

        let mut row = vec![0.0; k];
        let mut bin = vec![0.0; bin_len];
        let arms = [0u8, 1].map(|arm| {
            let rows: Vec<usize> = (0..source_z.len()).filter(|&i| source_z[i] == arm).collect();
            let mut table = Array2::zeros((rows.len(), tern_len + bin_len));
            for (r, &i) in rows.iter().enumerate() {
                for (slot, col) in row.iter_mut().zip(source_x) {
                    *slot = col[i];
                }
                let out = table.row_mut(r).into_slice().expect("standard layout");
                let (tern, yb) = out.split_at_mut(tern_len);
                ternary_monomials(&row, tern);
                binary_monomials(&row, &mut bin);
                for (o, b) in yb.iter_mut().zip(&bin) {
                    *o = source_y[i] * b;
                }
            }
            Arm { rows, table }
        });

        let mut target = Array2::zeros((n_target, bin_len));
        for i in 0..n_target {
            for (slot, col) in row.iter_mut().zip(target_x) {
                *slot = col[i];
            }
            binary_monomials(&row, target.row_mut(i).into_slice().expect("standard layout"));
        }

        Self { tern_len, bin_len, tern_of, arms, n_source: source_z.len(), target, sets }
    }

    pub(crate) fn n_sets(&self) -> usize {
        self.sets.len()
    }

    /// Refits every set for a batch of replicates. `source_counts[b]` and
    /// `target_counts[b]` are row multiplicities over the source and target
    /// views. Result is indexed `[replicate][set]`.
    pub(crate) fn evaluate(&self, source_counts: &[Vec<u32>], target_counts: &[Vec<u32>]) -> Vec<Vec<Refit>> {
        let batch = source_counts.len();
        debug_assert_eq!(batch, target_counts.len());
        let moments = [0, 1].map(|a| {
            let arm = &self.arms[a];
            let mut c = Array2::zeros((batch, arm.rows.len()));
            for (b, counts) in source_counts.iter().enumerate() {
                debug_assert_eq!(counts.len(), self.n_source);
                for (r, &i) in arm.rows.iter().enumerate() {
                    c[[b, r]] = f64::from(counts[i]);
                }
            }
            let mut m = Array2::zeros((batch, self.tern_len + self.bin_len));
            general_mat_mul(1.0, &c, &arm.table, 0.0, &mut m);
            m
        });
        let n_target = self.target.nrows();
        let mut ct = Array2::zeros((batch, n_target));
        for (b, counts) in target_counts.iter().enumerate() {
            let total: u32 = counts.iter().sum();
            let w = 1.0 / f64::from(total.max(1));
            for (i, &c) in counts.iter().enumerate() {
                ct[[b, i]] = f64::from(c) * w;
            }
        }
        let mut target_means = Array2::zeros((batch, self.bin_len));
        general_mat_mul(1.0, &ct, &self.target, 0.0, &mut target_means);

        let max_p = self.sets.iter().map(SetLayout::len).max().unwrap_or(0);
        let mut gram = vec![0.0; max_p * max_p];
        let mut rhs = vec![0.0; max_p];
        let mut beta = vec![0.0; max_p];
        let mut work = Workspace::new(max_p);
        (0..batch)
            .map(|b| {
                let m0 = moments[0].row(b);
                let m1 = moments[1].row(b);
                let m0 = m0.as_slice().expect("standard layout");
                let m1 = m1.as_slice().expect("standard layout");
                let tm = target_means.row(b);
                let tm = tm.as_slice().expect("standard layout");
                self.sets
                    .iter()
                    .map(|set| {
                        let p = set.len();
                        let g = &mut gram[..p * p];
                        for (i, &(zi, ui)) in set.terms.iter().enumerate() {
                            let ti = self.tern_of[ui as usize];
                            for (j, &(zj, uj)) in set.terms[..=i].iter().enumerate() {
                                let idx = ti + self.tern_of[uj as usize];
                                let mut v = m1[idx];
                                if !zi && !zj {
                                    v += m0[idx];
                                }
                                g[i * p + j] = v;
                            }
                            let mut r = m1[self.tern_len + ui as usize];
                            if !zi {
                                r += m0[self.tern_len + ui as usize];
                            }
                            rhs[i] = r;
                        }
                        let rank = pivoted_cholesky_solve(g, &rhs[..p], p, &mut work, &mut beta[..p]);
                        let phi = set
                            .terms
                            .iter()
                            .zip(&beta[..p])
                            .filter(|((z, _), _)| *z)
                            .map(|(&(_, u), &bt)| bt * tm[u as usize])
                            .sum();
                        Refit { rank, phi }
                    })
                    .collect()
            })
            .collect()
    }
}

struct Workspace {
    perm: Vec<usize>,
    col: Vec<f64>,
    w: Vec<f64>,
}

impl Workspace {
    fn new(p: usize) -> Self {
        Self { perm: vec![0; p], col: vec![0.0; p], w: vec![0.0; p] }
    }
}

/// Solves `G β = r` for symmetric positive semidefinite `G`, given by its lower
/// triangle in row-major `g` (overwritten), using Cholesky with diagonal
/// pivoting. Columns past the detected rank get zero coefficients. Returns the
/// rank.
fn pivoted_cholesky_solve(g: &mut [f64], r: &[f64], p: usize, ws: &mut Workspace, beta: &mut [f64]) -> usize {
    for (i, slot) in ws.perm[..p].iter_mut().enumerate() {
        *slot = i;
    }
    beta.fill(0.0);
    let max_diag = (0..p).map(|i| g[i * p + i]).fold(0.0, f64::max);
    if !(max_diag > 0.0 && max_diag.is_finite()) {
        return 0;
    }
    let tol = CHOLESKY_TOLERANCE * max_diag;
    let mut rank = 0;
    for k in 0..p {
        let mut piv = k;
        for j in k + 1..p {
            if g[j * p + j] > g[piv * p + piv] {
                piv = j;
            }
        }
        let d = g[piv * p + piv];
        if !(d > tol) {
            break;
        }
        if piv != k {
            ws.perm.swap(k, piv);
            for c in 0..k {
                g.swap(k * p + c, piv * p + c);
            }
            g.swap(k * p + k, piv * p + piv);
            for i in k + 1..piv {
                g.swap(i * p + k, piv * p + i);
            }
            for i in piv + 1..p {
                g.swap(i * p + k, i * p + piv);
            }
        }
        let lkk = d.sqrt();
        g[k * p + k] = lkk;
        for i in k + 1..p {
            g[i * p + k] /= lkk;
        }
        let col = &mut ws.col[..p];
        for i in k + 1..p {
            col[i] = g[i * p + k];
        }
        for i in k + 1..p {
            let lik = col[i];
            if lik == 0.0 {
                continue;
            }
            let row = &mut g[i * p + k + 1..=i * p + i];
            for (v, c) in row.iter_mut().zip(&col[k + 1..=i]) {
                *v -= lik * c;
            }
        }
        rank += 1;
    }

    // L L^T v = r[perm] on the leading `rank` block
    let perm = &ws.perm;
    let w = &mut ws.w[..p];
    for i in 0..rank {
        let dot: f64 = g[i * p..i * p + i].iter().zip(&w[..i]).map(|(a, b)| a * b).sum();
        let s = r[perm[i]] - dot;
        w[i] = s / g[i * p + i];
    }
    for i in (0..rank).rev() {
        let mut s = w[i];
        for j in i + 1..rank {
            s -= g[j * p + i] * w[j];
        }
        w[i] = s / g[i * p + i];
    }
    for i in 0..rank {
        beta[perm[i]] = w[i];
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(gram: &[Vec<f64>], r: &[f64]) -> (usize, Vec<f64>) {
        let p = r.len();
        let mut g: Vec<f64> = gram.iter().flatten().copied().collect();
        let mut beta = vec![0.0; p];
        let rank = pivoted_cholesky_solve(&mut g, r, p, &mut Workspace::new(p), &mut beta);
        (rank, beta)
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let g = vec![vec![4.0, 2.0, 0.6], vec![2.0, 5.0, 1.0], vec![0.6, 1.0, 3.0]];
        let x = [1.0, -2.0, 0.5];
        let r: Vec<f64> = g.iter().map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let (rank, beta) = solve(&g, &r);
        assert_eq!(rank, 3);
        for (a, b) in beta.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_detects_rank_loss() {
        // third column = first + second
        let g = vec![vec![2.0, 1.0, 3.0], vec![1.0, 2.0, 3.0], vec![3.0, 3.0, 6.0]];
        let (rank, beta) = solve(&g, &[1.0, 1.0, 2.0]);
        assert_eq!(rank, 2);
        assert_eq!(beta.iter().filter(|b| **b == 0.0).count(), 1);
    }

    #[test]
    fn monomial_tables() {
        let mut t = vec![0.0; 9];
        ternary_monomials(&[2.0, 3.0], &mut t);
        assert_eq!(t, vec![1.0, 2.0, 4.0, 3.0, 6.0, 12.0, 9.0, 18.0, 36.0]);
        let mut b = vec![0.0; 4];
        binary_monomials(&[2.0, 3.0], &mut b);
        assert_eq!(b, vec![1.0, 2.0, 3.0, 6.0]);
    }
}
