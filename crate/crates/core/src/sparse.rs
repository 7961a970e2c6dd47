//! Compressed sparse rows and a fill-reducing LDL^T factorization for
//! symmetric quasi-definite matrices.
//!
//! The factorization is the up-looking elimination-tree algorithm without
//! pivoting. It succeeds on any symmetric positive definite matrix and on any
//! quasi-definite one `[H B^T; B -G]` with `H`, `G` positive definite, for
//! every symmetric ordering; the ordering is taken from AMD.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries. Duplicates are added in the order given, so
    /// the result is reproducible for a fixed triplet sequence.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, Vec::new())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (i, &yi) in y.iter().enumerate() {
            for (j, v) in self.row(i) {
                out[j] += v * yi;
            }
        }
        out
    }

    /// `x^T A x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, t)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }
}

/// `A = P^T L D L^T P` for a symmetric matrix `A` given in full storage.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    /// `perm[k]` is the original index eliminated at step `k`.
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl LdlFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Factorization(format!(
                "matrix is {}x{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        if n == 0 {
            return Ok(LdlFactor {
                n,
                perm: vec![],
                lp: vec![0],
                li: vec![],
                lx: vec![],
                d: vec![],
            });
        }
        let perm = amd_ordering(a)?;
        let mut iperm = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }
        let (ap, ai, ax) = permuted_upper(a, &iperm);
        let (etree, lnz) = elimination_tree(n, &ap, &ai);
        let (lp, li, lx, d) = numeric(n, &ap, &ai, &ax, &etree, &lnz)?;
        Ok(LdlFactor {
            n,
            perm,
            lp,
            li,
            lx,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    /// Numbers of positive and negative pivots.
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|&&x| x > 0.0).count();
        (pos, self.n - pos)
    }

    pub fn min_abs_pivot(&self) -> f64 {
        self.d.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..self.n {
            let xj = x[j];
            for k in self.lp[j]..self.lp[j + 1] {
                x[self.li[k]] -= self.lx[k] * xj;
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for k in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[k] * x[self.li[k]];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; self.n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = x[k];
        }
        out
    }
}

fn amd_ordering(a: &CsrMatrix) -> Result<Vec<usize>> {
    let n = a.nrows();
    // symmetrized pattern, diagonal included
    let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        pattern[i].push(j);
        pattern[j].push(i);
    }
    let mut ap = Vec::with_capacity(n + 1);
    let mut ai = Vec::new();
    ap.push(0);
    for (i, mut cols) in pattern.into_iter().enumerate() {
        cols.push(i);
        cols.sort_unstable();
        cols.dedup();
        ai.extend(cols);
        ap.push(ai.len());
    }
    let (p, _, _) = amd::order(n, &ap, &ai, &amd::Control::default())
        .map_err(|s| Error::Factorization(format!("AMD ordering failed: {s:?}")))?;
    Ok(p)
}

/// Upper triangle of `P A P^T` in compressed columns.
fn permuted_upper(a: &CsrMatrix, iperm: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = a.nrows();
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(a.nnz() / 2 + n);
    for (i, j, v) in a.triplets() {
        if i <= j {
            let (pi, pj) = (iperm[i], iperm[j]);
            entries.push((pi.min(pj), pi.max(pj), v));
        }
    }
    // make sure every column carries a diagonal slot
    for k in 0..n {
        entries.push((k, k, 0.0));
    }
    entries.sort_by_key(|&(r, c, _)| (c, r));
    let mut ap = vec![0; n + 1];
    let mut ai = Vec::with_capacity(entries.len());
    let mut ax: Vec<f64> = Vec::with_capacity(entries.len());
    let mut last = None;
    for (r, c, v) in entries {
        if last == Some((r, c)) {
            *ax.last_mut().unwrap() += v;
        } else {
            ai.push(r);
            ax.push(v);
            ap[c + 1] += 1;
            last = Some((r, c));
        }
    }
    for k in 0..n {
        ap[k + 1] += ap[k];
    }
    (ap, ai, ax)
}

fn elimination_tree(n: usize, ap: &[usize], ai: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut work = vec![NONE; n];
    let mut lnz = vec![0; n];
    let mut etree = vec![NONE; n];
    for j in 0..n {
        work[j] = j;
        for &row in &ai[ap[j]..ap[j + 1]] {
            let mut i = row;
            while work[i] != j {
                if etree[i] == NONE {
                    etree[i] = j;
                }
                lnz[i] += 1;
                work[i] = j;
                i = etree[i];
            }
        }
    }
    (etree, lnz)
}

type Factors = (Vec<usize>, Vec<usize>, Vec<f64>, Vec<f64>);

fn numeric(
    n: usize,
    ap: &[usize],
    ai: &[usize],
    ax: &[f64],
    etree: &[usize],
    lnz: &[usize],
) -> Result<Factors> {
    let mut lp = vec![0; n + 1];
    for k in 0..n {
        lp[k + 1] = lp[k] + lnz[k];
    }
    let total = lp[n];
    let mut li = vec![0; total];
    let mut lx = vec![0.0; total];
    let mut d = vec![0.0; n];

    let mut marked = vec![false; n];
    let mut y_idx = vec![0; n];
    let mut stack = vec![0; n];
    let mut y = vec![0.0; n];
    let mut next = lp[..n].to_vec();

    for k in 0..n {
        // pattern of row k of L: union of etree paths from the column's rows
        let mut nnz_y = 0;
        for p in ap[k]..ap[k + 1] {
            let i = ai[p];
            if i == k {
                d[k] = ax[p];
                continue;
            }
            y[i] = ax[p];
            if marked[i] {
                continue;
            }
            let mut len = 0;
            let mut node = i;
            while node != NONE && node < k && !marked[node] {
                marked[node] = true;
                stack[len] = node;
                len += 1;
                node = etree[node];
            }
            while len > 0 {
                len -= 1;
                y_idx[nnz_y] = stack[len];
                nnz_y += 1;
            }
        }

        for t in (0..nnz_y).rev() {
            let c = y_idx[t];
            let yc = y[c];
            for p in lp[c]..next[c] {
                y[li[p]] -= lx[p] * yc;
            }
            let l_kc = yc / d[c];
            li[next[c]] = k;
            lx[next[c]] = l_kc;
            next[c] += 1;
            d[k] -= yc * l_kc;
            y[c] = 0.0;
            marked[c] = false;
        }

        if d[k] == 0.0 || !d[k].is_finite() {
            return Err(Error::Factorization(format!("zero or non-finite pivot at step {k}")));
        }
    }
    Ok((lp, li, lx, d))
}
