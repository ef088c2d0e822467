//! Compressed-row storage and a direct solver for the assembled systems.
//!
//! The solver equilibrates rows and columns, reorders unknowns with reverse
//! Cuthill-McKee to keep the profile narrow, and factors the band with
//! partial pivoting. Penalty-dominated and non-symmetric systems of a few
//! thousand unknowns are handled without iteration.

use std::collections::VecDeque;

use crate::{GfemError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the matrix from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        t.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            assert!(i < nrows && j < ncols, "entry ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)))
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

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    /// `self + extra`, with `extra` given as entries.
    pub fn with_added(&self, extra: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        Self::from_triplets(self.nrows, self.ncols, self.triplets().chain(extra))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] += v;
        }
        d
    }
}

/// Iterations of two-sided scaling. Each one takes the square root of the
/// remaining row and column maxima, so the spread shrinks geometrically.
const EQUILIBRATION_SWEEPS: usize = 100;

/// Row and column scale factors `r`, `c` such that `diag(r) A diag(c)` has
/// every row and column max-norm close to one. Scaling rows alone is not
/// enough when a few basis functions are many orders of magnitude larger
/// than the rest, as with exponential enrichments.
pub fn equilibrate(a: &CsrMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = vec![1.0; a.nrows];
    let mut c = vec![1.0; a.ncols];
    for sweep in 0..EQUILIBRATION_SWEEPS {
        let mut rmax = vec![0.0f64; a.nrows];
        let mut cmax = vec![0.0f64; a.ncols];
        for (i, j, v) in a.triplets() {
            let s = (r[i] * v * c[j]).abs();
            rmax[i] = rmax[i].max(s);
            cmax[j] = cmax[j].max(s);
        }
        if sweep == 0 {
            if let Some(i) = rmax.iter().position(|m| !(*m > 0.0) || !m.is_finite()) {
                return Err(GfemError::SingularSystem {
                    dof: i,
                    pivot: rmax[i],
                    threshold: 0.0,
                });
            }
            if let Some(j) = cmax.iter().position(|m| !(*m > 0.0)) {
                return Err(GfemError::SingularSystem {
                    dof: j,
                    pivot: 0.0,
                    threshold: 0.0,
                });
            }
        }
        let spread = rmax
            .iter()
            .chain(&cmax)
            .fold(0.0f64, |m, v| m.max((1.0 - v).abs()));
        if spread < 1e-3 {
            break;
        }
        r.iter_mut().zip(&rmax).for_each(|(ri, m)| *ri /= m.sqrt());
        c.iter_mut().zip(&cmax).for_each(|(cj, m)| *cj /= m.sqrt());
    }
    // finish with exact unit row maxima
    let mut rmax = vec![0.0f64; a.nrows];
    for (i, j, v) in a.triplets() {
        rmax[i] = rmax[i].max((r[i] * v * c[j]).abs());
    }
    r.iter_mut().zip(&rmax).for_each(|(ri, m)| *ri /= m);
    Ok((r, c))
}

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// `perm[k]` is the original index placed at position `k`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Refinement steps after the first solve; each uses the residual of the
/// unscaled system.
const REFINEMENT_STEPS: usize = 2;

/// Solves `A x = b`. A pivot smaller than `pivot_rel * max|A_eq|` in the
/// equilibrated matrix is reported as a singular system at the original DOF
/// index of the failing column.
pub fn solve_direct(a: &CsrMatrix, b: &[f64], pivot_rel: f64) -> Result<Vec<f64>> {
    let n = a.nrows;
    if a.ncols != n || b.len() != n {
        return Err(GfemError::invalid(format!(
            "system is {}x{} with rhs of length {}",
            a.nrows,
            a.ncols,
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let lu = BandLu::factor(a, pivot_rel)?;
    let mut x = lu.solve(b);
    for _ in 0..REFINEMENT_STEPS {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let d = lu.solve(&r);
        x.iter_mut().zip(&d).for_each(|(xi, di)| *xi += di);
    }
    Ok(x)
}

/// Banded LU factors of the equilibrated, reordered matrix.
struct BandLu {
    r: Vec<f64>,
    c: Vec<f64>,
    perm: Vec<usize>,
    band: Band,
    /// Row swapped with row `k` at step `k`.
    swaps: Vec<usize>,
    kl: usize,
    reach: usize,
}

impl BandLu {
    fn factor(a: &CsrMatrix, pivot_rel: f64) -> Result<Self> {
        let n = a.nrows;
        let (r, c) = equilibrate(a)?;
        let perm = reverse_cuthill_mckee(a);
        let mut pos = vec![0; n];
        for (k, &old) in perm.iter().enumerate() {
            pos[old] = k;
        }
        let mut kl = 0usize;
        let mut ku = 0usize;
        let mut max_eq = 0.0f64;
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (pos[i], pos[j]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
            max_eq = max_eq.max((r[i] * v * c[j]).abs());
        }
        let mut band = Band::new(n, kl, ku);
        for (i, j, v) in a.triplets() {
            *band.at_mut(pos[i], pos[j]) += r[i] * v * c[j];
        }
        let threshold = pivot_rel * max_eq;
        let reach = kl + ku;
        let mut swaps = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let (p, pivot) = (k..=last_row)
                .map(|i| (i, band.at(i, k)))
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .unwrap();
            if !(pivot.abs() >= threshold) || pivot == 0.0 {
                return Err(GfemError::SingularSystem {
                    dof: perm[k],
                    pivot: pivot.abs(),
                    threshold,
                });
            }
            swaps[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let tmp = band.at(k, j);
                    *band.at_mut(k, j) = band.at(p, j);
                    *band.at_mut(p, j) = tmp;
                }
            }
            for i in k + 1..=last_row {
                let factor = band.at(i, k) / pivot;
                // the multiplier is kept in the eliminated slot
                *band.at_mut(i, k) = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let v = band.at(k, j);
                    *band.at_mut(i, j) -= factor * v;
                }
            }
        }
        Ok(BandLu {
            r,
            c,
            perm,
            band,
            swaps,
            kl,
            reach,
        })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let band = &self.band;
        let mut rhs: Vec<f64> = self.perm.iter().map(|&old| self.r[old] * b[old]).collect();
        for k in 0..n {
            rhs.swap(k, self.swaps[k]);
            let last_row = (k + self.kl).min(n - 1);
            for i in k + 1..=last_row {
                rhs[i] -= band.at(i, k) * rhs[k];
            }
        }
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let last_col = (i + self.reach).min(n - 1);
            let s: f64 = (i + 1..=last_col).map(|j| band.at(i, j) * y[j]).sum();
            y[i] = (rhs[i] - s) / band.at(i, i);
        }
        let mut x = vec![0.0; n];
        for (k, &old) in self.perm.iter().enumerate() {
            x[old] = self.c[old] * y[k];
        }
        x
    }
}

/// Row-major band storage wide enough for the fill produced by partial
/// pivoting: row `i` holds columns `i - kl ..= i + kl + ku`.
struct Band {
    kl: usize,
    width: usize,
    data: Vec<f64>,
}

impl Band {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Band {
            kl,
            width,
            data: vec![0.0; n * width],
        }
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j + self.kl - i < self.width);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.index(i, j);
        &mut self.data[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let k = CsrMatrix::identity(5);
        let mut e = vec![0.0; 5];
        e[3] = 1.0;
        assert_eq!(solve_direct(&k, &e, 1e-14).unwrap(), e);
    }

    #[test]
    fn needs_pivoting() {
        let k = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        let x = solve_direct(&k, &[2.0, 5.0], 1e-14).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_reports_dof() {
        let k = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)],
        );
        match solve_direct(&k, &[1.0, 1.0, 1.0], 1e-14) {
            Err(GfemError::SingularSystem { dof, .. }) => assert!(dof < 2),
            other => panic!("expected singular system, got {other:?}"),
        }
    }

    #[test]
    fn rcm_is_a_permutation() {
        let k = CsrMatrix::from_triplets(
            6,
            6,
            (0..6).flat_map(|i| [(i, i, 2.0), (i, (i + 3) % 6, -1.0)]),
        );
        let mut p = reverse_cuthill_mckee(&k);
        p.sort_unstable();
        assert_eq!(p, (0..6).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn random_diagonally_dominant_systems(
            n in 1usize..40,
            entries in proptest::collection::vec((0usize..40, 0usize..40, -1.0f64..1.0), 0..200),
            scales in proptest::collection::vec(-12i32..12, 40),
        ) {
            let mut t: Vec<(usize, usize, f64)> = entries
                .into_iter()
                .filter(|&(i, j, _)| i < n && j < n && i != j)
                .collect();
            let mut rowsum = vec![0.0; n];
            for &(i, _, v) in &t { rowsum[i] += v.abs(); }
            for i in 0..n { t.push((i, i, rowsum[i] + 1.0)); }
            // badly scaled rows exercise the equilibration
            let t: Vec<_> = t.into_iter().map(|(i, j, v)| (i, j, v * 10f64.powi(scales[i]))).collect();
            let k = CsrMatrix::from_triplets(n, n, t);
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let b = k.mul_vec(&x_true);
            let x = solve_direct(&k, &b, 1e-14).unwrap();
            for i in 0..n {
                prop_assert!((x[i] - x_true[i]).abs() < 1e-9, "{} vs {}", x[i], x_true[i]);
            }
        }
    }
}
