//! Compressed sparse row storage for complex operators and superoperators.
//!
//! Only the handful of operations the simulator needs are provided: assembly
//! from triplets, products, Kronecker products, adjoints and conversion to a
//! dense `ndarray` matrix for the LAPACK-backed paths.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

type C = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[C]) -> Self {
        let n = diag.len();
        let mut indices = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n);
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        for (i, &v) in diag.iter().enumerate() {
            if v != C::new(0.0, 0.0) {
                indices.push(i);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: n,
            ncols: n,
            indptr,
            indices,
            data,
        }
    }

    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<C> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        let mut m = Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        };
        m.prune(0.0);
        m
    }

    pub fn from_dense(a: &Array2<C>) -> Self {
        let mut t = Vec::new();
        for ((i, j), &v) in a.indexed_iter() {
            if v != C::new(0.0, 0.0) {
                t.push((i, j, v));
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), t)
    }

    /// Drops entries with modulus `<= tol`.
    pub fn prune(&mut self, tol: f64) {
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        indptr.push(0);
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.data[k].norm() > tol {
                    indices.push(self.indices[k]);
                    data.push(self.data[k]);
                }
            }
            indptr.push(indices.len());
        }
        self.indptr = indptr;
        self.indices = indices;
        self.data = data;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Iterates over the stored entries of row `r` as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.data[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.data[span.start + k],
            Err(_) => C::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<C> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Incomplete LU factorization with the sparsity pattern of `self`.
    /// Returns `None` when a pivot vanishes or a diagonal entry is missing.
    pub fn ilu0(&self) -> Option<Ilu0> {
        let n = self.nrows;
        let mut data = self.data.clone();
        let mut diag = vec![0usize; n];
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let span = self.indptr[i]..self.indptr[i + 1];
            for k in span.clone() {
                pos[self.indices[k]] = k;
            }
            for k in span.clone() {
                let col = self.indices[k];
                if col >= i {
                    break;
                }
                let pivot = data[diag[col]];
                let factor = data[k] / pivot;
                data[k] = factor;
                for m in diag[col] + 1..self.indptr[col + 1] {
                    let target = pos[self.indices[m]];
                    if target != usize::MAX {
                        let u = data[m];
                        data[target] -= factor * u;
                    }
                }
            }
            let d = pos[i];
            for k in span {
                pos[self.indices[k]] = usize::MAX;
            }
            if d == usize::MAX || data[d].norm() == 0.0 {
                return None;
            }
            diag[i] = d;
        }
        Some(Ilu0 {
            factors: Self { data, ..self.clone() },
            diag,
        })
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        let mut y = vec![C::new(0.0, 0.0); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C], y: &mut [C]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec_array(&self, x: &Array1<C>) -> Array1<C> {
        Array1::from(self.matvec(x.as_slice().expect("contiguous vector")))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(r, c, v)| (c, r, v)).collect(),
        )
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect(),
        )
    }

    pub fn conj(&self) -> Self {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v = v.conj());
        m
    }

    pub fn scale(&self, s: C) -> Self {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m.prune(0.0);
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, C::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, C::new(-1.0, 0.0))
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: C) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t = self
            .triplets()
            .chain(other.triplets().map(|(r, c, v)| (r, c, s * v)))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![C::new(0.0, 0.0); other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.ncols];
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != C::new(0.0, 0.0) {
                    indices.push(c);
                    data.push(acc[c]);
                }
                acc[c] = C::new(0.0, 0.0);
                mark[c] = false;
            }
            touched.clear();
            indptr.push(indices.len());
        }
        Self {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            data,
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                t.push((r1 * other.nrows + r2, c1 * other.ncols + c2, v1 * v2));
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, t)
    }

    /// Replaces row `r` by the given entries.
    pub fn with_row(&self, r: usize, entries: &[(usize, C)]) -> Self {
        let t = self
            .triplets()
            .filter(|&(i, _, _)| i != r)
            .chain(entries.iter().map(|&(c, v)| (r, c, v)))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn to_dense(&self) -> Array2<C> {
        let mut a = Array2::zeros((self.nrows, self.ncols));
        for (r, c, v) in self.triplets() {
            a[[r, c]] = v;
        }
        a
    }

    /// Largest absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.ncols];
        for (_, c, v) in self.triplets() {
            sums[c] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A - A†|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.sub(&self.adjoint()).max_abs()
    }

    /// `[A, B]`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn trace(&self) -> C {
        self.diagonal().into_iter().sum()
    }
}

/// Unit-lower and upper triangular factors sharing one CSR pattern.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    factors: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    /// Overwrites `x` with `(LU)⁻¹ x`.
    pub fn solve_in_place(&self, x: &mut [C]) {
        let f = &self.factors;
        for i in 0..f.nrows {
            let mut acc = x[i];
            for k in f.indptr[i]..self.diag[i] {
                acc -= f.data[k] * x[f.indices[k]];
            }
            x[i] = acc;
        }
        for i in (0..f.nrows).rev() {
            let mut acc = x[i];
            for k in self.diag[i] + 1..f.indptr[i + 1] {
                acc -= f.data[k] * x[f.indices[k]];
            }
            x[i] = acc / f.data[self.diag[i]];
        }
    }
}
