//! Truncated Fock spaces for periodic resonator chains.
//!
//! Basis states are ordered lexicographically with site 0 most significant.
//! Within a site the photon number varies fastest and the two-level-system
//! bit (when present) comes after it, so the local index of `(n, excited)` is
//! `n + (n_max + 1) * excited`. Operators built here therefore agree with the
//! Kronecker-product convention `O_0 ⊗ O_1 ⊗ … ⊗ O_{M-1}`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

type C = Complex64;

pub const DEFAULT_DIM_BOUND: usize = 1_000_000;

/// Occupation of a single resonator (and its emitter, if any).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalState {
    pub photons: usize,
    pub excited: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    sites: usize,
    n_max: usize,
    has_tls: bool,
    local_dim: usize,
    dim: usize,
    bonds: Vec<(usize, usize)>,
}

impl FockSpace {
    pub fn new(sites: usize, n_max: usize, has_tls: bool) -> Result<Self> {
        Self::with_bound(sites, n_max, has_tls, DEFAULT_DIM_BOUND)
    }

    pub fn with_bound(sites: usize, n_max: usize, has_tls: bool, bound: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidArgument("site count must be at least 1".into()));
        }
        if n_max == 0 {
            return Err(Error::InvalidArgument("photon cutoff must be at least 1".into()));
        }
        let local_dim = (n_max + 1) * if has_tls { 2 } else { 1 };
        let dim = (0..sites).try_fold(1usize, |acc, _| acc.checked_mul(local_dim));
        let dim = match dim {
            Some(d) if d <= bound => d,
            Some(d) => return Err(Error::Sizing { dim: d, bound }),
            None => return Err(Error::Sizing { dim: usize::MAX, bound }),
        };
        let bonds = match sites {
            1 => Vec::new(),
            2 => vec![(0, 1)],
            m => (0..m).map(|j| (j, (j + 1) % m)).collect(),
        };
        Ok(Self {
            sites,
            n_max,
            has_tls,
            local_dim,
            dim,
            bonds,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn has_tls(&self) -> bool {
        self.has_tls
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nearest-neighbour pairs of the periodic chain, each bond listed once.
    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    fn stride(&self, site: usize) -> usize {
        self.local_dim.pow((self.sites - 1 - site) as u32)
    }

    pub fn local_index(&self, s: LocalState) -> usize {
        s.photons + (self.n_max + 1) * usize::from(s.excited)
    }

    pub fn local_state(&self, l: usize) -> LocalState {
        LocalState {
            photons: l % (self.n_max + 1),
            excited: l > self.n_max,
        }
    }

    /// Local index of `site` within flat basis index `index`.
    pub fn local_at(&self, index: usize, site: usize) -> usize {
        (index / self.stride(site)) % self.local_dim
    }

    pub fn labels(&self, index: usize) -> Vec<LocalState> {
        (0..self.sites)
            .map(|j| self.local_state(self.local_at(index, j)))
            .collect()
    }

    pub fn index_of(&self, labels: &[LocalState]) -> Result<usize> {
        if labels.len() != self.sites {
            return Err(Error::DimensionMismatch {
                expected: self.sites,
                found: labels.len(),
            });
        }
        labels.iter().try_fold(0usize, |acc, s| {
            if s.photons > self.n_max || (s.excited && !self.has_tls) {
                Err(Error::InvalidArgument(format!("label {s:?} outside the truncated space")))
            } else {
                Ok(acc * self.local_dim + self.local_index(*s))
            }
        })
    }

    pub fn photons_at(&self, index: usize, site: usize) -> usize {
        self.local_at(index, site) % (self.n_max + 1)
    }

    /// Total excitation number: photons plus excited emitters.
    pub fn excitations(&self, index: usize) -> usize {
        self.labels(index)
            .iter()
            .map(|s| s.photons + usize::from(s.excited))
            .sum()
    }

    pub fn total_photons(&self, index: usize) -> usize {
        (0..self.sites).map(|j| self.photons_at(index, j)).sum()
    }

    /// Cyclic shift of the site labels by one: site `j` moves to `j + 1`.
    pub fn translate(&self, index: usize) -> usize {
        let last = index % self.local_dim;
        index / self.local_dim + last * self.stride(0)
    }

    pub fn site_operator(&self, site: usize, kind: SiteOperatorKind) -> Result<OperatorMatrix> {
        if site >= self.sites {
            return Err(Error::InvalidArgument(format!(
                "site {site} out of range for {} sites",
                self.sites
            )));
        }
        if kind.needs_tls() && !self.has_tls {
            return Err(Error::NoTwoLevelSystem { kind: kind.name() });
        }
        let stride = self.stride(site);
        let mut triplets = Vec::with_capacity(self.dim);
        for idx in 0..self.dim {
            let l = self.local_at(idx, site);
            let s = self.local_state(l);
            if let Some((to, amp)) = kind.apply(s, self.n_max) {
                let l2 = self.local_index(to);
                let target = idx + l2 * stride - l * stride;
                triplets.push((target, idx, C::new(amp, 0.0)));
            }
        }
        Ok(OperatorMatrix::new(CsrMatrix::from_triplets(self.dim, self.dim, triplets)))
    }

    /// Diagonal of `n_site` as reals.
    pub fn number_diagonal(&self, site: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.photons_at(i, site) as f64).collect()
    }

    /// Diagonal of the total excitation number operator.
    pub fn excitation_diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.excitations(i) as f64).collect()
    }

    pub fn total_photon_operator(&self) -> OperatorMatrix {
        let d: Vec<C> = (0..self.dim)
            .map(|i| C::new(self.total_photons(i) as f64, 0.0))
            .collect();
        OperatorMatrix::new(CsrMatrix::from_diagonal(&d))
    }

    pub fn excitation_operator(&self) -> OperatorMatrix {
        let d: Vec<C> = self
            .excitation_diagonal()
            .into_iter()
            .map(|v| C::new(v, 0.0))
            .collect();
        OperatorMatrix::new(CsrMatrix::from_diagonal(&d))
    }

    /// Permutation matrix of [`FockSpace::translate`].
    pub fn translation_operator(&self) -> CsrMatrix {
        let t = (0..self.dim)
            .map(|i| (self.translate(i), i, C::new(1.0, 0.0)))
            .collect();
        CsrMatrix::from_triplets(self.dim, self.dim, t)
    }

    pub fn identity(&self) -> OperatorMatrix {
        OperatorMatrix::new(CsrMatrix::identity(self.dim))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteOperatorKind {
    Annihilate,
    Create,
    Number,
    SigmaMinus,
    SigmaPlus,
    TlsNumber,
}

impl SiteOperatorKind {
    fn needs_tls(self) -> bool {
        matches!(self, Self::SigmaMinus | Self::SigmaPlus | Self::TlsNumber)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Annihilate => "annihilate",
            Self::Create => "create",
            Self::Number => "number",
            Self::SigmaMinus => "sigma_minus",
            Self::SigmaPlus => "sigma_plus",
            Self::TlsNumber => "tls_number",
        }
    }

    fn apply(self, s: LocalState, n_max: usize) -> Option<(LocalState, f64)> {
        let LocalState { photons: n, excited } = s;
        match self {
            Self::Annihilate if n > 0 => Some((LocalState { photons: n - 1, excited }, (n as f64).sqrt())),
            Self::Create if n < n_max => {
                Some((LocalState { photons: n + 1, excited }, ((n + 1) as f64).sqrt()))
            }
            Self::Number if n > 0 => Some((s, n as f64)),
            Self::SigmaMinus if excited => Some((LocalState { photons: n, excited: false }, 1.0)),
            Self::SigmaPlus if !excited => Some((LocalState { photons: n, excited: true }, 1.0)),
            Self::TlsNumber if excited => Some((s, 1.0)),
            _ => None,
        }
    }
}

impl fmt::Display for SiteOperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SiteOperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "annihilate" | "a" => Self::Annihilate,
            "create" | "adag" => Self::Create,
            "number" | "n" => Self::Number,
            "sigma_minus" => Self::SigmaMinus,
            "sigma_plus" => Self::SigmaPlus,
            "tls_number" => Self::TlsNumber,
            other => return Err(Error::InvalidArgument(format!("unknown operator kind `{other}`"))),
        })
    }
}

/// Complex operator on a [`FockSpace`], stored sparse.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    matrix: CsrMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-12;

    pub fn new(matrix: CsrMatrix) -> Self {
        let hermitian = matrix.hermiticity_defect() < Self::HERMITIAN_TOL;
        Self { matrix, hermitian }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CsrMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dense(&self) -> ndarray::Array2<C> {
        self.matrix.to_dense()
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.matrix.adjoint())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.matrix.matmul(&other.matrix))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.matrix.add(&other.matrix))
    }

    pub fn add_scaled(&self, other: &Self, s: C) -> Self {
        Self::new(self.matrix.add_scaled(&other.matrix, s))
    }

    pub fn scale(&self, s: C) -> Self {
        Self::new(self.matrix.scale(s))
    }
}

/// Zero-momentum sector of the translation group of a periodic chain.
///
/// Each basis vector is the normalized uniform superposition over one
/// translation orbit, listed in order of the orbit's smallest flat index.
#[derive(Clone, Debug)]
pub struct MomentumBasis {
    representatives: Vec<usize>,
    orbit_sizes: Vec<usize>,
    /// `dim × sector_dim` isometry whose columns are the symmetric states.
    embedding: CsrMatrix,
}

impl MomentumBasis {
    pub fn new(space: &FockSpace) -> Self {
        let dim = space.dim();
        let mut seen = vec![false; dim];
        let mut representatives = Vec::new();
        let mut orbit_sizes = Vec::new();
        let mut triplets = Vec::with_capacity(dim);
        for start in 0..dim {
            if seen[start] {
                continue;
            }
            let mut orbit = vec![start];
            seen[start] = true;
            let mut s = space.translate(start);
            while s != start {
                seen[s] = true;
                orbit.push(s);
                s = space.translate(s);
            }
            let col = representatives.len();
            let amp = C::new(1.0 / (orbit.len() as f64).sqrt(), 0.0);
            triplets.extend(orbit.iter().map(|&i| (i, col, amp)));
            representatives.push(start);
            orbit_sizes.push(orbit.len());
        }
        let embedding = CsrMatrix::from_triplets(dim, representatives.len(), triplets);
        Self {
            representatives,
            orbit_sizes,
            embedding,
        }
    }

    pub fn sector_dim(&self) -> usize {
        self.representatives.len()
    }

    pub fn representatives(&self) -> &[usize] {
        &self.representatives
    }

    pub fn orbit_sizes(&self) -> &[usize] {
        &self.orbit_sizes
    }

    pub fn embedding(&self) -> &CsrMatrix {
        &self.embedding
    }

    /// Restricts a translation-invariant operator to the sector: `V† A V`.
    pub fn restrict(&self, op: &CsrMatrix) -> CsrMatrix {
        self.embedding.adjoint().matmul(&op.matmul(&self.embedding))
    }

    /// Sector amplitudes to full-space amplitudes.
    pub fn lift(&self, v: &[C]) -> Vec<C> {
        self.embedding.matvec(v)
    }

    /// Full-space amplitudes to sector amplitudes (`V† x`).
    pub fn symmetrize(&self, x: &[C]) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.sector_dim()];
        for (r, c, v) in self.embedding.triplets() {
            out[c] += v.conj() * x[r];
        }
        out
    }

    /// Projector `V V†` onto the sector, in the full space.
    pub fn projector(&self) -> CsrMatrix {
        self.embedding.matmul(&self.embedding.adjoint())
    }
}

/// Fixes the global phase so the first component with non-negligible
/// modulus is real and positive.
pub fn normalize_phase(v: &mut [C]) {
    let max = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.norm() > 1e-12 * max).copied() {
        let phase = first.conj() / first.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

pub fn vector_norm(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
