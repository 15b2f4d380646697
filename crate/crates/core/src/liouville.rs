//! Lindblad superoperators, steady states and time evolution.
//!
//! Density matrices are vectorized by stacking columns, so `ρ_ij` sits at
//! index `i + j·d` and `vec(AXB) = (Bᵀ ⊗ A) vec(X)`. With that convention
//!
//! ```text
//! L = −i(1 ⊗ H − Hᵀ ⊗ 1) + Σ_k γ_k [ Ō_k ⊗ O_k − ½ 1 ⊗ O_k†O_k − ½ (O_k†O_k)ᵀ ⊗ 1 ]
//! ```
//!
//! Steady states solve `L ρ = 0` with one equation replaced by a
//! normalization. Small problems use dense LU with the trace row; larger ones
//! pin `ρ₀₀ = 1`, which keeps `L` banded, and use banded LU or, past a
//! memory limit, ILU-preconditioned GMRES. All are registered as
//! [`SteadyStateSolver`] strategies.

use lax::layout::MatrixLayout;
use lax::{Lapack, Transpose};
use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expm::{expm, expmv, KrylovOptions};
use crate::hilbert::{FockSpace, OperatorMatrix, SiteOperatorKind};
use crate::registry::Registry;
use crate::sparse::CsrMatrix;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Largest superoperator dimension (`d²`) solved with dense LU.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Debug)]
pub struct Superoperator {
    matrix: CsrMatrix,
    dim: usize,
}

impl Superoperator {
    /// Hilbert-space dimension `d`; the matrix is `d² × d²`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dense(&self) -> Array2<C> {
        self.matrix.to_dense()
    }

    pub fn apply(&self, rho: &Array2<C>) -> Array2<C> {
        unvec(&self.matrix.matvec(&vec_cols(rho)), self.dim)
    }
}

/// Column-stacked `vec(ρ)`.
pub fn vec_cols(m: &Array2<C>) -> Vec<C> {
    m.t().iter().copied().collect()
}

pub fn unvec(v: &[C], d: usize) -> Array2<C> {
    Array2::from_shape_fn((d, d), |(i, j)| v[i + j * d])
}

/// `L[ρ] = −i[H, ρ] + Σ_k γ_k D_{O_k}[ρ]`.
pub fn liouvillian(h: &OperatorMatrix, collapse: &[OperatorMatrix], rates: &[f64]) -> Result<Superoperator> {
    let d = h.dim();
    if collapse.len() != rates.len() {
        return Err(Error::DimensionMismatch {
            expected: collapse.len(),
            found: rates.len(),
        });
    }
    if let Some(o) = collapse.iter().find(|o| o.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: o.dim(),
        });
    }
    if let Some(r) = rates.iter().find(|&&r| !(r >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative rate {r}")));
    }
    let id = CsrMatrix::identity(d);
    let hm = h.matrix();
    let mut l = id.kron(hm).sub(&hm.transpose().kron(&id)).scale(C::new(0.0, -1.0));
    for (o, &g) in collapse.iter().zip(rates) {
        if g == 0.0 {
            continue;
        }
        let om = o.matrix();
        let odo = om.adjoint().matmul(om);
        let jump = om.conj().kron(om);
        let anti = id.kron(&odo).add(&odo.transpose().kron(&id));
        l = l.add_scaled(&jump, C::new(g, 0.0)).add_scaled(&anti, C::new(-0.5 * g, 0.0));
    }
    Ok(Superoperator { matrix: l, dim: d })
}

/// Photon loss at rate `gamma_p` from every resonator.
pub fn photon_loss_liouvillian(h: &OperatorMatrix, space: &FockSpace, gamma_p: f64) -> Result<Superoperator> {
    let ops = (0..space.sites())
        .map(|j| space.site_operator(j, SiteOperatorKind::Annihilate))
        .collect::<Result<Vec<_>>>()?;
    let rates = vec![gamma_p; ops.len()];
    liouvillian(h, &ops, &rates)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: Array2<C>,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Wraps a matrix without checks.
    pub fn from_matrix(matrix: Array2<C>) -> Self {
        Self { matrix }
    }

    pub fn pure(psi: &[C]) -> Self {
        let norm: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
        let d = psi.len();
        Self {
            matrix: Array2::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj() / norm),
        }
    }

    /// `|k⟩⟨k|` for basis state `k`.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        let mut m = Array2::zeros((dim, dim));
        m[[k, k]] = ONE;
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C> {
        &self.matrix
    }

    pub fn trace(&self) -> C {
        self.matrix.diag().iter().sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    fn hermitian_part(&self) -> Array2<C> {
        (&self.matrix + &self.matrix.t().mapv(|x| x.conj())).mapv(|x| x * 0.5)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let (w, _) = self.hermitian_part().eigh(UPLO::Upper)?;
        Ok(w.to_vec())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Checks the Hermiticity, trace and positivity tolerances.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr}")));
        }
        let min = self.min_eigenvalue()?;
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::InvalidArgument(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `½ Tr|ρ − σ|`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        let diff = Self::from_matrix(&self.matrix - &other.matrix);
        Ok(0.5 * diff.eigenvalues()?.iter().map(|x| x.abs()).sum::<f64>())
    }

    fn sanitized(matrix: Array2<C>) -> Self {
        let mut rho = Self { matrix };
        rho.matrix = rho.hermitian_part();
        let tr = rho.trace();
        rho.matrix.mapv_inplace(|x| x / tr);
        rho
    }
}

/// A strategy for solving `L[ρ] = 0`, `Tr ρ = 1`.
pub trait SteadyStateSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, l: &Superoperator) -> Result<DensityMatrix>;
}

fn trace_row(d: usize) -> Vec<(usize, C)> {
    (0..d).map(|i| (i + i * d, ONE)).collect()
}

fn residual_check(l: &Superoperator, rho: &DensityMatrix) -> Result<()> {
    let r = l.matrix.matvec(&vec_cols(&rho.matrix));
    let residual = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let tolerance = 1e-10 * l.matrix.norm_one().max(1.0);
    if residual > tolerance {
        return Err(Error::Residual { residual, tolerance });
    }
    Ok(())
}

/// Dense LU on the trace-augmented system. Degeneracy is flagged when the
/// reciprocal condition number of the augmented matrix falls below `1e-12`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DenseLuSolver;

impl DenseLuSolver {
    pub const RCOND_TOL: f64 = 1e-12;
}

impl SteadyStateSolver for DenseLuSolver {
    fn name(&self) -> &'static str {
        "dense-lu"
    }

    fn solve(&self, l: &Superoperator) -> Result<DensityMatrix> {
        let d = l.dim;
        let n = d * d;
        let mut a = vec![ZERO; n * n];
        for (r, c, v) in l.matrix.triplets() {
            if r != n - 1 {
                a[r + c * n] = v;
            }
        }
        for (c, v) in trace_row(d) {
            a[(n - 1) + c * n] = v;
        }
        let layout = MatrixLayout::F { col: n as i32, lda: n as i32 };
        let anorm = (0..n)
            .map(|c| a[c * n..(c + 1) * n].iter().map(|x| x.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let ipiv = C::lu(layout, &mut a).map_err(|_| Error::DegenerateSteadyState { rcond: 0.0 })?;
        let rcond = C::rcond(layout, &a, anorm).map_err(ndarray_linalg::error::LinalgError::from)?;
        if rcond < Self::RCOND_TOL {
            return Err(Error::DegenerateSteadyState { rcond });
        }
        let mut b = vec![ZERO; n];
        b[n - 1] = ONE;
        C::solve(layout, Transpose::No, &a, &ipiv, &mut b).map_err(ndarray_linalg::error::LinalgError::from)?;
        let rho = DensityMatrix::sanitized(unvec(&b, d));
        residual_check(l, &rho)?;
        Ok(rho)
    }
}

/// Row `0` of `L` replaced by `ρ₀₀ = 1`. The dropped equation is implied by
/// the others (the diagonal rows sum to zero), so the system is regular
/// whenever the steady state is unique and has vacuum weight. Unlike the
/// trace row this keeps the sparsity pattern of `L`.
fn pinned_system(l: &Superoperator) -> (CsrMatrix, Vec<C>) {
    let n = l.dim * l.dim;
    let a = l.matrix.with_row(0, &[(0, ONE)]);
    let mut b = vec![ZERO; n];
    b[0] = ONE;
    (a, b)
}

/// Banded LU (LAPACK `zgbtrf`) on the pinned system. Cheaper than dense LU
/// because a superoperator on `M` sites has bandwidth about `d²/(n_max+1)`.
#[derive(Clone, Copy, Debug)]
pub struct BandedLuSolver {
    /// Refuse problems whose band storage would exceed this many bytes.
    pub memory_limit: usize,
}

impl Default for BandedLuSolver {
    fn default() -> Self {
        Self { memory_limit: 1 << 30 }
    }
}

impl BandedLuSolver {
    fn bandwidths(a: &CsrMatrix) -> (usize, usize) {
        a.triplets().fold((0, 0), |(kl, ku), (r, c, _)| {
            if r > c {
                (kl.max(r - c), ku)
            } else {
                (kl, ku.max(c - r))
            }
        })
    }

    /// Bytes of band storage needed for `l`.
    pub fn storage(l: &Superoperator) -> usize {
        let (kl, ku) = Self::bandwidths(&pinned_system(l).0);
        (2 * kl + ku + 1) * l.dim * l.dim * std::mem::size_of::<C>()
    }
}

impl SteadyStateSolver for BandedLuSolver {
    fn name(&self) -> &'static str {
        "banded-lu"
    }

    fn solve(&self, l: &Superoperator) -> Result<DensityMatrix> {
        let d = l.dim;
        let n = d * d;
        let (a, mut b) = pinned_system(l);
        let (kl, ku) = Self::bandwidths(&a);
        let ldab = 2 * kl + ku + 1;
        let bytes = ldab * n * std::mem::size_of::<C>();
        if bytes > self.memory_limit {
            return Err(Error::InvalidArgument(format!(
                "band storage of {bytes} bytes exceeds the limit of {}",
                self.memory_limit
            )));
        }
        let mut ab = vec![ZERO; ldab * n];
        let mut colsum = vec![0.0; n];
        for (r, c, v) in a.triplets() {
            ab[kl + ku + r - c + c * ldab] = v;
            colsum[c] += v.norm();
        }
        let anorm = colsum.into_iter().fold(0.0, f64::max);
        let (ni, kli, kui, ldabi) = (n as i32, kl as i32, ku as i32, ldab as i32);
        let mut ipiv = vec![0i32; n];
        let mut info = 0;
        let ab_ptr = ab.as_mut_ptr() as *mut lapack_sys::__BindgenComplex<f64>;
        // SAFETY: `ab` holds `ldab·n` entries in LAPACK band layout and
        // `Complex64` is layout-compatible with the bindgen complex type.
        unsafe { lapack_sys::zgbtrf_(&ni, &ni, &kli, &kui, ab_ptr, &ldabi, ipiv.as_mut_ptr(), &mut info) };
        if info > 0 {
            return Err(Error::DegenerateSteadyState { rcond: 0.0 });
        }
        let mut rcond = 0.0;
        let mut work = vec![ZERO; 2 * n];
        let mut rwork = vec![0.0; n];
        // SAFETY: workspace sizes follow the `zgbcon` documentation.
        unsafe {
            lapack_sys::zgbcon_(
                &(b'1' as std::os::raw::c_char),
                &ni,
                &kli,
                &kui,
                ab_ptr,
                &ldabi,
                ipiv.as_ptr(),
                &anorm,
                &mut rcond,
                work.as_mut_ptr() as *mut _,
                rwork.as_mut_ptr(),
                &mut info,
            )
        };
        if rcond < DenseLuSolver::RCOND_TOL {
            return Err(Error::DegenerateSteadyState { rcond });
        }
        // SAFETY: `b` has `n` entries, one right-hand side.
        unsafe {
            lapack_sys::zgbtrs_(
                &(b'N' as std::os::raw::c_char),
                &ni,
                &kli,
                &kui,
                &1,
                ab_ptr,
                &ldabi,
                ipiv.as_ptr(),
                b.as_mut_ptr() as *mut _,
                &ni,
                &mut info,
            )
        };
        let rho = DensityMatrix::sanitized(unvec(&b, d));
        residual_check(l, &rho)?;
        Ok(rho)
    }
}

/// Restarted GMRES on the pinned system, right-preconditioned with ILU(0)
/// (Jacobi if the incomplete factorization breaks down).
#[derive(Clone, Copy, Debug)]
pub struct GmresSolver {
    pub restart: usize,
    pub max_iterations: usize,
    pub tol: f64,
}

impl Default for GmresSolver {
    fn default() -> Self {
        Self {
            restart: 80,
            max_iterations: 20_000,
            tol: 1e-13,
        }
    }
}

fn dot(x: &[C], y: &[C]) -> C {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn norm2(x: &[C]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

impl GmresSolver {
    /// Solves `A x = b` to relative residual `tol`.
    pub fn gmres(&self, a: &CsrMatrix, b: &[C]) -> Result<Vec<C>> {
        let n = b.len();
        let ilu = a.ilu0();
        let jacobi: Vec<C> = a
            .diagonal()
            .into_iter()
            .map(|v| if v.norm() > 0.0 { ONE / v } else { ONE })
            .collect();
        let precondition = |v: &[C]| -> Vec<C> {
            match &ilu {
                Some(f) => {
                    let mut z = v.to_vec();
                    f.solve_in_place(&mut z);
                    z
                }
                None => v.iter().zip(&jacobi).map(|(x, p)| x * p).collect(),
            }
        };
        let apply = |v: &[C]| a.matvec(&precondition(v));
        let bnorm = norm2(b).max(f64::MIN_POSITIVE);
        let mut y_total = vec![ZERO; n];
        let mut iterations = 0;
        let mut rel = 1.0;
        while iterations < self.max_iterations {
            let ax = apply(&y_total);
            let r: Vec<C> = b.iter().zip(&ax).map(|(x, y)| x - y).collect();
            let beta = norm2(&r);
            rel = beta / bnorm;
            if rel < self.tol {
                break;
            }
            let m = self.restart;
            let mut v: Vec<Vec<C>> = vec![r.iter().map(|x| x / beta).collect()];
            let mut h = vec![vec![ZERO; m]; m + 1];
            let mut cs = vec![ZERO; m];
            let mut sn = vec![ZERO; m];
            let mut g = vec![ZERO; m + 1];
            g[0] = C::new(beta, 0.0);
            let mut k_used = 0;
            for k in 0..m {
                iterations += 1;
                let mut w = apply(&v[k]);
                for (i, vi) in v.iter().enumerate() {
                    let hik = dot(vi, &w);
                    h[i][k] = hik;
                    w.iter_mut().zip(vi).for_each(|(x, y)| *x -= hik * y);
                }
                let wn = norm2(&w);
                h[k + 1][k] = C::new(wn, 0.0);
                for i in 0..k {
                    let t = cs[i].conj() * h[i][k] + sn[i].conj() * h[i + 1][k];
                    h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                    h[i][k] = t;
                }
                let denom = (h[k][k].norm_sqr() + h[k + 1][k].norm_sqr()).sqrt();
                cs[k] = if denom > 0.0 { h[k][k] / denom } else { ONE };
                sn[k] = if denom > 0.0 { h[k + 1][k] / denom } else { ZERO };
                h[k][k] = C::new(denom, 0.0);
                h[k + 1][k] = ZERO;
                g[k + 1] = -sn[k] * g[k];
                g[k] = cs[k].conj() * g[k];
                k_used = k + 1;
                rel = g[k + 1].norm() / bnorm;
                if rel < self.tol || wn == 0.0 {
                    break;
                }
                v.push(w.iter().map(|x| x / wn).collect());
            }
            let mut y = vec![ZERO; k_used];
            for i in (0..k_used).rev() {
                let s: C = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
                y[i] = (g[i] - s) / h[i][i];
            }
            for (yi, vi) in y.iter().zip(&v) {
                y_total.iter_mut().zip(vi).for_each(|(x, z)| *x += yi * z);
            }
            if rel < self.tol {
                break;
            }
        }
        if rel >= self.tol {
            return Err(Error::NoConvergence {
                iterations,
                residual: rel,
            });
        }
        Ok(precondition(&y_total))
    }
}

impl SteadyStateSolver for GmresSolver {
    fn name(&self) -> &'static str {
        "gmres"
    }

    fn solve(&self, l: &Superoperator) -> Result<DensityMatrix> {
        let (a, b) = pinned_system(l);
        let x = self.gmres(&a, &b)?;
        let rho = DensityMatrix::sanitized(unvec(&x, l.dim));
        residual_check(l, &rho)?;
        Ok(rho)
    }
}

/// Dense LU up to [`DENSE_LIMIT`], then banded LU while its storage fits,
/// then GMRES.
#[derive(Clone, Copy, Debug, Default)]
pub struct AutoSolver;

impl SteadyStateSolver for AutoSolver {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn solve(&self, l: &Superoperator) -> Result<DensityMatrix> {
        let banded = BandedLuSolver::default();
        if l.dim * l.dim <= DENSE_LIMIT {
            DenseLuSolver.solve(l)
        } else if BandedLuSolver::storage(l) <= banded.memory_limit {
            banded.solve(l)
        } else {
            GmresSolver::default().solve(l)
        }
    }
}

pub fn steady_state_solvers() -> Registry<Box<dyn SteadyStateSolver>> {
    let mut r: Registry<Box<dyn SteadyStateSolver>> = Registry::new("steady-state solver");
    r.register("auto", Box::new(AutoSolver));
    r.register("dense-lu", Box::new(DenseLuSolver));
    r.register("banded-lu", Box::new(BandedLuSolver::default()));
    r.register("gmres", Box::new(GmresSolver::default()));
    r
}

pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    AutoSolver.solve(l)
}

/// `ρ(t) = exp(L t)[ρ0]` by adaptive Krylov stepping.
pub fn evolve(rho0: &DensityMatrix, l: &Superoperator, t: f64) -> Result<DensityMatrix> {
    if rho0.dim() != l.dim {
        return Err(Error::DimensionMismatch {
            expected: l.dim,
            found: rho0.dim(),
        });
    }
    let v = expmv(&l.matrix, t, &vec_cols(&rho0.matrix), KrylovOptions::default())?;
    Ok(DensityMatrix::from_matrix(unvec(&v, l.dim)))
}

/// Repeated application of `exp(L Δt)` on vectorized operators.
pub enum Propagator {
    Dense(Array2<C>),
    /// Truncated Taylor series on the sparse matrix, with `substeps` pieces of
    /// norm at most one per step.
    Taylor { matrix: CsrMatrix, step: f64, substeps: usize },
    Krylov { matrix: CsrMatrix, step: f64 },
}

impl Propagator {
    /// Picks the cheapest of a dense exponential (`d² <= 2500`), a sparse
    /// Taylor series, or Krylov stepping.
    pub fn new(l: &Superoperator, step: f64) -> Result<Self> {
        let n = l.dim * l.dim;
        let substeps = (l.matrix.norm_one() * step).ceil().max(1.0) as usize;
        let taylor_cost = substeps * 20 * l.matrix.nnz().max(n);
        if taylor_cost <= n * n || n > 2500 && substeps <= 64 {
            Ok(Self::Taylor {
                matrix: l.matrix.clone(),
                step,
                substeps,
            })
        } else if n <= 2500 {
            Ok(Self::Dense(expm(&l.dense().mapv(|x| x * step))?))
        } else {
            Ok(Self::Krylov {
                matrix: l.matrix.clone(),
                step,
            })
        }
    }

    pub fn step(&self, v: &[C]) -> Result<Vec<C>> {
        match self {
            Self::Dense(p) => {
                let mut out = vec![ZERO; v.len()];
                for (i, row) in p.rows().into_iter().enumerate() {
                    out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
                }
                Ok(out)
            }
            Self::Taylor { matrix, step, substeps } => {
                let h = step / *substeps as f64;
                let mut y = v.to_vec();
                let mut term = vec![ZERO; v.len()];
                let mut next = vec![ZERO; v.len()];
                for _ in 0..*substeps {
                    term.copy_from_slice(&y);
                    for k in 1..=40 {
                        matrix.matvec_into(&term, &mut next);
                        let f = h / k as f64;
                        let mut tn = 0.0;
                        let mut yn = 0.0;
                        for ((t, nx), yy) in term.iter_mut().zip(&next).zip(y.iter_mut()) {
                            *t = nx * f;
                            *yy += *t;
                            tn += t.norm_sqr();
                            yn += yy.norm_sqr();
                        }
                        if tn <= 1e-34 * yn {
                            break;
                        }
                    }
                }
                Ok(y)
            }
            Self::Krylov { matrix, step } => expmv(matrix, *step, v, KrylovOptions::default()),
        }
    }
}
