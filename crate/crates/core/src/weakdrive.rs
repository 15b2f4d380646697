//! Infinitesimal-drive limit from the non-Hermitian effective Hamiltonian.
//!
//! Under weak drive the steady state is nearly pure, and its amplitudes are
//! those of the eigenvector of `H − i(γp/2)Σn` whose eigenvalue is closest
//! to zero. g² is evaluated on that vector for a decreasing sequence of drive
//! amplitudes until consecutive values agree.

use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{normalize_phase, vector_norm, FockSpace, MomentumBasis, OperatorMatrix};
use crate::models::ArrayModel;

type C = Complex64;

pub const DEFAULT_OMEGAS: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const DEFAULT_TOL: f64 = 1e-3;
/// Two minimal-modulus eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Normalized amplitudes with the global phase fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<C>,
}

impl StateVector {
    pub fn new(mut amplitudes: Vec<C>) -> Result<Self> {
        let norm = vector_norm(&amplitudes);
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        amplitudes.iter_mut().for_each(|x| *x /= norm);
        normalize_phase(&mut amplitudes);
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `(⟨n⟩, ⟨n(n−1)⟩)` on one site of `space`.
    pub fn number_moments(&self, space: &FockSpace, site: usize) -> Result<(f64, f64)> {
        if self.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: self.dim(),
            });
        }
        let (mut n1, mut n2) = (0.0, 0.0);
        for (i, x) in self.amplitudes.iter().enumerate() {
            let n = space.photons_at(i, site) as f64;
            let p = x.norm_sqr();
            n1 += n * p;
            n2 += n * (n - 1.0) * p;
        }
        Ok((n1, n2))
    }

    pub fn g2(&self, space: &FockSpace, site: usize) -> Result<f64> {
        let (n1, n2) = self.number_moments(space, site)?;
        if !(n1 > 0.0) {
            return Err(Error::VacuumState);
        }
        Ok(n2 / (n1 * n1))
    }
}

/// Eigenvector of a non-Hermitian matrix whose eigenvalue has minimum modulus.
pub fn stationary_state_dense(h_eff: &Array2<C>) -> Result<(StateVector, C)> {
    let n = h_eff.nrows();
    if n == 0 {
        return Err(Error::ZeroVector);
    }
    let (w, v) = h_eff.eig()?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[a].norm().total_cmp(&w[b].norm()));
    if n > 1 && (w[order[1]].norm() - w[order[0]].norm()).abs() < DEGENERACY_TOL {
        return Err(Error::DegenerateEigenvalue {
            modulus: w[order[0]].norm(),
        });
    }
    let k = order[0];
    Ok((StateVector::new(v.column(k).to_vec())?, w[k]))
}

pub fn stationary_state(h_eff: &OperatorMatrix) -> Result<(StateVector, C)> {
    stationary_state_dense(&h_eff.dense())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakDriveResult {
    pub omega_sequence: Vec<f64>,
    pub g2_sequence: Vec<f64>,
    /// Value at the smallest drive.
    pub converged_g2: f64,
    pub converged: bool,
    /// Site-0 population at the smallest drive.
    pub population: f64,
    /// Eigenvalue selected at the smallest drive.
    pub eigenvalue: C,
}

fn check_sequence(omegas: &[f64]) -> Result<()> {
    if omegas.is_empty() || omegas.iter().any(|&o| !(o > 0.0)) || omegas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "drive sequence must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

fn drive_sequence<F>(omegas: &[f64], tol: f64, mut solve: F) -> Result<WeakDriveResult>
where
    F: FnMut(f64) -> Result<(f64, f64, C)>,
{
    check_sequence(omegas)?;
    let mut g2_sequence = Vec::with_capacity(omegas.len());
    let mut population = 0.0;
    let mut eigenvalue = C::new(0.0, 0.0);
    for &omega in omegas {
        let (g2, n, lambda) = solve(omega)?;
        g2_sequence.push(g2);
        population = n;
        eigenvalue = lambda;
    }
    let converged_g2 = *g2_sequence.last().unwrap();
    let converged = match g2_sequence.len() {
        1 => false,
        len => {
            let (a, b) = (g2_sequence[len - 2], g2_sequence[len - 1]);
            (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
        }
    };
    Ok(WeakDriveResult {
        omega_sequence: omegas.to_vec(),
        g2_sequence,
        converged_g2,
        converged,
        population,
        eigenvalue,
    })
}

/// Weak-drive g² on site 0 in the full Hilbert space.
pub fn weakdrive_g2(model: &dyn ArrayModel, n_max: usize, omegas: &[f64], tol: f64) -> Result<WeakDriveResult> {
    let space = model.space(n_max)?;
    drive_sequence(omegas, tol, |omega| {
        let h = model.with_drive(omega).effective_hamiltonian(&space)?;
        let (psi, lambda) = stationary_state(&h)?;
        let (n1, _) = psi.number_moments(&space, 0)?;
        Ok((psi.g2(&space, 0)?, n1, lambda))
    })
}

/// Same contract as [`weakdrive_g2`], solved in the zero-momentum sector.
/// The uniform in-phase drive keeps the state translation invariant.
pub fn weakdrive_g2_momentum(
    model: &dyn ArrayModel,
    n_max: usize,
    omegas: &[f64],
    tol: f64,
) -> Result<WeakDriveResult> {
    let space = model.space(n_max)?;
    let basis = MomentumBasis::new(&space);
    weakdrive_g2_in_sector(model, &space, &basis, omegas, tol)
}

pub fn weakdrive_g2_in_sector(
    model: &dyn ArrayModel,
    space: &FockSpace,
    basis: &MomentumBasis,
    omegas: &[f64],
    tol: f64,
) -> Result<WeakDriveResult> {
    drive_sequence(omegas, tol, |omega| {
        let h = model.with_drive(omega).effective_hamiltonian(space)?;
        let block = basis.restrict(h.matrix()).to_dense();
        let (sector, lambda) = stationary_state_dense(&block)?;
        let psi = StateVector::new(basis.lift(sector.amplitudes()))?;
        let (n1, _) = psi.number_moments(space, 0)?;
        Ok((psi.g2(space, 0)?, n1, lambda))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BunchingRegion {
    pub hopping: f64,
    /// Kerr value at the g² maximum; `None` when the region is empty.
    pub u_lhs: Option<f64>,
    /// Kerr value where g² falls through 1 beyond the maximum.
    pub u_rhs: Option<f64>,
    pub peak_g2: f64,
}

impl BunchingRegion {
    pub fn is_empty(&self) -> bool {
        self.u_lhs.is_none()
    }
}

/// Bunched interval of `g2(U)` at fixed hopping.
///
/// `g2` is sampled on `u_grid` (ascending, positive). The maximum is refined
/// by golden-section search in `log U` between the neighbours of the best
/// grid point, and the downward crossing of 1 beyond it by bisection in
/// `log U` to `1e-3` relative.
pub fn bunching_region<F>(hopping: f64, u_grid: &[f64], g2: F) -> Result<BunchingRegion>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if u_grid.len() < 3 || u_grid.iter().any(|&u| !(u > 0.0)) || u_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("U grid must be positive, ascending, with at least three points".into()));
    }
    let values = u_grid.par_iter().map(|&u| g2(u)).collect::<Result<Vec<f64>>>()?;
    let best = (0..values.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
        .unwrap();
    let (u_peak, peak) = if best > 0 && best + 1 < u_grid.len() {
        golden_max(&g2, u_grid[best - 1].ln(), u_grid[best + 1].ln(), values[best], u_grid[best])?
    } else {
        (u_grid[best], values[best])
    };
    if peak <= 1.0 {
        return Ok(BunchingRegion {
            hopping,
            u_lhs: None,
            u_rhs: None,
            peak_g2: peak,
        });
    }
    let Some(k) = (best + 1..u_grid.len()).find(|&k| values[k] < 1.0) else {
        return Err(Error::NoBracket {
            lo: u_peak,
            hi: *u_grid.last().unwrap(),
        });
    };
    let (mut lo, mut hi) = (u_grid[k - 1].max(u_peak).ln(), u_grid[k].ln());
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if g2(mid.exp())? >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BunchingRegion {
        hopping,
        u_lhs: Some(u_peak),
        u_rhs: Some((0.5 * (lo + hi)).exp()),
        peak_g2: peak,
    })
}

fn golden_max<F>(f: &F, mut a: f64, mut b: f64, fallback: f64, u_fallback: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1.exp())?;
    let mut f2 = f(x2.exp())?;
    while b - a > 1e-6 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2.exp())?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1.exp())?;
        }
    }
    let (x, v) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    Ok(if v >= fallback { (x.exp(), v) } else { (u_fallback, fallback) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BhParams, Detuning};
    use approx::assert_abs_diff_eq;

    fn dimer(j: f64, u: f64) -> BhParams {
        BhParams::resonant_dimer(j, u, 0.0)
    }

    #[test]
    fn linear_dimer_is_poissonian() {
        for &j in &[0.3, 2.0, 15.0] {
            let r = weakdrive_g2(&dimer(j, 0.0), 4, &DEFAULT_OMEGAS, DEFAULT_TOL).unwrap();
            assert!(r.converged);
            assert_abs_diff_eq!(r.converged_g2, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn eigenvalue_scales_quadratically_in_drive() {
        let p = dimer(1.0, 2.0);
        let space = p.space(4).unwrap();
        let moduli: Vec<f64> = DEFAULT_OMEGAS
            .iter()
            .map(|&o| {
                let h = p.with_drive(o).effective_hamiltonian(&space).unwrap();
                stationary_state(&h).unwrap().1.norm()
            })
            .collect();
        assert!((moduli[0] / moduli[1] / 100.0 - 1.0).abs() < 1e-2, "{moduli:?}");
        assert!((moduli[1] / moduli[2] / 100.0 - 1.0).abs() < 1e-3, "{moduli:?}");
    }

    #[test]
    fn one_photon_amplitude_at_leading_order() {
        let (j, u, omega) = (1.5, 3.0, 1e-4);
        let p = dimer(j, u);
        let space = p.space(3).unwrap();
        let dc = p.detuning(&space).unwrap();
        let h = p.with_drive(omega).effective_hamiltonian(&space).unwrap();
        let (psi, _) = stationary_state(&h).unwrap();
        let c00 = psi.amplitudes()[0];
        // symmetric one-photon amplitude on |10⟩ (index 4) and |01⟩ (index 1)
        let c1 = psi.amplitudes()[4];
        assert!((c1 - psi.amplitudes()[1]).norm() < 1e-14);
        let want = -omega * c00 / C::new(dc - j, -0.5);
        assert!((c1 - want).norm() < 1e-6 * want.norm(), "{c1} vs {want}");
    }

    #[test]
    fn sector_matches_full_space() {
        for &(m, n_max) in &[(2usize, 4usize), (3, 3)] {
            let p = BhParams {
                sites: m,
                hopping: 2.0,
                kerr: 3.0,
                drive: 0.0,
                detuning: Detuning::UnitFillingResonant,
                gamma_p: 1.0,
            };
            let full = weakdrive_g2(&p, n_max, &DEFAULT_OMEGAS, DEFAULT_TOL).unwrap();
            let sector = weakdrive_g2_momentum(&p, n_max, &DEFAULT_OMEGAS, DEFAULT_TOL).unwrap();
            for (a, b) in full.g2_sequence.iter().zip(&sector.g2_sequence) {
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "M={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_sequences() {
        let p = dimer(1.0, 1.0);
        assert!(weakdrive_g2(&p, 3, &[1e-3, 1e-2], 1e-3).is_err());
        assert!(weakdrive_g2(&p, 3, &[1e-3, 0.0], 1e-3).is_err());
    }

    #[test]
    fn degenerate_selection_is_reported() {
        let m = Array2::from_diag(&ndarray::arr1(&[C::new(1.0, 0.0), C::new(-1.0, 0.0), C::new(5.0, 0.0)]));
        assert!(matches!(stationary_state_dense(&m), Err(Error::DegenerateEigenvalue { .. })));
    }

    #[test]
    fn bunching_region_of_a_bump() {
        // g² = 1 + 2 exp(−(ln U − ln 10)²) peaks at U = 10 and drops below 1
        // only through a tail term
        let g = |u: f64| -> Result<f64> { Ok(1.0 + 2.0 * (-(u.ln() - 10f64.ln()).powi(2)).exp() - 0.01 * u) };
        let grid: Vec<f64> = (0..41).map(|k| 10f64.powf(-1.0 + 0.1 * k as f64)).collect();
        let r = bunching_region(1.0, &grid, g).unwrap();
        let (lhs, rhs) = (r.u_lhs.unwrap(), r.u_rhs.unwrap());
        assert!(lhs < rhs);
        assert!((g(rhs).unwrap() - 1.0).abs() < 1e-3);
        assert!((lhs - 10.0).abs() < 0.5, "{lhs}");
        let flat = bunching_region(1.0, &grid, |u| Ok(1.0 / (1.0 + u))).unwrap();
        assert!(flat.is_empty() && flat.peak_g2 < 1.0);
    }
}
