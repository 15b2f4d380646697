//! Expectation values, photon statistics, two-time correlations and
//! emission spectra.
//!
//! Spectra use the convention `F(ω) = Δτ Σ_k S(τ_k) e^{−iωτ_k}` on the
//! correlation `S(τ) = Tr[a† e^{Lτ}(a ρ_ss)]`, which places a line at the
//! rotating-frame energy `E` of the transition that emits it (a one-photon
//! level at `Δc − J` shows up at `ω − ω_L = Δc − J`). No window is applied.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{FockSpace, OperatorMatrix, SiteOperatorKind};
use crate::liouville::{vec_cols, DensityMatrix, Propagator, Superoperator};

type C = Complex64;

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_site(space: &FockSpace, site: usize) -> Result<()> {
    if site >= space.sites() {
        return Err(Error::InvalidArgument(format!(
            "site {site} out of range for {} sites",
            space.sites()
        )));
    }
    Ok(())
}

/// `Tr(O ρ)`.
pub fn expectation(rho: &DensityMatrix, op: &OperatorMatrix) -> Result<C> {
    check_dim(rho.dim(), op.dim())?;
    let m = rho.matrix();
    Ok(op.matrix().triplets().map(|(r, c, v)| v * m[[c, r]]).sum())
}

/// Diagonal moments `(⟨n⟩, ⟨n(n−1)⟩, ⟨n²⟩)` of one site.
fn number_moments(rho: &DensityMatrix, space: &FockSpace, site: usize) -> Result<(f64, f64, f64)> {
    check_dim(space.dim(), rho.dim())?;
    check_site(space, site)?;
    let m = rho.matrix();
    let (mut n1, mut n2, mut nsq) = (0.0, 0.0, 0.0);
    for i in 0..space.dim() {
        let p = m[[i, i]].re;
        let n = space.photons_at(i, site) as f64;
        n1 += n * p;
        n2 += n * (n - 1.0) * p;
        nsq += n * n * p;
    }
    Ok((n1, n2, nsq))
}

/// Mean photon number on one site.
pub fn population(rho: &DensityMatrix, space: &FockSpace, site: usize) -> Result<f64> {
    Ok(number_moments(rho, space, site)?.0)
}

/// `⟨a†a†aa⟩ / ⟨a†a⟩²` on one site.
pub fn g2_local(rho: &DensityMatrix, space: &FockSpace, site: usize) -> Result<f64> {
    let (n1, n2, _) = number_moments(rho, space, site)?;
    if !(n1 > 0.0) {
        return Err(Error::VacuumState);
    }
    Ok(n2 / (n1 * n1))
}

pub fn number_variance(rho: &DensityMatrix, space: &FockSpace, site: usize) -> Result<f64> {
    let (n1, _, nsq) = number_moments(rho, space, site)?;
    Ok(nsq - n1 * n1)
}

/// Probability that `site` holds the maximal `n_max` photons; a large value
/// signals that the truncation is too tight.
pub fn top_level_weight(rho: &DensityMatrix, space: &FockSpace, site: usize) -> Result<f64> {
    if rho.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: rho.dim(),
        });
    }
    Ok((0..space.dim())
        .filter(|&i| space.photons_at(i, site) == space.n_max())
        .map(|i| rho.matrix()[[i, i]].re)
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    /// `τ_k = k Δτ`, `Δτ = T_max / N`.
    pub tau: Vec<f64>,
    pub values: Vec<C>,
    pub t_max: f64,
    /// `⟨a†⟩⟨a⟩` of the state the series was computed from.
    pub coherent_offset: C,
}

impl CorrelationSeries {
    pub fn step(&self) -> f64 {
        self.t_max / self.tau.len() as f64
    }
}

/// `S(τ) = Tr[a† e^{Lτ}(a ρ_ss)]` at `N` uniform delays covering `[0, T_max)`.
pub fn autocorrelation(
    rho_ss: &DensityMatrix,
    l: &Superoperator,
    space: &FockSpace,
    site: usize,
    t_max: f64,
    samples: usize,
) -> Result<CorrelationSeries> {
    check_dim(space.dim(), rho_ss.dim())?;
    check_dim(l.dim(), rho_ss.dim())?;
    check_site(space, site)?;
    if !(t_max > 0.0) || samples < 2 {
        return Err(Error::InvalidArgument("need T_max > 0 and at least two samples".into()));
    }
    let a = space.site_operator(site, SiteOperatorKind::Annihilate)?;
    let d = space.dim();
    let step = t_max / samples as f64;
    let a_rho = a.dense().dot(rho_ss.matrix());
    let mut x = vec_cols(&a_rho);
    // Tr[a† X] = Σ conj(a_{c r}) X_{c r}
    let probe: Vec<(usize, C)> = a.matrix().triplets().map(|(r, c, v)| (r + c * d, v.conj())).collect();
    let trace_with = |x: &[C]| -> C { probe.iter().map(|&(k, v)| v * x[k]).sum() };
    let propagator = Propagator::new(l, step)?;
    let mut values = Vec::with_capacity(samples);
    values.push(trace_with(&x));
    for _ in 1..samples {
        x = propagator.step(&x)?;
        values.push(trace_with(&x));
    }
    let alpha = expectation(rho_ss, &a)?;
    Ok(CorrelationSeries {
        tau: (0..samples).map(|k| k as f64 * step).collect(),
        values,
        t_max,
        coherent_offset: C::new(alpha.norm_sqr(), 0.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// `ω − ω_L` in ascending order, spacing `2π / T_max`.
    pub omega: Vec<f64>,
    pub power: Vec<f64>,
    /// Power without coherent subtraction.
    pub raw_power: Vec<f64>,
    pub t_max: f64,
    pub samples: usize,
    pub subtracted: bool,
    pub coherent_offset: C,
}

impl SpectrumResult {
    pub fn resolution(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.t_max
    }

    /// Index of the bin closest to `omega`.
    pub fn bin_of(&self, omega: f64) -> usize {
        let res = self.resolution();
        let m = (omega / res).round() as i64 + (self.samples / 2) as i64;
        m.clamp(0, self.samples as i64 - 1) as usize
    }

    /// Indices of strict local maxima with power above `threshold`,
    /// strongest first.
    pub fn local_maxima(&self, threshold: f64) -> Vec<usize> {
        let mut out = local_maxima(&self.power, threshold);
        out.sort_by(|&a, &b| self.power[b].total_cmp(&self.power[a]).then(a.cmp(&b)));
        out
    }
}

fn local_maxima(p: &[f64], threshold: f64) -> Vec<usize> {
    (1..p.len().saturating_sub(1))
        .filter(|&i| p[i] > threshold && p[i] > p[i - 1] && p[i] >= p[i + 1])
        .collect()
}

fn dft_power(values: &[C], step: f64) -> Vec<f64> {
    let n = values.len();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // reorder to m = −N/2 … N/2 − 1
    (0..n)
        .map(|k| {
            let v = buf[(k + n - n / 2) % n] * step;
            v.norm_sqr()
        })
        .collect()
}

/// `|F(ω)|²` of a correlation series, optionally after removing the coherent
/// offset `⟨a†⟩⟨a⟩`.
pub fn emission_spectrum(series: &CorrelationSeries, subtract_coherent: bool, coherent_offset: Option<C>) -> Result<SpectrumResult> {
    let n = series.values.len();
    if n < 2 || series.tau.len() != n {
        return Err(Error::InvalidArgument("correlation series needs at least two samples".into()));
    }
    let step = series.step();
    if series
        .tau
        .iter()
        .enumerate()
        .any(|(k, &t)| (t - k as f64 * step).abs() > 1e-9 * step.max(t.abs()))
    {
        return Err(Error::NonUniformGrid);
    }
    let offset = coherent_offset.unwrap_or(series.coherent_offset);
    let raw_power = dft_power(&series.values, step);
    let power = if subtract_coherent {
        let shifted: Vec<C> = series.values.iter().map(|v| v - offset).collect();
        dft_power(&shifted, step)
    } else {
        raw_power.clone()
    };
    let res = 2.0 * std::f64::consts::PI / series.t_max;
    let half = (n / 2) as f64;
    Ok(SpectrumResult {
        omega: (0..n).map(|k| (k as f64 - half) * res).collect(),
        power,
        raw_power,
        t_max: series.t_max,
        samples: n,
        subtracted: subtract_coherent,
        coherent_offset: offset,
    })
}

/// One spectrum of a scan, labelled by the scanned parameter.
#[derive(Clone, Debug)]
pub struct SpectrumSlice {
    pub parameter: f64,
    pub spectrum: SpectrumResult,
    /// Expected position of the reference line (line B) in this slice.
    pub anchor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    /// `(slice index, frequency)` pairs in slice order.
    pub points: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RidgeCrossing {
    Crossing {
        parameter: f64,
        /// Frequency separation at the point of nearest approach.
        separation: f64,
        reference: Ridge,
        other: Ridge,
    },
    /// Fewer than two ridges meet; lines coalesce or one is undetectable.
    NoCrossing { ridges: usize },
}

/// Links local maxima of successive slices into ridges. Each live ridge takes
/// the nearest unclaimed maximum of the next slice (lower frequency on ties)
/// if it lies within `max_jump`; unclaimed maxima open new ridges.
pub fn trace_ridges(slices: &[SpectrumSlice], max_jump: f64) -> Vec<Ridge> {
    let global = slices
        .iter()
        .flat_map(|s| s.spectrum.power.iter().copied())
        .fold(0.0, f64::max);
    let threshold = 1e-6 * global;
    let mut ridges: Vec<Ridge> = Vec::new();
    let mut live: Vec<usize> = Vec::new();
    for (k, s) in slices.iter().enumerate() {
        let mut freqs: Vec<f64> = local_maxima(&s.spectrum.power, threshold)
            .into_iter()
            .map(|i| s.spectrum.omega[i])
            .collect();
        freqs.sort_by(f64::total_cmp);
        let mut claimed = vec![false; freqs.len()];
        let mut next_live = Vec::new();
        // ridges are linked in order of their last frequency for determinism
        live.sort_by(|&a, &b| ridges[a].points.last().unwrap().1.total_cmp(&ridges[b].points.last().unwrap().1));
        for &r in &live {
            let last = ridges[r].points.last().unwrap().1;
            let best = freqs
                .iter()
                .enumerate()
                .filter(|&(i, _)| !claimed[i])
                .min_by(|(_, a), (_, b)| (*a - last).abs().total_cmp(&(*b - last).abs()).then(a.total_cmp(b)));
            if let Some((i, &f)) = best {
                if (f - last).abs() <= max_jump {
                    claimed[i] = true;
                    ridges[r].points.push((k, f));
                    next_live.push(r);
                }
            }
        }
        for (i, &f) in freqs.iter().enumerate() {
            if !claimed[i] {
                ridges.push(Ridge { points: vec![(k, f)] });
                next_live.push(ridges.len() - 1);
            }
        }
        live = next_live;
    }
    ridges
}

/// Locates where a secondary ridge meets the reference ridge (the one that
/// follows the slices' `anchor` positions).
///
/// Two local-maximum ridges cannot pass through each other: near the meeting
/// point they merge into one maximum, so the secondary ridge is absorbed and
/// re-emerges on the other side some slices later. In order of preference a
/// crossing is
/// a sign change of the frequency offset along common slices, an absorbed
/// ridge paired with a ridge emitted on the opposite side (midpoint of the
/// gap), a lone absorbed or emitted ridge, and finally the nearest approach
/// within two bins.
pub fn ridge_crossing(slices: &[SpectrumSlice]) -> Result<RidgeCrossing> {
    if slices.len() < 2 {
        return Err(Error::InvalidArgument("ridge tracking needs at least two slices".into()));
    }
    let n = slices[0].spectrum.samples;
    if slices.iter().any(|s| s.spectrum.samples != n) {
        return Err(Error::InvalidArgument("slices must share one frequency grid".into()));
    }
    let increasing = slices.windows(2).all(|w| w[1].parameter > w[0].parameter);
    let decreasing = slices.windows(2).all(|w| w[1].parameter < w[0].parameter);
    if !(increasing || decreasing) {
        return Err(Error::InvalidArgument("scan parameter must be monotone".into()));
    }
    let bin = slices[0].spectrum.resolution();
    let jump = 3.0 * bin;
    let ridges = trace_ridges(slices, jump);

    // reference ridge: smallest mean distance to the anchors, penalizing gaps
    let score = |r: &Ridge| -> f64 {
        let mean = r.points.iter().map(|&(k, f)| (f - slices[k].anchor).abs()).sum::<f64>() / r.points.len() as f64;
        mean + bin * (slices.len() - r.points.len()) as f64
    };
    let Some(reference) = ridges.iter().min_by(|a, b| score(a).total_cmp(&score(b))).cloned() else {
        return Ok(RidgeCrossing::NoCrossing { ridges: 0 });
    };
    let ref_at = |k: usize| reference.points.iter().find(|p| p.0 == k).map(|p| p.1);
    let param = |k: usize| slices[k].parameter;
    let last = slices.len() - 1;
    let others: Vec<&Ridge> = ridges.iter().filter(|r| **r != reference && r.points.len() >= 2).collect();

    // (rank, separation, parameter, ridge)
    let mut candidates: Vec<(u8, f64, f64, &Ridge)> = Vec::new();
    let mut absorbed = Vec::new();
    let mut emitted = Vec::new();
    for &r in &others {
        let offsets: Vec<(usize, f64)> = r.points.iter().filter_map(|&(k, f)| ref_at(k).map(|fr| (k, f - fr))).collect();
        for w in offsets.windows(2) {
            let ((k0, d0), (k1, d1)) = (w[0], w[1]);
            if d0 * d1 < 0.0 {
                let t = d0 / (d0 - d1);
                candidates.push((0, 0.0, param(k0) + t * (param(k1) - param(k0)), r));
            }
        }
        let &(k_end, f_end) = r.points.last().unwrap();
        if k_end < last {
            if let Some(fr) = ref_at(k_end + 1) {
                if (f_end - fr).abs() <= jump {
                    absorbed.push((k_end, f_end - fr, r));
                }
            }
        }
        let (k_start, f_start) = r.points[0];
        if k_start > 0 {
            if let Some(fr) = ref_at(k_start - 1) {
                if (f_start - fr).abs() <= jump {
                    emitted.push((k_start, f_start - fr, r));
                }
            }
        }
        for &(k, d) in &offsets {
            if d.abs() <= 2.0 * bin {
                candidates.push((3, d.abs(), param(k), r));
            }
        }
    }
    for &(ka, da, ra) in &absorbed {
        let partner = emitted
            .iter()
            .filter(|&&(ke, de, _)| ke > ka && de * da < 0.0)
            .min_by_key(|&&(ke, _, _)| ke);
        match partner {
            Some(&(ke, de, _)) => candidates.push((1, 0.5 * (da.abs() + de.abs()), 0.5 * (param(ka) + param(ke)), ra)),
            None => candidates.push((2, da.abs(), param(ka + 1), ra)),
        }
    }
    for &(ke, de, re) in &emitted {
        if !absorbed.iter().any(|&(ka, da, _)| ka < ke && da * de < 0.0) {
            candidates.push((2, de.abs(), param(ke - 1), re));
        }
    }
    let best = candidates
        .into_iter()
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    Ok(match best {
        Some((_, separation, parameter, other)) => RidgeCrossing::Crossing {
            parameter,
            separation,
            reference,
            other: other.clone(),
        },
        None => RidgeCrossing::NoCrossing { ridges: ridges.len() },
    })
}

/// Weight of a dimer two-photon state on `|20⟩` and `|02⟩`.
pub fn double_occupancy_profile(psi: &[C], space: &FockSpace) -> Result<f64> {
    check_dim(space.dim(), psi.len())?;
    if space.sites() != 2 {
        return Err(Error::InvalidArgument("double occupancy is defined for the dimer".into()));
    }
    let total: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
    if total == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut doubled = 0.0;
    let mut outside = 0.0;
    for (i, x) in psi.iter().enumerate() {
        let w = x.norm_sqr();
        if space.excitations(i) != 2 || space.total_photons(i) != 2 {
            outside += w;
        } else if space.photons_at(i, 0) == 2 || space.photons_at(i, 1) == 2 {
            doubled += w;
        }
    }
    if outside > 1e-10 * total {
        return Err(Error::InvalidArgument("state is not confined to the two-photon subspace".into()));
    }
    Ok(doubled / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{photon_loss_liouvillian, steady_state};
    use crate::models::{bh_hamiltonian, excitation_block, BhParams, Detuning};
    use approx::assert_abs_diff_eq;
    use ndarray_linalg::{Eigh, UPLO};

    fn fock(n_max: usize, n: usize) -> (FockSpace, DensityMatrix) {
        let s = FockSpace::new(1, n_max, false).unwrap();
        (s, DensityMatrix::basis_projector(n_max + 1, n))
    }

    fn coherent(n_max: usize, alpha: C) -> (FockSpace, DensityMatrix) {
        let s = FockSpace::new(1, n_max, false).unwrap();
        let mut psi = vec![C::new((-alpha.norm_sqr() / 2.0).exp(), 0.0)];
        for n in 1..=n_max {
            let prev = psi[n - 1];
            psi.push(prev * alpha / (n as f64).sqrt());
        }
        (s, DensityMatrix::pure(&psi))
    }

    #[test]
    fn fock_state_statistics() {
        let (s, rho) = fock(3, 1);
        assert_eq!(g2_local(&rho, &s, 0).unwrap(), 0.0);
        assert_eq!(number_variance(&rho, &s, 0).unwrap(), 0.0);
        let (s, rho) = fock(3, 2);
        assert_abs_diff_eq!(g2_local(&rho, &s, 0).unwrap(), 0.5, epsilon = 1e-15);
        let (s, rho) = fock(3, 0);
        assert!(matches!(g2_local(&rho, &s, 0), Err(Error::VacuumState)));
        let n = s.site_operator(0, SiteOperatorKind::Number).unwrap();
        assert_eq!(expectation(&rho, &n).unwrap(), C::new(0.0, 0.0));
    }

    #[test]
    fn coherent_state_statistics() {
        for &alpha in &[C::new(0.3, 0.0), C::new(0.5, -0.8), C::new(0.0, 1.1)] {
            let (s, rho) = coherent(40, alpha);
            let a = s.site_operator(0, SiteOperatorKind::Annihilate).unwrap();
            assert!((expectation(&rho, &a).unwrap() - alpha).norm() < 1e-10);
            assert_abs_diff_eq!(g2_local(&rho, &s, 0).unwrap(), 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(number_variance(&rho, &s, 0).unwrap(), alpha.norm_sqr(), epsilon = 1e-10);
            let n = s.site_operator(0, SiteOperatorKind::Number).unwrap();
            assert!(expectation(&rho, &n).unwrap().im.abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_two_photon_mode_has_half_variance() {
        let s = FockSpace::new(2, 2, false).unwrap();
        let r2 = std::f64::consts::SQRT_2;
        let mut psi = vec![C::new(0.0, 0.0); s.dim()];
        psi[6] = C::new(1.0, 0.0); // |20⟩
        psi[2] = C::new(1.0, 0.0); // |02⟩
        psi[4] = C::new(r2, 0.0); // |11⟩
        let rho = DensityMatrix::pure(&psi);
        assert_abs_diff_eq!(number_variance(&rho, &s, 0).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(double_occupancy_profile(&psi, &s).unwrap(), 0.5, epsilon = 1e-14);
    }

    fn two_photon_eigenvectors(j: f64, u: f64) -> (FockSpace, Vec<Vec<C>>) {
        let s = FockSpace::new(2, 2, false).unwrap();
        let p = BhParams {
            sites: 2,
            hopping: j,
            kerr: u,
            drive: 0.0,
            detuning: Detuning::Explicit(0.0),
            gamma_p: 1.0,
        };
        let h = bh_hamiltonian(&p, &s).unwrap();
        let block = excitation_block(&h, &s, 2).unwrap();
        let (_, v) = block.matrix.eigh(UPLO::Upper).unwrap();
        let vecs = (0..3)
            .map(|c| {
                let mut psi = vec![C::new(0.0, 0.0); s.dim()];
                for (k, &i) in block.basis.iter().enumerate() {
                    psi[i] = v[[k, c]];
                }
                psi
            })
            .collect();
        (s, vecs)
    }

    #[test]
    fn double_occupancy_of_dimer_modes() {
        // ascending: |2+⟩ (lowest), |2_0⟩, |2−⟩
        let (s, v) = two_photon_eigenvectors(1.0, 1.0);
        assert_abs_diff_eq!(double_occupancy_profile(&v[0], &s).unwrap(), 0.276393202250021, epsilon = 1e-12);
        assert_abs_diff_eq!(double_occupancy_profile(&v[2], &s).unwrap(), 0.723606797749979, epsilon = 1e-12);
        let (s, v) = two_photon_eigenvectors(1.0, 1e6);
        assert!(double_occupancy_profile(&v[0], &s).unwrap() < 1e-11);
        assert!(matches!(double_occupancy_profile(&[C::new(0.0, 0.0); 9], &s), Err(Error::ZeroVector)));
    }

    fn driven_cavity(omega: f64) -> (FockSpace, Superoperator, DensityMatrix) {
        let s = FockSpace::new(1, 10, false).unwrap();
        let p = BhParams {
            sites: 1,
            hopping: 0.0,
            kerr: 0.0,
            drive: omega,
            detuning: Detuning::Explicit(0.0),
            gamma_p: 1.0,
        };
        let l = photon_loss_liouvillian(&bh_hamiltonian(&p, &s).unwrap(), &s, 1.0).unwrap();
        let rho = steady_state(&l).unwrap();
        (s, l, rho)
    }

    #[test]
    fn linear_cavity_correlation_is_flat() {
        let (s, l, rho) = driven_cavity(0.2);
        let series = autocorrelation(&rho, &l, &s, 0, 5.0, 64).unwrap();
        let n = population(&rho, &s, 0).unwrap();
        for v in &series.values {
            assert!((v - C::new(n, 0.0)).norm() < 1e-9, "{v}");
        }
        assert_abs_diff_eq!(series.coherent_offset.re, n, epsilon = 1e-10);
        let spec = emission_spectrum(&series, true, None).unwrap();
        let raw_peak = spec.raw_power.iter().copied().fold(0.0, f64::max);
        assert!(spec.power.iter().all(|&p| p < 1e-12 * raw_peak));
        assert_abs_diff_eq!(spec.resolution(), 2.0 * std::f64::consts::PI / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.omega[1] - spec.omega[0], spec.resolution(), epsilon = 1e-12);
    }

    #[test]
    fn vacuum_correlation_vanishes() {
        let (s, l, rho) = driven_cavity(0.0);
        let series = autocorrelation(&rho, &l, &s, 0, 2.0, 16).unwrap();
        assert!(series.values.iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn discrete_parseval_and_peak_position() {
        // single damped line at E: S(τ) = e^{(iE − 1/2)τ}
        let (t_max, n, e) = (40.0, 1024, 3.0);
        let step = t_max / n as f64;
        let tau: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
        let values: Vec<C> = tau.iter().map(|&t| (C::new(-0.5, e) * t).exp()).collect();
        let series = CorrelationSeries {
            tau,
            values: values.clone(),
            t_max,
            coherent_offset: C::new(0.0, 0.0),
        };
        let spec = emission_spectrum(&series, false, None).unwrap();
        let peak = spec.local_maxima(0.0)[0];
        assert!((spec.omega[peak] - e).abs() <= spec.resolution());
        let lhs: f64 = spec.power.iter().sum::<f64>() * spec.resolution() / (2.0 * std::f64::consts::PI);
        let rhs: f64 = step * values.iter().map(|v| v.norm_sqr()).sum::<f64>();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * rhs);
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let series = CorrelationSeries {
            tau: vec![0.0, 1.0, 2.5, 3.0],
            values: vec![C::new(1.0, 0.0); 4],
            t_max: 4.0,
            coherent_offset: C::new(0.0, 0.0),
        };
        assert!(matches!(emission_spectrum(&series, false, None), Err(Error::NonUniformGrid)));
    }

    fn slice(parameter: f64, lines: &[(f64, f64)], anchor: f64) -> SpectrumSlice {
        let n = 256;
        let t_max = 20.0;
        let res = 2.0 * std::f64::consts::PI / t_max;
        let omega: Vec<f64> = (0..n).map(|k| (k as f64 - 128.0) * res).collect();
        let power: Vec<f64> = omega
            .iter()
            .map(|w| lines.iter().map(|&(c, h)| h / (1.0 + ((w - c) / 0.3).powi(2))).sum())
            .collect();
        SpectrumSlice {
            parameter,
            anchor,
            spectrum: SpectrumResult {
                omega,
                raw_power: power.clone(),
                power,
                t_max,
                samples: n,
                subtracted: true,
                coherent_offset: C::new(0.0, 0.0),
            },
        }
    }

    #[test]
    fn ridge_crossing_on_synthetic_lines() {
        // reference fixed at 10, second line sweeping down from 16 to 4
        let slices: Vec<SpectrumSlice> = (0..25)
            .map(|k| slice(k as f64, &[(10.0, 1.0), (16.0 - 0.5 * k as f64, 0.3)], 10.0))
            .collect();
        match ridge_crossing(&slices).unwrap() {
            RidgeCrossing::Crossing { parameter, .. } => assert!((parameter - 12.0).abs() <= 1.0, "{parameter}"),
            other => panic!("{other:?}"),
        }
        let parallel: Vec<SpectrumSlice> = (0..10)
            .map(|k| slice(k as f64, &[(10.0, 1.0), (-5.0, 0.5)], 10.0))
            .collect();
        assert!(matches!(ridge_crossing(&parallel).unwrap(), RidgeCrossing::NoCrossing { .. }));
    }

    #[test]
    fn steady_state_of_resonant_linear_dimer() {
        let s = FockSpace::new(2, 5, false).unwrap();
        let p = BhParams::resonant_dimer(0.5, 0.0, 0.1);
        let l = photon_loss_liouvillian(&bh_hamiltonian(&p, &s).unwrap(), &s, 1.0).unwrap();
        let rho = steady_state(&l).unwrap();
        for site in 0..2 {
            assert_abs_diff_eq!(population(&rho, &s, site).unwrap(), 0.04, epsilon = 1e-8);
            assert_abs_diff_eq!(g2_local(&rho, &s, site).unwrap(), 1.0, epsilon = 1e-5);
        }
    }
}
