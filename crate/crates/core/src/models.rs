//! Rotating-frame Bose-Hubbard and Jaynes-Cummings-Hubbard Hamiltonians.
//!
//! All rates are in units of the photon loss rate `gamma_p`. The bare cavity
//! frequency never appears; the laser enters only through the detuning
//! `delta_c = omega_c - omega_L`.
//!
//! Both models implement [`ArrayModel`] and are registered by name in
//! [`model_registry`], so sweeps and the command line can select them at
//! runtime.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{FockSpace, OperatorMatrix, SiteOperatorKind};
use crate::registry::Registry;
use crate::sparse::CsrMatrix;

type C = Complex64;

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

/// How the laser detuning is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Detuning {
    Explicit(f64),
    /// Two laser photons resonant with the lowest two-excitation level.
    TwoPhotonResonant,
    /// `M` laser photons resonant with the lowest `M`-excitation level of an
    /// `M`-site chain (commensurate filling). Identical to
    /// `TwoPhotonResonant` for the dimer.
    UnitFillingResonant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BhParams {
    pub sites: usize,
    pub hopping: f64,
    pub kerr: f64,
    pub drive: f64,
    pub detuning: Detuning,
    pub gamma_p: f64,
}

impl BhParams {
    /// Dimer driven at the two-photon resonance, `gamma_p = 1`.
    pub fn resonant_dimer(hopping: f64, kerr: f64, drive: f64) -> Self {
        Self {
            sites: 2,
            hopping,
            kerr,
            drive,
            detuning: Detuning::TwoPhotonResonant,
            gamma_p: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.hopping < 0.0 || self.kerr < 0.0 || self.drive < 0.0 {
            return Err(Error::InvalidArgument("J, U and Omega must be non-negative".into()));
        }
        if !(self.gamma_p > 0.0) {
            return Err(Error::InvalidArgument("gamma_p must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JchParams {
    pub sites: usize,
    pub hopping: f64,
    /// Resonator-emitter coupling `g`.
    pub coupling: f64,
    /// `omega_c - omega_a`.
    pub emitter_detuning: f64,
    pub drive: f64,
    pub detuning: Detuning,
    pub gamma_p: f64,
}

impl JchParams {
    fn validate(&self) -> Result<()> {
        if self.hopping < 0.0 || self.coupling < 0.0 || self.drive < 0.0 {
            return Err(Error::InvalidArgument("J, g and Omega must be non-negative".into()));
        }
        if !(self.gamma_p > 0.0) {
            return Err(Error::InvalidArgument("gamma_p must be positive".into()));
        }
        Ok(())
    }
}

fn check_space(space: &FockSpace, sites: usize, tls: bool) -> Result<()> {
    if space.sites() != sites {
        return Err(Error::DimensionMismatch {
            expected: sites,
            found: space.sites(),
        });
    }
    if space.has_tls() != tls {
        return Err(Error::InvalidArgument(format!(
            "model expects a space {} two-level systems",
            if tls { "with" } else { "without" }
        )));
    }
    Ok(())
}

/// `-J Σ_<j,j'> (a_j† a_j' + h.c.)`.
fn hopping_term(space: &FockSpace, hopping: f64) -> Result<CsrMatrix> {
    let mut h = CsrMatrix::zeros(space.dim(), space.dim());
    if hopping == 0.0 {
        return Ok(h);
    }
    for &(i, j) in space.bonds() {
        let adi = space.site_operator(i, SiteOperatorKind::Create)?;
        let aj = space.site_operator(j, SiteOperatorKind::Annihilate)?;
        let term = adi.matrix().matmul(aj.matrix());
        h = h.add_scaled(&term, re(-hopping));
        h = h.add_scaled(&term.adjoint(), re(-hopping));
    }
    Ok(h)
}

/// `Ω Σ_j (a_j† + a_j)`.
fn drive_term(space: &FockSpace, drive: f64) -> Result<CsrMatrix> {
    let mut h = CsrMatrix::zeros(space.dim(), space.dim());
    if drive == 0.0 {
        return Ok(h);
    }
    for j in 0..space.sites() {
        let a = space.site_operator(j, SiteOperatorKind::Annihilate)?;
        h = h.add_scaled(a.matrix(), re(drive));
        h = h.add_scaled(&a.matrix().adjoint(), re(drive));
    }
    Ok(h)
}

/// Diagonal `Σ_j f(n_j, excited_j)`.
fn onsite_diagonal(space: &FockSpace, f: impl Fn(usize, bool) -> f64) -> CsrMatrix {
    let d: Vec<C> = (0..space.dim())
        .map(|i| {
            space
                .labels(i)
                .iter()
                .map(|s| f(s.photons, s.excited))
                .sum::<f64>()
        })
        .map(re)
        .collect();
    CsrMatrix::from_diagonal(&d)
}

/// `H = Σ_j [Δc n_j + U a_j†a_j†a_j a_j + Ω(a_j† + a_j)] - J Σ_<j,j'>(a_j†a_j' + h.c.)`
/// with `Δc` taken literally from `detuning` (resonant variants resolved
/// against `space`).
pub fn bh_hamiltonian(params: &BhParams, space: &FockSpace) -> Result<OperatorMatrix> {
    params.validate()?;
    check_space(space, params.sites, false)?;
    let delta_c = resolve_bh_detuning(params, space)?;
    let u = params.kerr;
    let diag = onsite_diagonal(space, |n, _| {
        let n = n as f64;
        delta_c * n + u * n * (n - 1.0)
    });
    let h = diag
        .add(&hopping_term(space, params.hopping)?)
        .add(&drive_term(space, params.drive)?);
    Ok(OperatorMatrix::new(h))
}

/// JCH Hamiltonian including the emitter coupling `g(a†σ⁻ + σ⁺a)` and the
/// Hermitian conjugate of the hopping term.
pub fn jch_hamiltonian(params: &JchParams, space: &FockSpace) -> Result<OperatorMatrix> {
    params.validate()?;
    check_space(space, params.sites, true)?;
    let delta_c = resolve_jch_detuning(params, space)?;
    Ok(OperatorMatrix::new(
        jch_static_part(params, space, delta_c)?.add(&drive_term(space, params.drive)?),
    ))
}

fn jch_static_part(params: &JchParams, space: &FockSpace, delta_c: f64) -> Result<CsrMatrix> {
    let delta = params.emitter_detuning;
    let diag = onsite_diagonal(space, |n, e| {
        delta_c * n as f64 + if e { delta_c - delta } else { 0.0 }
    });
    let mut h = diag.add(&hopping_term(space, params.hopping)?);
    if params.coupling != 0.0 {
        for j in 0..space.sites() {
            let ad = space.site_operator(j, SiteOperatorKind::Create)?;
            let sm = space.site_operator(j, SiteOperatorKind::SigmaMinus)?;
            let term = ad.matrix().matmul(sm.matrix());
            h = h.add_scaled(&term, re(params.coupling));
            h = h.add_scaled(&term.adjoint(), re(params.coupling));
        }
    }
    Ok(h)
}

/// Laser detuning placing two laser photons on the lowest two-photon level of
/// the Bose-Hubbard dimer: `½(√(U² + 4J²) − U)`.
pub fn resonance_detuning_bh(hopping: f64, kerr: f64) -> f64 {
    // Written in the cancellation-free form 2J²/(√(U²+4J²)+U).
    let root = (kerr * kerr + 4.0 * hopping * hopping).sqrt();
    if root + kerr == 0.0 {
        0.0
    } else {
        2.0 * hopping * hopping / (root + kerr)
    }
}

/// Laser detuning placing two laser photons on the lowest two-excitation
/// level of the undriven JCH chain with the geometry of `space`.
pub fn resonance_detuning_jch(
    hopping: f64,
    coupling: f64,
    emitter_detuning: f64,
    space: &FockSpace,
) -> Result<f64> {
    jch_resonance(hopping, coupling, emitter_detuning, space.sites(), 2)
}

fn jch_resonance(
    hopping: f64,
    coupling: f64,
    emitter_detuning: f64,
    sites: usize,
    excitations: usize,
) -> Result<f64> {
    if !(coupling > 0.0) {
        return Err(Error::IllDefinedResonance(
            "g = 0 decouples photons and emitters".into(),
        ));
    }
    let params = JchParams {
        sites,
        hopping,
        coupling,
        emitter_detuning,
        drive: 0.0,
        detuning: Detuning::Explicit(0.0),
        gamma_p: 1.0,
    };
    let space = FockSpace::new(sites, excitations.max(1), true)?;
    let h = OperatorMatrix::new(jch_static_part(&params, &space, 0.0)?);
    let block = excitation_block(&h, &space, excitations)?;
    Ok(-lowest_eigenvalue(&block.matrix)? / excitations as f64)
}

fn bh_unit_filling_resonance(hopping: f64, kerr: f64, sites: usize) -> Result<f64> {
    if sites == 2 {
        return Ok(resonance_detuning_bh(hopping, kerr));
    }
    let params = BhParams {
        sites,
        hopping,
        kerr,
        drive: 0.0,
        detuning: Detuning::Explicit(0.0),
        gamma_p: 1.0,
    };
    // The lowest M-photon state lives in the cutoff-independent block once
    // n_max >= M; a cutoff of M is enough.
    let space = FockSpace::new(sites, sites.max(1), false)?;
    let h = bh_hamiltonian(&params, &space)?;
    let block = excitation_block(&h, &space, sites)?;
    Ok(-lowest_eigenvalue(&block.matrix)? / sites as f64)
}

fn resolve_bh_detuning(params: &BhParams, space: &FockSpace) -> Result<f64> {
    match params.detuning {
        Detuning::Explicit(d) => Ok(d),
        Detuning::TwoPhotonResonant => Ok(resonance_detuning_bh(params.hopping, params.kerr)),
        Detuning::UnitFillingResonant => {
            bh_unit_filling_resonance(params.hopping, params.kerr, space.sites())
        }
    }
}

fn resolve_jch_detuning(params: &JchParams, space: &FockSpace) -> Result<f64> {
    match params.detuning {
        Detuning::Explicit(d) => Ok(d),
        Detuning::TwoPhotonResonant => resonance_detuning_jch(
            params.hopping,
            params.coupling,
            params.emitter_detuning,
            space,
        ),
        Detuning::UnitFillingResonant => jch_resonance(
            params.hopping,
            params.coupling,
            params.emitter_detuning,
            space.sites(),
            space.sites(),
        ),
    }
}

/// `H − i(γp/2) Σ_j n_j`: photon loss only, for both models.
pub fn effective_hamiltonian(h: &OperatorMatrix, space: &FockSpace, gamma_p: f64) -> OperatorMatrix {
    let loss: Vec<C> = (0..space.dim())
        .map(|i| C::new(0.0, -0.5 * gamma_p * space.total_photons(i) as f64))
        .collect();
    OperatorMatrix::new(h.matrix().add(&CsrMatrix::from_diagonal(&loss)))
}

/// Restriction of an excitation-conserving operator to one excitation
/// manifold.
#[derive(Clone, Debug)]
pub struct ExcitationBlock {
    pub excitations: usize,
    /// Flat indices of the block's basis states, ascending.
    pub basis: Vec<usize>,
    pub matrix: Array2<C>,
}

pub fn excitation_block(h: &OperatorMatrix, space: &FockSpace, excitations: usize) -> Result<ExcitationBlock> {
    if h.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: h.dim(),
        });
    }
    let n: Vec<usize> = (0..space.dim()).map(|i| space.excitations(i)).collect();
    if h
        .matrix()
        .triplets()
        .any(|(r, c, v)| n[r] != n[c] && v.norm() > 0.0)
    {
        return Err(Error::NotExcitationConserving);
    }
    let basis: Vec<usize> = (0..space.dim()).filter(|&i| n[i] == excitations).collect();
    let pos: BTreeMap<usize, usize> = basis.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut matrix = Array2::zeros((basis.len(), basis.len()));
    for (k, &i) in basis.iter().enumerate() {
        for (c, v) in h.matrix().row(i) {
            if let Some(&kc) = pos.get(&c) {
                matrix[[k, kc]] = v;
            }
        }
    }
    Ok(ExcitationBlock {
        excitations,
        basis,
        matrix,
    })
}

/// Sorted eigenvalues of a Hermitian block.
pub fn hermitian_eigenvalues(m: &Array2<C>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let (w, _) = m.eigh(UPLO::Upper)?;
    Ok(w.to_vec())
}

fn lowest_eigenvalue(m: &Array2<C>) -> Result<f64> {
    hermitian_eigenvalues(m)?
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidArgument("empty excitation block".into()))
}

/// Common surface of the lattice models.
/// Lowest one-excitation level of the undriven dimer that is odd under site
/// exchange, in the laser frame. For the Bose-Hubbard dimer this is
/// `Δc + J`; for the JCH dimer it is the antisymmetric lower polariton.
pub fn antisymmetric_one_excitation_level(model: &dyn ArrayModel) -> Result<f64> {
    if model.sites() != 2 {
        return Err(Error::InvalidArgument("site-exchange parity needs a dimer".into()));
    }
    let space = model.space(1)?;
    let h = model.with_drive(0.0).hamiltonian(&space)?;
    let block = excitation_block(&h, &space, 1)?;
    let (w, v) = block.matrix.eigh(UPLO::Upper)?;
    let swap = space.translation_operator();
    for k in 0..w.len() {
        let mut full = vec![C::new(0.0, 0.0); space.dim()];
        for (r, &i) in block.basis.iter().enumerate() {
            full[i] = v[[r, k]];
        }
        let parity: C = full.iter().zip(swap.matvec(&full)).map(|(a, b)| a.conj() * b).sum();
        if parity.re < -0.5 {
            return Ok(w[k]);
        }
    }
    Err(Error::InvalidArgument("no odd one-excitation level".into()))
}

pub trait ArrayModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn sites(&self) -> usize;
    fn has_tls(&self) -> bool;
    fn drive(&self) -> f64;
    fn gamma_p(&self) -> f64;
    /// Same model with a different drive amplitude.
    fn with_drive(&self, drive: f64) -> Box<dyn ArrayModel>;
    /// Resolved laser detuning `Δc` for this geometry.
    fn detuning(&self, space: &FockSpace) -> Result<f64>;
    fn hamiltonian(&self, space: &FockSpace) -> Result<OperatorMatrix>;
    /// Parameter echo for output metadata.
    fn describe(&self) -> Vec<(&'static str, f64)>;

    fn space(&self, n_max: usize) -> Result<FockSpace> {
        FockSpace::new(self.sites(), n_max, self.has_tls())
    }

    fn effective_hamiltonian(&self, space: &FockSpace) -> Result<OperatorMatrix> {
        Ok(effective_hamiltonian(&self.hamiltonian(space)?, space, self.gamma_p()))
    }
}

impl ArrayModel for BhParams {
    fn name(&self) -> &'static str {
        "bh"
    }

    fn sites(&self) -> usize {
        self.sites
    }

    fn has_tls(&self) -> bool {
        false
    }

    fn drive(&self) -> f64 {
        self.drive
    }

    fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    fn with_drive(&self, drive: f64) -> Box<dyn ArrayModel> {
        Box::new(Self { drive, ..self.clone() })
    }

    fn detuning(&self, space: &FockSpace) -> Result<f64> {
        resolve_bh_detuning(self, space)
    }

    fn hamiltonian(&self, space: &FockSpace) -> Result<OperatorMatrix> {
        bh_hamiltonian(self, space)
    }

    fn describe(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("M", self.sites as f64),
            ("J", self.hopping),
            ("U", self.kerr),
            ("omega", self.drive),
            ("gamma_p", self.gamma_p),
        ]
    }
}

impl ArrayModel for JchParams {
    fn name(&self) -> &'static str {
        "jch"
    }

    fn sites(&self) -> usize {
        self.sites
    }

    fn has_tls(&self) -> bool {
        true
    }

    fn drive(&self) -> f64 {
        self.drive
    }

    fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    fn with_drive(&self, drive: f64) -> Box<dyn ArrayModel> {
        Box::new(Self { drive, ..self.clone() })
    }

    fn detuning(&self, space: &FockSpace) -> Result<f64> {
        resolve_jch_detuning(self, space)
    }

    fn hamiltonian(&self, space: &FockSpace) -> Result<OperatorMatrix> {
        jch_hamiltonian(self, space)
    }

    fn describe(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("M", self.sites as f64),
            ("J", self.hopping),
            ("g", self.coupling),
            ("delta", self.emitter_detuning),
            ("omega", self.drive),
            ("gamma_p", self.gamma_p),
        ]
    }
}

/// Named numeric parameters used to construct a model at runtime.
pub type ParamSet = BTreeMap<String, f64>;

pub type ModelBuilder = fn(&ParamSet, Detuning) -> Result<Box<dyn ArrayModel>>;

fn param(p: &ParamSet, key: &str) -> Result<f64> {
    p.get(key)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("missing parameter `{key}`")))
}

fn sites_param(p: &ParamSet) -> Result<usize> {
    let m = param(p, "M")?;
    if m < 1.0 || m.fract() != 0.0 {
        return Err(Error::InvalidArgument(format!("M must be a positive integer, got {m}")));
    }
    Ok(m as usize)
}

fn build_bh(p: &ParamSet, detuning: Detuning) -> Result<Box<dyn ArrayModel>> {
    let m = BhParams {
        sites: sites_param(p)?,
        hopping: param(p, "J")?,
        kerr: param(p, "U")?,
        drive: param(p, "omega")?,
        detuning,
        gamma_p: 1.0,
    };
    m.validate()?;
    Ok(Box::new(m))
}

fn build_jch(p: &ParamSet, detuning: Detuning) -> Result<Box<dyn ArrayModel>> {
    let m = JchParams {
        sites: sites_param(p)?,
        hopping: param(p, "J")?,
        coupling: param(p, "g")?,
        emitter_detuning: param(p, "delta")?,
        drive: param(p, "omega")?,
        detuning,
        gamma_p: 1.0,
    };
    m.validate()?;
    Ok(Box::new(m))
}

/// Models selectable by name: `bh` and `jch`.
pub fn model_registry() -> Registry<ModelBuilder> {
    let mut r = Registry::new("model");
    r.register("bh", build_bh as ModelBuilder);
    r.register("jch", build_jch as ModelBuilder);
    r
}
