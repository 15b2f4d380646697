//! Interchangeable ways of obtaining the site-0 g² of a model, selectable by
//! name.

use serde::{Deserialize, Serialize};

use crate::analytics::g2_closed_form_validated;
use crate::error::{Error, Result};
use crate::liouville::{photon_loss_liouvillian, steady_state, DensityMatrix};
use crate::models::{resonance_detuning_bh, ArrayModel};
use crate::observables::{g2_local, population, top_level_weight};
use crate::registry::Registry;
use crate::weakdrive::{weakdrive_g2, weakdrive_g2_momentum, DEFAULT_OMEGAS, DEFAULT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2Estimate {
    pub g2: f64,
    /// Site-0 population; `None` where the backend has no state.
    pub population: Option<f64>,
    /// Drive used; `None` for the infinitesimal-drive limit.
    pub omega: Option<f64>,
    pub converged: bool,
    /// Site-0 weight on the highest Fock level; master equation only.
    pub truncation_weight: Option<f64>,
}

pub trait G2Backend: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self, model: &dyn ArrayModel, n_max: usize) -> Result<G2Estimate>;
}

#[derive(Clone, Debug)]
pub struct MasterEquationResult {
    pub rho: DensityMatrix,
    pub g2: f64,
    pub population: f64,
    pub truncation_weight: f64,
}

/// Steady state of the photon-loss master equation at the model's drive.
pub fn master_equation_g2(model: &dyn ArrayModel, n_max: usize) -> Result<MasterEquationResult> {
    let space = model.space(n_max)?;
    let h = model.hamiltonian(&space)?;
    let l = photon_loss_liouvillian(&h, &space, model.gamma_p())?;
    let rho = steady_state(&l)?;
    Ok(MasterEquationResult {
        g2: g2_local(&rho, &space, 0)?,
        population: population(&rho, &space, 0)?,
        truncation_weight: top_level_weight(&rho, &space, 0)?,
        rho,
    })
}

pub struct MasterEquationBackend;

impl G2Backend for MasterEquationBackend {
    fn name(&self) -> &'static str {
        "master-equation"
    }

    fn estimate(&self, model: &dyn ArrayModel, n_max: usize) -> Result<G2Estimate> {
        if !(model.drive() > 0.0) {
            return Err(Error::InvalidArgument("master-equation backend needs a finite drive".into()));
        }
        let r = master_equation_g2(model, n_max)?;
        Ok(G2Estimate {
            g2: r.g2,
            population: Some(r.population),
            omega: Some(model.drive()),
            converged: true,
            truncation_weight: Some(r.truncation_weight),
        })
    }
}

pub struct WeakDriveBackend {
    pub momentum: bool,
}

impl G2Backend for WeakDriveBackend {
    fn name(&self) -> &'static str {
        if self.momentum {
            "weak-drive-momentum"
        } else {
            "weak-drive"
        }
    }

    fn estimate(&self, model: &dyn ArrayModel, n_max: usize) -> Result<G2Estimate> {
        let r = if self.momentum {
            weakdrive_g2_momentum(model, n_max, &DEFAULT_OMEGAS, DEFAULT_TOL)?
        } else {
            weakdrive_g2(model, n_max, &DEFAULT_OMEGAS, DEFAULT_TOL)?
        };
        Ok(G2Estimate {
            g2: r.converged_g2,
            population: Some(r.population),
            omega: None,
            converged: r.converged,
            truncation_weight: None,
        })
    }
}

/// Closed form; only for the Bose-Hubbard dimer at its two-photon resonance.
pub struct ClosedFormBackend;

impl G2Backend for ClosedFormBackend {
    fn name(&self) -> &'static str {
        "closed-form"
    }

    fn estimate(&self, model: &dyn ArrayModel, _n_max: usize) -> Result<G2Estimate> {
        let params: std::collections::BTreeMap<_, _> = model.describe().into_iter().collect();
        let unsupported = || Error::InvalidArgument("closed form covers the resonantly driven bh dimer only".into());
        if model.name() != "bh" || model.sites() != 2 || model.gamma_p() != 1.0 {
            return Err(unsupported());
        }
        let (j, u) = (params["J"], params["U"]);
        let space = model.space(1)?;
        if (model.detuning(&space)? - resonance_detuning_bh(j, u)).abs() > 1e-12 * (1.0 + j) {
            return Err(unsupported());
        }
        Ok(G2Estimate {
            g2: g2_closed_form_validated(j, u)?,
            population: None,
            omega: None,
            converged: true,
            truncation_weight: None,
        })
    }
}

pub fn g2_backends() -> Registry<Box<dyn G2Backend>> {
    let mut r: Registry<Box<dyn G2Backend>> = Registry::new("g2 backend");
    r.register("master-equation", Box::new(MasterEquationBackend));
    r.register("weak-drive", Box::new(WeakDriveBackend { momentum: false }));
    r.register("weak-drive-momentum", Box::new(WeakDriveBackend { momentum: true }));
    r.register("closed-form", Box::new(ClosedFormBackend));
    r
}
