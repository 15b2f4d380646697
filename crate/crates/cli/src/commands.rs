//! Subcommands as interchangeable table producers, registered by name.
//!
//! Every table starts with `index`, then `M`, `nmax`, the model parameters
//! and (for a finite drive) `drive`; the subcommand appends its own columns.
//! Errors at one grid point become a status cell, never an abort.

use cra_core::analytics::{critical_point, g2_closed_form_validated, g2_large_u_asymptote, validation_gate, CriticalSource};
use cra_core::backends::g2_backends;
use cra_core::liouville::photon_loss_liouvillian;
use cra_core::models::antisymmetric_one_excitation_level;
use cra_core::observables::{
    autocorrelation, emission_spectrum, g2_local, population, ridge_crossing, top_level_weight, RidgeCrossing,
    SpectrumResult, SpectrumSlice,
};
use cra_core::weakdrive::bunching_region;
use cra_core::{steady_state, Complex64, Registry};

use crate::error::{error_code, CliError, CliResult};
use crate::grid::fmt_value;
use crate::spec::{Drive, Point, SweepSpec};
use crate::table::{Cell, Row};

/// Site-0 weight on the top Fock level above which a row is flagged.
pub const TRUNCATION_WARNING: f64 = 1e-4;

pub trait TableCommand: Send + Sync {
    fn name(&self) -> &'static str;
    /// Columns after the shared coordinate columns.
    fn columns(&self, spec: &SweepSpec) -> Vec<String>;
    /// Run-level metadata beyond the parameter echo.
    fn metadata(&self, _spec: &SweepSpec) -> CliResult<Vec<(String, String)>> {
        Ok(Vec::new())
    }
    /// Cells after the coordinates; one row per point except for spectra.
    fn evaluate(&self, spec: &SweepSpec, point: &Point) -> Vec<Row>;
    /// Run summary from the written rows (CSV text), so a resumed file ends
    /// exactly like an uninterrupted one.
    fn footer(&self, _spec: &SweepSpec, _columns: &[String], _rows: &[Vec<String>]) -> Vec<(String, String)> {
        Vec::new()
    }
}

pub fn commands() -> Registry<Box<dyn TableCommand>> {
    let mut r: Registry<Box<dyn TableCommand>> = Registry::new("command");
    r.register("ness", Box::new(Ness));
    r.register("sweep", Box::new(Sweep("sweep")));
    r.register("weakdrive", Box::new(Sweep("weakdrive")));
    r.register("spectrum", Box::new(Spectrum));
    r.register("analytic", Box::new(Analytic));
    r.register("region", Box::new(Region));
    r
}

pub fn coordinate_columns(spec: &SweepSpec) -> Vec<String> {
    let mut c = vec!["index".to_string(), "M".into(), "nmax".into()];
    c.extend(spec.param_names().iter().map(|s| s.to_string()));
    if matches!(spec.drive, Drive::Finite(_)) {
        c.push("drive".into());
    }
    c
}

pub fn coordinates(spec: &SweepSpec, point: &Point) -> Row {
    let mut r = vec![
        Cell::Int(point.index as i64),
        Cell::Int(point.sites as i64),
        Cell::Int(spec.n_max_for(point.sites) as i64),
    ];
    r.extend(point.values.iter().map(|&v| Cell::Float(v)));
    if let Some(w) = point.omega {
        r.push(Cell::Float(w));
    }
    r
}

pub fn error_status(e: &CliError) -> String {
    match e {
        CliError::Core(e) => format!("error:{}", error_code(e)),
        CliError::Usage(_) => "error:usage".into(),
        CliError::Io { .. } | CliError::Format { .. } => "error:io".into(),
    }
}

fn status(converged: bool, truncation: Option<f64>) -> &'static str {
    if !converged {
        "not-converged"
    } else if truncation.is_some_and(|w| w > TRUNCATION_WARNING) {
        "truncation-warning"
    } else {
        "ok"
    }
}

fn failed(width: usize, e: &CliError) -> Vec<Row> {
    let mut r = vec![Cell::Empty; width - 1];
    r.push(Cell::text(error_status(e)));
    vec![r]
}

/// `g2_site0`, `n_site0` over a grid with the configured backend.
struct Sweep(&'static str);

impl TableCommand for Sweep {
    fn name(&self) -> &'static str {
        self.0
    }

    fn columns(&self, _spec: &SweepSpec) -> Vec<String> {
        ["g2_site0", "n_site0", "truncation_weight", "status"].map(String::from).to_vec()
    }

    fn evaluate(&self, spec: &SweepSpec, point: &Point) -> Vec<Row> {
        let run = || -> CliResult<Row> {
            let backends = g2_backends();
            let backend = backends.get(spec.backend.as_deref().unwrap_or("weak-drive"))?;
            let model = spec.model_at(point, None)?;
            let e = backend.estimate(model.as_ref(), spec.n_max_for(point.sites))?;
            Ok(vec![
                Cell::Float(e.g2),
                Cell::opt(e.population),
                Cell::opt(e.truncation_weight),
                Cell::text(status(e.converged, e.truncation_weight)),
            ])
        };
        run().map_or_else(|e| failed(4, &e), |r| vec![r])
    }
}

/// Per-site observables of one steady state.
struct Ness;

impl TableCommand for Ness {
    fn name(&self) -> &'static str {
        "ness"
    }

    fn columns(&self, spec: &SweepSpec) -> Vec<String> {
        let m = spec.sites.values()[0] as usize;
        let mut c: Vec<String> = (0..m).map(|i| format!("g2_site{i}")).collect();
        c.extend((0..m).map(|i| format!("n_site{i}")));
        c.push("truncation_weight".into());
        c.push("status".into());
        c
    }

    fn evaluate(&self, spec: &SweepSpec, point: &Point) -> Vec<Row> {
        let width = self.columns(spec).len();
        let run = || -> CliResult<Row> {
            let model = spec.model_at(point, None)?;
            let space = model.space(spec.n_max_for(point.sites))?;
            let l = photon_loss_liouvillian(&model.hamiltonian(&space)?, &space, model.gamma_p())?;
            let rho = steady_state(&l)?;
            let m = model.sites();
            let mut r = Vec::with_capacity(width);
            for i in 0..m {
                r.push(Cell::Float(g2_local(&rho, &space, i)?));
            }
            for i in 0..m {
                r.push(Cell::Float(population(&rho, &space, i)?));
            }
            let w = top_level_weight(&rho, &space, 0)?;
            r.push(Cell::Float(w));
            r.push(Cell::text(status(true, Some(w))));
            Ok(r)
        };
        run().map_or_else(|e| failed(width, &e), |r| vec![r])
    }
}

/// Long-format emission spectra: one row per frequency bin.
struct Spectrum;

impl Spectrum {
    fn compute(spec: &SweepSpec, point: &Point) -> CliResult<(SpectrumResult, Option<f64>, f64)> {
        let model = spec.model_at(point, None)?;
        let space = model.space(spec.n_max_for(point.sites))?;
        let l = photon_loss_liouvillian(&model.hamiltonian(&space)?, &space, model.gamma_p())?;
        let rho = steady_state(&l)?;
        let s = &spec.spectrum;
        let series = autocorrelation(&rho, &l, &space, 0, s.t_max, s.samples)?;
        let spectrum = emission_spectrum(&series, s.subtract, None)?;
        let anchor = antisymmetric_one_excitation_level(model.as_ref()).ok();
        Ok((spectrum, anchor, top_level_weight(&rho, &space, 0)?))
    }
}

impl TableCommand for Spectrum {
    fn name(&self) -> &'static str {
        "spectrum"
    }

    fn columns(&self, _spec: &SweepSpec) -> Vec<String> {
        ["omega", "power", "raw_power", "anchor", "status"].map(String::from).to_vec()
    }

    fn evaluate(&self, spec: &SweepSpec, point: &Point) -> Vec<Row> {
        match Self::compute(spec, point) {
            Ok((s, anchor, weight)) => {
                let st = status(true, Some(weight));
                (0..s.samples)
                    .map(|k| {
                        vec![
                            Cell::Float(s.omega[k]),
                            Cell::Float(s.power[k]),
                            Cell::Float(s.raw_power[k]),
                            Cell::opt(anchor),
                            Cell::text(st),
                        ]
                    })
                    .collect()
            }
            Err(e) => failed(5, &e),
        }
    }

    /// Crossing of the line following `anchor` with any other ridge, along
    /// the single scanned parameter.
    fn footer(&self, spec: &SweepSpec, columns: &[String], rows: &[Vec<String>]) -> Vec<(String, String)> {
        let scanned: Vec<usize> = spec
            .params
            .iter()
            .enumerate()
            .filter(|(_, (_, g))| g.len() > 1)
            .map(|(i, _)| i)
            .collect();
        let omegas = match &spec.drive {
            Drive::Finite(g) => g.len(),
            Drive::WeakLimit => 1,
        };
        let result = match (scanned.as_slice(), omegas, spec.sites.len()) {
            ([axis], 1, 1) => {
                let name = spec.params[*axis].0;
                match slices_from_rows(spec, columns, rows, name) {
                    Some(slices) => match ridge_crossing(&slices) {
                        Ok(RidgeCrossing::Crossing { parameter, separation, .. }) => format!(
                            "{name} = {} (separation {})",
                            fmt_value(parameter),
                            fmt_value(separation)
                        ),
                        Ok(RidgeCrossing::NoCrossing { ridges }) => format!("none ({ridges} ridges)"),
                        Err(e) => format!("error:{}", error_code(&e)),
                    },
                    None => "not evaluated (missing slices or anchors)".into(),
                }
            }
            _ => "not evaluated (needs exactly one scanned parameter)".into(),
        };
        vec![("ridge_crossing".into(), result)]
    }
}

fn slices_from_rows(spec: &SweepSpec, columns: &[String], rows: &[Vec<String>], axis: &str) -> Option<Vec<SpectrumSlice>> {
    let col = |n: &str| columns.iter().position(|c| c == n);
    let (ci, ca, cw, cp, cr, cn) = (col("index")?, col(axis)?, col("omega")?, col("power")?, col("raw_power")?, col("anchor")?);
    let num = |s: &str| s.parse::<f64>().ok();
    let mut slices: Vec<SpectrumSlice> = Vec::new();
    let mut current: Option<String> = None;
    for r in rows {
        if current.as_deref() != Some(r[ci].as_str()) {
            current = Some(r[ci].clone());
            slices.push(SpectrumSlice {
                parameter: num(&r[ca])?,
                anchor: num(&r[cn])?,
                spectrum: SpectrumResult {
                    omega: Vec::new(),
                    power: Vec::new(),
                    raw_power: Vec::new(),
                    t_max: spec.spectrum.t_max,
                    samples: 0,
                    subtracted: spec.spectrum.subtract,
                    coherent_offset: Complex64::new(0.0, 0.0),
                },
            });
        }
        let s = &mut slices.last_mut()?.spectrum;
        s.omega.push(num(&r[cw])?);
        s.power.push(num(&r[cp])?);
        s.raw_power.push(num(&r[cr])?);
        s.samples += 1;
    }
    Some(slices)
}

/// Closed-form dimer g² with its large-U asymptote.
struct Analytic;

impl TableCommand for Analytic {
    fn name(&self) -> &'static str {
        "analytic"
    }

    fn columns(&self, _spec: &SweepSpec) -> Vec<String> {
        ["g2_site0", "g2_asymptote", "status"].map(String::from).to_vec()
    }

    fn metadata(&self, _spec: &SweepSpec) -> CliResult<Vec<(String, String)>> {
        let gate = validation_gate();
        let mut m = vec![
            (
                "validation_gate".into(),
                format!(
                    "{} (omega {}, nmax {}, worst relative error {:.3e} against tolerance {})",
                    if gate.passed { "passed" } else { "failed" },
                    fmt_value(gate.omega),
                    gate.n_max,
                    gate.worst_relative_error(),
                    fmt_value(gate.tolerance)
                ),
            ),
        ];
        let c = critical_point(true)?;
        let source = match c.source {
            CriticalSource::OracleLocated => "located",
            CriticalSource::Quoted => "quoted",
        };
        m.push(("critical_J".into(), fmt_value(c.j_c)));
        m.push(("critical_U".into(), fmt_value(c.u_c)));
        m.push(("critical_source".into(), source.into()));
        m.push((
            "critical_verdict".into(),
            match c.matched {
                Some(v) if v == c.candidates[0] => "matches sqrt(3+2sqrt2)/4".into(),
                Some(_) => "matches sqrt(3+2sqrt2)/2".into(),
                None => "matches neither candidate".into(),
            },
        ));
        Ok(m)
    }

    fn evaluate(&self, _spec: &SweepSpec, point: &Point) -> Vec<Row> {
        let (j, u) = (point.values[0], point.values[1]);
        match g2_closed_form_validated(j, u) {
            Ok(g2) => vec![vec![Cell::Float(g2), Cell::Float(g2_large_u_asymptote(j, u)), Cell::text("ok")]],
            Err(e) => failed(3, &e.into()),
        }
    }
}

/// Bunched U interval per (M, J): g² maximum and the g² = 1 crossing beyond it.
struct Region;

impl TableCommand for Region {
    fn name(&self) -> &'static str {
        "region"
    }

    fn columns(&self, _spec: &SweepSpec) -> Vec<String> {
        ["u_lhs", "u_rhs", "peak_g2", "status"].map(String::from).to_vec()
    }

    fn evaluate(&self, spec: &SweepSpec, point: &Point) -> Vec<Row> {
        let run = || -> CliResult<Row> {
            let backends = g2_backends();
            let backend = backends.get(spec.backend.as_deref().unwrap_or("weak-drive"))?;
            let n_max = spec.n_max_for(point.sites);
            let u_grid = spec.u_scan.as_ref().expect("region spec has a U scan").values();
            let g2 = |u: f64| -> cra_core::Result<f64> {
                let model = spec.model_at(point, Some(u)).map_err(|e| match e {
                    CliError::Core(e) => e,
                    other => cra_core::Error::InvalidArgument(other.to_string()),
                })?;
                Ok(backend.estimate(model.as_ref(), n_max)?.g2)
            };
            let r = bunching_region(point.values[0], u_grid, g2)?;
            Ok(vec![
                Cell::opt(r.u_lhs),
                Cell::opt(r.u_rhs),
                Cell::Float(r.peak_g2),
                Cell::text(if r.is_empty() { "empty" } else { "ok" }),
            ])
        };
        run().map_or_else(|e| failed(4, &e), |r| vec![r])
    }
}

/// `status` counts in first-seen order.
pub fn status_summary(columns: &[String], rows: &[Vec<String>]) -> String {
    let Some(c) = columns.iter().position(|n| n == "status") else {
        return String::new();
    };
    let mut counts: Vec<(String, usize)> = Vec::new();
    for r in rows {
        match counts.iter_mut().find(|(s, _)| *s == r[c]) {
            Some(e) => e.1 += 1,
            None => counts.push((r[c].clone(), 1)),
        }
    }
    if counts.is_empty() {
        return "no rows".into();
    }
    counts.iter().map(|(s, n)| format!("{s}={n}")).collect::<Vec<_>>().join(" ")
}
