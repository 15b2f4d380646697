//! Validated description of one run.

use std::path::PathBuf;

use cra_core::analytics::line_crossing_ratio;
use cra_core::backends::g2_backends;
use cra_core::models::{model_registry, ArrayModel, Detuning, ParamSet};
use cra_core::weakdrive::{DEFAULT_OMEGAS, DEFAULT_TOL};

use crate::error::{usage, CliResult};
use crate::grid::{fmt_value, Grid};
use crate::options::{Format, Options};

#[derive(Clone, Debug, PartialEq)]
pub enum Drive {
    Finite(Grid),
    WeakLimit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumSettings {
    pub t_max: f64,
    pub samples: usize,
    pub subtract: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub command: &'static str,
    pub preset: Option<String>,
    pub model: String,
    pub sites: Grid,
    /// `None`: 4 for the Bose-Hubbard dimer, 3 for longer chains, 2 for JCH.
    pub n_max: Option<usize>,
    /// Model parameters in canonical order, each a grid (possibly one point).
    pub params: Vec<(&'static str, Grid)>,
    /// Inner U scan of `region`.
    pub u_scan: Option<Grid>,
    pub drive: Drive,
    pub detuning: Detuning,
    pub backend: Option<String>,
    pub spectrum: SpectrumSettings,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub resume: bool,
    pub threads: Option<usize>,
}

/// One grid point, enumerated with the first axis outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub index: usize,
    pub sites: usize,
    pub values: Vec<f64>,
    pub omega: Option<f64>,
}

fn param_names(model: &str) -> &'static [&'static str] {
    match model {
        "jch" => &["J", "g", "delta"],
        _ => &["J", "U"],
    }
}

fn flag_of(name: &str) -> &'static str {
    match name {
        "J" => "j",
        "U" => "u",
        "g" => "g",
        _ => "delta",
    }
}

fn param_source<'a>(o: &'a Options, name: &str) -> (Option<f64>, Option<&'a String>) {
    match name {
        "J" => (o.j, o.j_grid.as_ref()),
        "U" => (o.u, o.u_grid.as_ref()),
        "g" => (o.g, o.g_grid.as_ref()),
        _ => (o.delta, o.delta_grid.as_ref()),
    }
}

fn either(fixed: Option<f64>, grid: Option<&String>, flag: &str) -> CliResult<Option<Grid>> {
    match (fixed, grid) {
        (Some(_), Some(_)) => Err(usage(format!("--{flag} and --{flag}-grid are mutually exclusive"))),
        (Some(v), None) => Ok(Some(Grid::single(v))),
        (None, Some(g)) => Ok(Some(g.parse()?)),
        (None, None) => Ok(None),
    }
}

fn parse_detuning(s: &str) -> CliResult<Detuning> {
    match s {
        "two-photon" => Ok(Detuning::TwoPhotonResonant),
        "unit-filling" => Ok(Detuning::UnitFillingResonant),
        v => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Detuning::Explicit)
            .ok_or_else(|| usage(format!("--detuning: expected two-photon, unit-filling or a number, got `{v}`"))),
    }
}

fn detuning_label(d: Detuning) -> String {
    match d {
        Detuning::TwoPhotonResonant => "two-photon".into(),
        Detuning::UnitFillingResonant => "unit-filling".into(),
        Detuning::Explicit(v) => fmt_value(v),
    }
}

impl SweepSpec {
    pub fn from_options(command: &'static str, o: &Options) -> CliResult<Self> {
        let model = o.model.clone().unwrap_or_else(|| "bh".into());
        if !model_registry().contains(&model) {
            return Err(usage(format!("--model: unknown model `{model}` (available: bh, jch)")));
        }
        let sites = match (o.sites, &o.sites_grid) {
            (Some(_), Some(_)) => return Err(usage("--M and --M-grid are mutually exclusive")),
            (Some(m), None) => m.to_string().parse()?,
            (None, Some(g)) => g.parse()?,
            (None, None) => Grid::single(2.0),
        };
        if sites.values().iter().any(|&m| m < 1.0 || m.fract() != 0.0) {
            return Err(usage(format!("--M-grid `{sites}` must hold positive integers")));
        }
        if o.nmax == Some(0) {
            return Err(usage("--nmax must be at least 1"));
        }

        let names = param_names(&model);
        for other in ["J", "U", "g", "delta"] {
            let (f, g) = param_source(o, other);
            if !names.contains(&other) && (f.is_some() || g.is_some()) {
                return Err(usage(format!("--{} does not apply to model {model}", flag_of(other))));
            }
        }
        let mut params = Vec::new();
        let mut u_scan = None;
        for &name in names {
            let (f, g) = param_source(o, name);
            let grid = either(f, g, flag_of(name))?;
            if command == "region" && name == "U" {
                let g = grid.ok_or_else(|| usage("region needs --u-grid"))?;
                if g.len() < 3 || g.values()[0] <= 0.0 || g.values().windows(2).any(|w| w[1] <= w[0]) {
                    return Err(usage("--u-grid for region must be positive, ascending, with at least three points"));
                }
                u_scan = Some(g);
                continue;
            }
            let grid = grid.ok_or_else(|| usage(format!("missing --{0} or --{0}-grid", flag_of(name))))?;
            params.push((name, grid));
        }

        let finite = either(o.omega, o.omega_grid.as_ref(), "omega")?;
        if o.weakdrive && finite.is_some() {
            return Err(usage("--weakdrive and --omega are mutually exclusive"));
        }
        let drive = match (command, finite) {
            ("ness" | "spectrum", None) => return Err(usage(format!("{command} needs a finite --omega"))),
            ("weakdrive" | "region" | "analytic", Some(_)) => {
                return Err(usage(format!("{command} works in the weak-drive limit; drop --omega")))
            }
            ("sweep", None) if !o.weakdrive => return Err(usage("sweep needs --omega or --weakdrive")),
            (_, Some(g)) => {
                if g.values().iter().any(|&w| !(w > 0.0)) {
                    return Err(usage("--omega must be positive"));
                }
                Drive::Finite(g)
            }
            (_, None) => Drive::WeakLimit,
        };

        let detuning = match &o.detuning {
            Some(s) => parse_detuning(s)?,
            None => Detuning::UnitFillingResonant,
        };
        if o.momentum && drive != Drive::WeakLimit {
            return Err(usage("--momentum applies to the weak-drive limit only"));
        }
        let default_backend = match (&drive, o.momentum) {
            (Drive::Finite(_), _) => "master-equation",
            (Drive::WeakLimit, false) => "weak-drive",
            (Drive::WeakLimit, true) => "weak-drive-momentum",
        };
        let backend = match command {
            "ness" | "sweep" | "weakdrive" | "region" => {
                let name = o.backend.clone().unwrap_or_else(|| default_backend.into());
                g2_backends().get(&name).map_err(|e| usage(format!("--backend: {e}")))?;
                if (name == "master-equation") != matches!(drive, Drive::Finite(_)) {
                    return Err(usage(format!("--backend {name} does not match the drive setting")));
                }
                if command == "ness" && name != "master-equation" {
                    return Err(usage("ness uses the master-equation backend"));
                }
                Some(name)
            }
            _ => {
                if o.backend.is_some() {
                    return Err(usage(format!("{command} does not take --backend")));
                }
                None
            }
        };

        match command {
            "analytic" => {
                if model != "bh" || sites.values() != [2.0] || !matches!(detuning, Detuning::UnitFillingResonant | Detuning::TwoPhotonResonant) {
                    return Err(usage("analytic covers the resonantly driven bh dimer only"));
                }
            }
            "region" if model != "bh" => return Err(usage("region scans U and needs model bh")),
            "spectrum" if sites.len() != 1 => return Err(usage("spectrum takes a single --M")),
            "ness" => {
                if sites.len() != 1 || params.iter().any(|(_, g)| g.len() != 1) {
                    return Err(usage("ness takes single values; use sweep for grids"));
                }
                if matches!(&drive, Drive::Finite(g) if g.len() != 1) {
                    return Err(usage("ness takes a single --omega"));
                }
            }
            _ => {}
        }

        let spectrum = SpectrumSettings {
            t_max: o.t_max.unwrap_or(20.0),
            samples: o.samples.unwrap_or(4096),
            subtract: !o.no_subtract,
        };
        if command != "spectrum" && (o.t_max.is_some() || o.samples.is_some() || o.no_subtract) {
            return Err(usage("--t-max, --samples and --no-subtract apply to spectrum only"));
        }
        if !(spectrum.t_max > 0.0) || spectrum.samples < 4 || !spectrum.samples.is_multiple_of(2) {
            return Err(usage("spectrum needs --t-max > 0 and an even --samples >= 4"));
        }

        let format = match (o.format, &o.output) {
            (Some(f), _) => f,
            (None, Some(p)) if p.extension().is_some_and(|e| e == "json") => Format::Json,
            _ => Format::Csv,
        };
        if o.resume && (o.output.is_none() || format != Format::Csv) {
            return Err(usage("--resume needs a CSV --output file"));
        }
        if o.threads == Some(0) {
            return Err(usage("--threads must be positive"));
        }

        Ok(Self {
            command,
            preset: o.preset.clone(),
            model,
            sites,
            n_max: o.nmax,
            params,
            u_scan,
            drive,
            detuning,
            backend,
            spectrum,
            output: o.output.clone(),
            format,
            resume: o.resume,
            threads: o.threads,
        })
    }

    pub fn n_max_for(&self, sites: usize) -> usize {
        self.n_max.unwrap_or(match (self.model.as_str(), sites) {
            ("jch", _) => 2,
            (_, 2) => 4,
            _ => 3,
        })
    }

    pub fn points(&self) -> Vec<Point> {
        let omegas: Vec<Option<f64>> = match &self.drive {
            Drive::Finite(g) => g.values().iter().map(|&w| Some(w)).collect(),
            Drive::WeakLimit => vec![None],
        };
        let mut combos: Vec<Vec<f64>> = vec![Vec::new()];
        for (_, grid) in &self.params {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    grid.values().iter().map(move |&v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        let mut out = Vec::new();
        for &m in self.sites.values() {
            for c in &combos {
                for &omega in &omegas {
                    out.push(Point {
                        index: out.len(),
                        sites: m as usize,
                        values: c.clone(),
                        omega,
                    });
                }
            }
        }
        out
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        self.params.iter().map(|(n, _)| *n).collect()
    }

    /// Model at `point`, with the U value overridden for the region scan.
    pub fn model_at(&self, point: &Point, u: Option<f64>) -> CliResult<Box<dyn ArrayModel>> {
        let mut p = ParamSet::new();
        p.insert("M".into(), point.sites as f64);
        for ((name, _), v) in self.params.iter().zip(&point.values) {
            p.insert(name.to_string(), *v);
        }
        if let Some(u) = u {
            p.insert("U".into(), u);
        }
        p.insert("omega".into(), point.omega.unwrap_or(0.0));
        let build = model_registry().get(&self.model)?.to_owned();
        Ok(build(&p, self.detuning)?)
    }

    /// Full parameter echo; independent of thread count and output path.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut m: Vec<(String, String)> = vec![
            ("tool".into(), format!("cra-cli {}", env!("CARGO_PKG_VERSION"))),
            ("command".into(), self.command.into()),
            ("preset".into(), self.preset.clone().unwrap_or_else(|| "none".into())),
            ("model".into(), self.model.clone()),
            ("M".into(), self.sites.to_string()),
            (
                "nmax".into(),
                match self.n_max {
                    Some(n) => n.to_string(),
                    None => "auto (bh: 4 for M=2, 3 otherwise; jch: 2)".into(),
                },
            ),
        ];
        for (name, grid) in &self.params {
            m.push((name.to_string(), grid.to_string()));
        }
        if let Some(u) = &self.u_scan {
            m.push(("U".into(), u.to_string()));
        }
        m.push(("gamma_p".into(), "1".into()));
        m.push((
            "dissipation".into(),
            match self.model.as_str() {
                "jch" => "photon loss only (emitters do not decay or dephase)".into(),
                _ => "photon loss".into(),
            },
        ));
        m.push((
            "drive".into(),
            match &self.drive {
                Drive::Finite(g) => format!("omega = {g}"),
                Drive::WeakLimit => format!(
                    "weak-drive limit (omega sequence {}; relative tolerance {})",
                    DEFAULT_OMEGAS.map(fmt_value).join(","),
                    fmt_value(DEFAULT_TOL)
                ),
            },
        ));
        m.push(("detuning".into(), detuning_label(self.detuning)));
        if let Some(b) = &self.backend {
            m.push(("backend".into(), b.clone()));
        }
        if matches!(self.drive, Drive::Finite(_)) {
            m.push(("steady_state_solver".into(), "auto".into()));
        }
        if self.command == "spectrum" {
            m.push(("t_max".into(), fmt_value(self.spectrum.t_max)));
            m.push(("samples".into(), self.spectrum.samples.to_string()));
            m.push(("coherent_subtraction".into(), self.spectrum.subtract.to_string()));
            m.push(("window".into(), "none".into()));
            m.push(("line_crossing_ratio".into(), fmt_value(line_crossing_ratio())));
        }
        m
    }
}
