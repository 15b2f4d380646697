//! Command-line flags, config files and presets.
//!
//! All three are the same flat set of options. A config file holds
//! `key = value` lines whose keys are flag names without the leading dashes;
//! a preset is a built-in list of such pairs. Layers are merged with presets
//! lowest, then the config file, then explicit flags.

use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::error::{usage, CliError, CliResult};
use crate::presets::preset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct Options {
    /// Built-in parameter set reproducing one figure (fig2a, fig2b, fig3, fig4, fig5a, fig5b).
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat `key = value` file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model name: bh or jch.
    #[arg(long)]
    pub model: Option<String>,
    /// Number of sites.
    #[arg(long = "M")]
    pub sites: Option<usize>,
    #[arg(long = "M-grid")]
    pub sites_grid: Option<String>,
    /// Photon cutoff per site (default 4 for dimers, 3 otherwise; 2 for jch).
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub j: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j_grid: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub u_grid: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub g_grid: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_grid: Option<String>,
    /// Finite drive amplitude Ω (units of γ_p).
    #[arg(long, conflicts_with = "weakdrive", allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, conflicts_with_all = ["weakdrive", "omega"], allow_hyphen_values = true)]
    pub omega_grid: Option<String>,
    /// Infinitesimal-drive limit instead of a finite Ω.
    #[arg(long)]
    pub weakdrive: bool,
    /// Solve the weak-drive problem in the zero-momentum sector.
    #[arg(long)]
    pub momentum: bool,
    /// two-photon, unit-filling, or an explicit Δc.
    #[arg(long, allow_hyphen_values = true)]
    pub detuning: Option<String>,
    /// g² backend by name (master-equation, weak-drive, weak-drive-momentum, closed-form).
    #[arg(long)]
    pub backend: Option<String>,
    /// Correlation window for spectra.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Keep the coherent part in the spectrum.
    #[arg(long)]
    pub no_subtract: bool,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Continue an interrupted CSV run in place.
    #[arg(long)]
    pub resume: bool,
    /// Worker threads (does not affect the output).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Clone, Debug, PartialEq)]
pub enum Command {
    /// Steady state of the master equation at one parameter point.
    Ness(Options),
    /// g² and population over a parameter grid.
    Sweep(Options),
    /// Emission spectra along one parameter axis.
    Spectrum(Options),
    /// Infinitesimal-drive g² over a parameter grid.
    Weakdrive(Options),
    /// Closed-form dimer g², onset point and validation gate.
    Analytic(Options),
    /// Extent of the bunched region in U for each hopping and size.
    Region(Options),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ness(_) => "ness",
            Command::Sweep(_) => "sweep",
            Command::Spectrum(_) => "spectrum",
            Command::Weakdrive(_) => "weakdrive",
            Command::Analytic(_) => "analytic",
            Command::Region(_) => "region",
        }
    }

    pub fn options(&self) -> &Options {
        match self {
            Command::Ness(o)
            | Command::Sweep(o)
            | Command::Spectrum(o)
            | Command::Weakdrive(o)
            | Command::Analytic(o)
            | Command::Region(o) => o,
        }
    }
}

#[derive(Parser, Clone, Debug, PartialEq)]
#[command(name = "cra", version, about = "Driven-dissipative coupled-resonator arrays: steady states, photon statistics and spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Parser for one layer of key-value pairs.
#[derive(Parser, Debug)]
#[command(name = "layer", no_binary_name = true, disable_help_flag = true, disable_version_flag = true)]
struct Layer {
    #[command(flatten)]
    options: Options,
}

fn flag_names() -> Vec<String> {
    Layer::command()
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect()
}

/// Options from `key = value` pairs; `origin` names the source in errors.
pub fn options_from_pairs(pairs: &[(String, String)], origin: &str) -> CliResult<Options> {
    let known = flag_names();
    let mut args = Vec::new();
    for (k, v) in pairs {
        if !known.contains(k) || k == "config" {
            return Err(usage(format!("{origin}: unknown key `{k}`")));
        }
        match v.as_str() {
            "true" => args.push(format!("--{k}")),
            "false" => {}
            _ => {
                args.push(format!("--{k}"));
                args.push(v.clone());
            }
        }
    }
    Layer::try_parse_from(&args)
        .map(|l| l.options)
        .map_err(|e| usage(format!("{origin}: {}", e.to_string().lines().next().unwrap_or_default())))
}

pub fn parse_config_text(text: &str, origin: &str) -> CliResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{origin}:{}: expected `key = value`", n + 1)))?;
        let k = k.trim().trim_start_matches("--").to_string();
        if pairs.iter().any(|(seen, _)| *seen == k) {
            return Err(usage(format!("{origin}:{}: duplicate key `{k}`", n + 1)));
        }
        pairs.push((k, v.trim().to_string()));
    }
    Ok(pairs)
}

pub fn read_config(path: &Path) -> CliResult<Options> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let origin = path.display().to_string();
    options_from_pairs(&parse_config_text(&text, &origin)?, &origin)
}

impl Options {
    /// `top` wins field by field. A drive choice in `top` (finite or weak)
    /// replaces the drive choice below it.
    pub fn overlay(self, top: Options) -> Options {
        let top_drive = top.weakdrive || top.omega.is_some() || top.omega_grid.is_some();
        let (omega, omega_grid, weakdrive) = if top_drive {
            (top.omega, top.omega_grid, top.weakdrive)
        } else {
            (self.omega, self.omega_grid, self.weakdrive)
        };
        Options {
            preset: top.preset.or(self.preset),
            config: top.config.or(self.config),
            model: top.model.or(self.model),
            sites: top.sites.or(self.sites),
            sites_grid: top.sites_grid.or(self.sites_grid),
            nmax: top.nmax.or(self.nmax),
            j: top.j.or(self.j),
            j_grid: top.j_grid.or(self.j_grid),
            u: top.u.or(self.u),
            u_grid: top.u_grid.or(self.u_grid),
            g: top.g.or(self.g),
            g_grid: top.g_grid.or(self.g_grid),
            delta: top.delta.or(self.delta),
            delta_grid: top.delta_grid.or(self.delta_grid),
            omega,
            omega_grid,
            weakdrive,
            momentum: top.momentum || self.momentum,
            detuning: top.detuning.or(self.detuning),
            backend: top.backend.or(self.backend),
            t_max: top.t_max.or(self.t_max),
            samples: top.samples.or(self.samples),
            no_subtract: top.no_subtract || self.no_subtract,
            output: top.output.or(self.output),
            format: top.format.or(self.format),
            resume: top.resume || self.resume,
            threads: top.threads.or(self.threads),
        }
    }
}

/// Merges preset, config file and flags for `command`.
pub fn resolve(command: &Command) -> CliResult<Options> {
    let flags = command.options().clone();
    let config = match &flags.config {
        Some(path) => read_config(path)?,
        None => Options::default(),
    };
    let upper = config.overlay(flags);
    let base = match &upper.preset {
        Some(name) => {
            let p = preset(name)?;
            if p.command != command.name() {
                return Err(usage(format!(
                    "preset `{name}` belongs to `cra {}`, not `cra {}`",
                    p.command,
                    command.name()
                )));
            }
            options_from_pairs(&p.pairs(), &format!("preset {name}"))?
        }
        None => Options::default(),
    };
    Ok(base.overlay(upper))
}
