//! Built-in parameter sets for regenerating the data behind each figure.
//! Axis ranges that can only be read approximately off the figures are
//! choices, recorded here.

use cra_core::Registry;

use crate::error::{usage, CliResult};

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub command: &'static str,
    pub settings: &'static [(&'static str, &'static str)],
}

impl Preset {
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut p: Vec<(String, String)> = self
            .settings
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        p.push(("preset".into(), self.name.into()));
        p
    }
}

const LOG_AXIS: &str = "0.031622776601683794:31.622776601683793:40log";

const PRESETS: &[Preset] = &[
    // g² map of the dimer in the weak-drive limit over J, U ∈ [10^-1.5, 10^1.5].
    Preset {
        name: "fig2a",
        command: "sweep",
        settings: &[
            ("model", "bh"),
            ("M", "2"),
            ("nmax", "4"),
            ("j-grid", LOG_AXIS),
            ("u-grid", LOG_AXIS),
            ("weakdrive", "true"),
        ],
    },
    // Cuts in U below and above the onset coupling for decreasing drives.
    Preset {
        name: "fig2b",
        command: "sweep",
        settings: &[
            ("model", "bh"),
            ("M", "2"),
            ("nmax", "5"),
            ("j-grid", "0.5,3"),
            ("u-grid", "0.01:100:41log"),
            ("omega-grid", "1,0.3,0.1"),
        ],
    },
    // Spectra versus U at J = 10, Ω = 0.3.
    Preset {
        name: "fig3",
        command: "spectrum",
        settings: &[
            ("model", "bh"),
            ("M", "2"),
            ("nmax", "4"),
            ("j", "10"),
            ("u-grid", "0:25:51"),
            ("omega", "0.3"),
            ("t-max", "20"),
            ("samples", "4096"),
        ],
    },
    // Bunched region per size; M = 2..5 keeps the preset within budget.
    Preset {
        name: "fig4",
        command: "region",
        settings: &[
            ("model", "bh"),
            ("M-grid", "2:5:4"),
            ("j-grid", "1:100:7log"),
            ("u-grid", "0.1:100000:61log"),
            ("momentum", "true"),
            ("weakdrive", "true"),
        ],
    },
    // JCH dimer g² over hopping and emitter detuning, g = 10.
    Preset {
        name: "fig5a",
        command: "sweep",
        settings: &[
            ("model", "jch"),
            ("M", "2"),
            ("nmax", "2"),
            ("g", "10"),
            ("j-grid", "0.1:100:30log"),
            ("delta-grid", "-20:5:26"),
            ("weakdrive", "true"),
        ],
    },
    // JCH spectra along J at the detuning of strongest bunching.
    Preset {
        name: "fig5b",
        command: "spectrum",
        settings: &[
            ("model", "jch"),
            ("M", "2"),
            ("nmax", "2"),
            ("g", "10"),
            ("delta", "5"),
            ("j-grid", "1.8:16:32log"),
            ("omega", "0.1"),
        ],
    },
];

pub fn presets() -> Registry<&'static Preset> {
    let mut r = Registry::new("preset");
    for p in PRESETS {
        r.register(p.name, p);
    }
    r
}

pub fn preset(name: &str) -> CliResult<&'static Preset> {
    presets().get(name).copied().map_err(|e| usage(e.to_string()))
}
