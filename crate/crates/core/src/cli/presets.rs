//! Configs for the figure-class results.

use super::{CliError, ExperimentConfig};

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2",
        description: "polariton poles vs mirror-mirror delay, tau in [0, 1], gamma_m = 10",
        toml: r#"
model = "poles"
[poles]
gamma_m = 10.0
tau_max = 1.0
tau_step = 0.01
[output]
path = "out/fig2"
"#,
    },
    Preset {
        name: "fig3a",
        description: "master-equation spectra, gamma_m = 10, Omega = 0.1..1.0, resonant",
        toml: r#"
model = "sweep"
[layout]
gamma_m = 10.0
[grid]
lo = -3.0
hi = 3.0
points = 1201
units = "g"
[sweep]
model = "spectrum-me"
axis = "layout.omega"
values = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
[output]
path = "out/fig3a"
"#,
    },
    Preset {
        name: "fig3b",
        description: "master-equation spectra, gamma_m = 10, Omega = 0.1..1.0, detuning g/2",
        toml: r#"
model = "sweep"
[layout]
gamma_m = 10.0
delta = 1.118033988749895
[grid]
lo = -3.0
hi = 3.0
points = 1201
units = "g"
[sweep]
model = "spectrum-me"
axis = "layout.omega"
values = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
[output]
path = "out/fig3b"
"#,
    },
    Preset {
        name: "gamma-ratio",
        description: "master-equation spectra at Omega = 0.5 for gamma_m = 1, 2, 5, 10",
        toml: r#"
model = "sweep"
[layout]
gamma_m = 10.0
omega = 0.5
[grid]
lo = -8.0
hi = 8.0
points = 1601
[sweep]
model = "spectrum-me"
axis = "layout.gamma_m"
values = [1.0, 2.0, 5.0, 10.0]
[output]
path = "out/gamma-ratio"
"#,
    },
    Preset {
        name: "fig4a",
        description: "undriven dressed ladder and transition lines, gamma_m = 10",
        toml: r#"
model = "dressed"
[layout]
gamma_m = 10.0
[output]
path = "out/fig4a"
"#,
    },
    Preset {
        name: "fig4c",
        description: "driven dressed levels and lines, Omega = 0.5, detuning g/2",
        toml: r#"
model = "dressed"
[layout]
gamma_m = 10.0
omega = 0.5
delta = 1.118033988749895
[output]
path = "out/fig4c"
"#,
    },
    Preset {
        name: "fig5",
        description: "dressed-state populations, Omega = 0.5 gamma_p, resonant",
        toml: r#"
model = "dressed"
[layout]
gamma_m = 10.0
omega = 0.5
[output]
path = "out/fig5"
"#,
    },
    Preset {
        name: "fig5-g",
        description: "dressed-state populations, Omega = 0.5 g, resonant",
        toml: r#"
model = "dressed"
[layout]
gamma_m = 10.0
omega = 1.118033988749895
[output]
path = "out/fig5-g"
"#,
    },
    Preset {
        name: "fig7a",
        description: "Jaynes-Cummings cavity spectra, kappa = gamma_p, drive sweep",
        toml: r#"
model = "sweep"
[jc]
g = 2.23606797749979
kappa = 1.0
[grid]
lo = -3.0
hi = 3.0
points = 1201
units = "g"
[sweep]
model = "jc"
axis = "jc.omega"
values = [0.5, 1.0, 1.5]
[output]
path = "out/fig7a"
"#,
    },
    Preset {
        name: "fig7b",
        description: "Jaynes-Cummings cavity spectra, kappa = 0.1 gamma_p, drive sweep",
        toml: r#"
model = "sweep"
[jc]
g = 2.23606797749979
kappa = 0.1
[grid]
lo = -3.0
hi = 3.0
points = 2401
units = "g"
[sweep]
model = "jc"
axis = "jc.omega"
values = [0.5, 1.0, 1.5]
[output]
path = "out/fig7b"
"#,
    },
    Preset {
        name: "fig8",
        description: "MPS output spectra at mirror-mirror delay 0.2, 0.3, 0.5 (slow)",
        toml: r#"
model = "sweep"
[layout]
gamma_m = 10.0
omega = 0.5
[mps]
tau_m = 0.1
dt = 0.025
chi_max = 64
[grid]
lo = -3.0
hi = 3.0
points = 1201
units = "g"
[sweep]
model = "spectrum-mps"
axis = "mps.tau_m"
values = [0.1, 0.15, 0.25]
[output]
path = "out/fig8"
"#,
    },
    Preset {
        name: "fig9",
        description: "in-loop photon probabilities at mirror-mirror delay 0.1, 0.2, 0.3, 0.5 (slow)",
        toml: r#"
model = "sweep"
[layout]
gamma_m = 10.0
omega = 0.5
[mps]
tau_m = 0.05
dt = 0.025
chi_max = 64
n_steps = 800
t_cor = 0.025
[sweep]
model = "spectrum-mps"
axis = "mps.tau_m"
values = [0.05, 0.1, 0.15, 0.25]
[output]
path = "out/fig9"
"#,
    },
];

pub fn get(name: &str) -> Result<ExperimentConfig, CliError> {
    let p = PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        CliError::Config(format!("unknown preset {name}; available: {}", names.join(", ")))
    })?;
    ExperimentConfig::parse(p.toml)
}
