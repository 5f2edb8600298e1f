//! Experiment configuration files (TOML, strict keys).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::jc::JCParams;
use crate::lindblad::Normalization;
use crate::linresp::LinearResponseParams;
use crate::mps::MpsRunConfig;
use crate::rates::{coupling_g, QubitLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    SpectrumMe,
    SpectrumMps,
    Jc,
    Poles,
    Dressed,
    Sweep,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::SpectrumMe => "spectrum-me",
            Model::SpectrumMps => "spectrum-mps",
            Model::Jc => "jc",
            Model::Poles => "poles",
            Model::Dressed => "dressed",
            Model::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridUnits {
    /// `lo` and `hi` in units of gamma_p.
    #[default]
    GammaP,
    /// `lo` and `hi` in units of the mirror-probe coupling g.
    G,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "grid_lo")]
    pub lo: f64,
    #[serde(default = "grid_hi")]
    pub hi: f64,
    #[serde(default = "grid_points")]
    pub points: usize,
    #[serde(default)]
    pub units: GridUnits,
}

fn grid_lo() -> f64 {
    -8.0
}
fn grid_hi() -> f64 {
    8.0
}
fn grid_points() -> usize {
    1601
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { lo: grid_lo(), hi: grid_hi(), points: grid_points(), units: GridUnits::GammaP }
    }
}

impl GridConfig {
    pub fn omegas(&self, g: f64) -> Vec<f64> {
        let s = match self.units {
            GridUnits::GammaP => 1.0,
            GridUnits::G => g,
        };
        crate::lindblad::uniform_grid(self.lo * s, self.hi * s, self.points)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) || self.points < 3 {
            return Err(CliError::Config(format!("grid: need lo < hi and points >= 3 (got {}, {}, {})", self.lo, self.hi, self.points)));
        }
        Ok(())
    }
}

/// Correlation settings of the master-equation spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeConfig {
    #[serde(default = "me_t_max")]
    pub t_max: f64,
    #[serde(default = "me_dt")]
    pub dt: f64,
}

fn me_t_max() -> f64 {
    40.0
}
fn me_dt() -> f64 {
    0.01
}

impl Default for MeConfig {
    fn default() -> Self {
        Self { t_max: me_t_max(), dt: me_dt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolesConfig {
    pub gamma_m: f64,
    #[serde(default = "one")]
    pub gamma_p: f64,
    #[serde(default = "omega0")]
    pub omega0: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "pi")]
    pub phi_mm: f64,
    /// Mirror-to-mirror delay range.
    #[serde(default = "one")]
    pub tau_max: f64,
    #[serde(default = "tau_step")]
    pub tau_step: f64,
}

fn one() -> f64 {
    1.0
}
fn omega0() -> f64 {
    1000.0
}
fn pi() -> f64 {
    PI
}
fn tau_step() -> f64 {
    0.01
}

impl PolesConfig {
    pub fn params(&self) -> LinearResponseParams {
        let mut p = LinearResponseParams::cavity(self.gamma_m);
        p.gamma_p = self.gamma_p;
        p.omega0 = self.omega0;
        p.phi = self.phi;
        p.phi_mm = self.phi_mm;
        p
    }

    pub fn taus(&self) -> Vec<f64> {
        let n = (self.tau_max / self.tau_step).round() as usize;
        (0..=n).map(|k| k as f64 * self.tau_step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "out_path")]
    pub path: String,
    #[serde(default)]
    pub normalization: Normalization,
    /// Writes the final MPS to `state.mps`.
    #[serde(default)]
    pub checkpoint: bool,
}

fn out_path() -> String {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { path: out_path(), normalization: Normalization::Max1, checkpoint: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Model evaluated at each point.
    pub model: Model,
    /// Dotted path of a numeric field, e.g. `layout.omega`.
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    /// Reserved; every computation is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<QubitLayout>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub me: MeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mps: Option<MpsRunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jc: Option<JCParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<PolesConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn layout(&self) -> Result<QubitLayout, CliError> {
        let l = self.layout.as_ref().ok_or_else(|| CliError::Config(format!("model {} needs a [layout] table", self.model.name())))?;
        l.validated().map_err(|e| CliError::Config(format!("layout: {e}")))
    }

    /// g of the layout, or of the JC block for `jc`.
    pub fn coupling(&self) -> f64 {
        match (self.model, &self.layout, &self.jc) {
            (Model::Jc, _, Some(j)) => j.g,
            (_, Some(l), _) => coupling_g(l.gamma_m, l.gamma_p),
            (_, None, Some(j)) => j.g,
            _ => self.poles.as_ref().map_or(1.0, |p| coupling_g(p.gamma_m, p.gamma_p)),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid.validate()?;
        if !(self.me.t_max > 0.0 && self.me.dt > 0.0 && self.me.dt < self.me.t_max) {
            return Err(CliError::Config("me: need 0 < dt < t_max".into()));
        }
        match self.model {
            Model::SpectrumMe | Model::Dressed => {
                self.layout()?;
            }
            Model::SpectrumMps => {
                self.layout()?;
                let m = self.mps.as_ref().ok_or_else(|| CliError::Config("model spectrum-mps needs an [mps] table".into()))?;
                m.validate().map_err(|e| CliError::Config(e.to_string()))?;
            }
            Model::Jc => {
                let j = self.jc.as_ref().ok_or_else(|| CliError::Config("model jc needs a [jc] table".into()))?;
                j.validate().map_err(|e| CliError::Config(e.to_string()))?;
            }
            Model::Poles => {
                let p = self.poles.as_ref().ok_or_else(|| CliError::Config("model poles needs a [poles] table".into()))?;
                p.params().validate().map_err(|e| CliError::Config(e.to_string()))?;
                if !(p.tau_step > 0.0 && p.tau_max >= 0.0) {
                    return Err(CliError::Config("poles: need tau_step > 0 and tau_max >= 0".into()));
                }
            }
            Model::Sweep => {
                let s = self.sweep.as_ref().ok_or_else(|| CliError::Config("model sweep needs a [sweep] table".into()))?;
                if s.model == Model::Sweep {
                    return Err(CliError::Config("sweep.model cannot be sweep".into()));
                }
                if s.values.is_empty() {
                    return Err(CliError::Config("sweep.values is empty".into()));
                }
                for v in &s.values {
                    self.point(&s.axis, *v, s.model)?;
                }
            }
        }
        Ok(())
    }

    /// The configuration of one sweep point: `axis` set to `value`, run as `model`.
    pub fn point(&self, axis: &str, value: f64, model: Model) -> Result<ExperimentConfig, CliError> {
        let mut base = self.clone();
        base.sweep = None;
        base.model = model;
        let mut doc = toml::Value::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
        let parts: Vec<&str> = axis.split('.').collect();
        let (last, tables) = parts.split_last().ok_or_else(|| CliError::Config("empty sweep axis".into()))?;
        let mut cur = &mut doc;
        for t in tables {
            let table = cur.as_table_mut().ok_or_else(|| CliError::Config(format!("sweep axis {axis}: {t} is not a table")))?;
            cur = table.entry(t.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
        }
        let table = cur.as_table_mut().ok_or_else(|| CliError::Config(format!("sweep axis {axis} does not name a field")))?;
        let new = match table.get(*last) {
            None | Some(toml::Value::Float(_)) => toml::Value::Float(value),
            Some(toml::Value::Integer(_)) => {
                if value.fract() != 0.0 {
                    return Err(CliError::Config(format!("sweep axis {axis} is an integer field; {value} is not an integer")));
                }
                toml::Value::Integer(value as i64)
            }
            Some(_) => return Err(CliError::Config(format!("sweep axis {axis} is not numeric"))),
        };
        table.insert(last.to_string(), new);
        let text = toml::to_string(&doc).map_err(|e| CliError::Config(e.to_string()))?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("sweep axis {axis}: {e}")))?;
        if cfg.model != Model::Sweep {
            cfg.validate()?;
        }
        Ok(cfg)
    }
}
