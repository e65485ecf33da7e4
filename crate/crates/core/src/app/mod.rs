//! Case configuration, presets and the run driver.

mod presets;
mod run;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BoundarySpec, DampingSpec, Model};
use crate::fluxes::ViscosityMask;
use crate::geometry::{GeometryOptions, Surface};
use crate::grid::{Axis, GridSpec};
use crate::physics::{FluidConstants, ThetaProfile};
use crate::timeint::{Scheme, StepConfig};

pub use presets::{preset, PRESET_NAMES};
pub use run::{geometry_dump, run_case, RunOutput, RunSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: [usize; 3],
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialCondition {
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunControl {
    pub end_time: Option<f64>,
    pub max_steps: Option<usize>,
    /// Field dump cadence in steps; the final state is always written.
    pub output_every: Option<usize>,
    /// Probe samples before this time are ignored by the spectrum.
    pub spin_up: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVariable {
    U,
    V,
    W,
    Rho,
    Theta,
    PPert,
}

impl ProbeVariable {
    pub fn name(self) -> &'static str {
        match self {
            ProbeVariable::U => "u",
            ProbeVariable::V => "v",
            ProbeVariable::W => "w",
            ProbeVariable::Rho => "rho",
            ProbeVariable::Theta => "theta",
            ProbeVariable::PPert => "p_pert",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub location: [f64; 3],
    pub variable: ProbeVariable,
}

/// Comparison of the final state against a known solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExactComparison {
    /// Streamwise velocity along the vertical line at `(x, y)`.
    HemisphereLine { x: f64, y: f64, z_min: f64, z_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub model: Model,
    pub grid: GridConfig,
    pub surface: Surface,
    #[serde(default)]
    pub geometry: GeometryOptions,
    pub boundaries: BoundarySpec,
    #[serde(default)]
    pub constants: FluidConstants,
    pub background: ThetaProfile,
    #[serde(default)]
    pub damping: DampingSpec,
    pub step: StepConfig,
    #[serde(default)]
    pub forcing: [f64; 3],
    #[serde(default)]
    pub viscosity_mask: ViscosityMask,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub run: RunControl,
    #[serde(default)]
    pub probes: Vec<ProbeSpec>,
    #[serde(default)]
    pub exact: Option<ExactComparison>,
    #[serde(default = "enabled")]
    pub wsrd: bool,
}

fn default_name() -> String {
    "case".into()
}

fn enabled() -> bool {
    true
}

impl SolverConfig {
    pub fn grid_spec(&self) -> Result<GridSpec> {
        let periodic = Axis::ALL.map(|a| self.boundaries.is_periodic(a));
        GridSpec::from_box(self.grid.n, self.grid.lo, self.grid.hi, periodic)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        self.geometry.validate()?;
        self.surface.validate()?;
        self.boundaries.validate(&grid)?;
        self.constants.validate()?;
        self.damping.validate(&grid)?;
        self.step.validate()?;
        if self.step.scheme != Scheme::for_model(self.model) {
            return Err(Error::Config(format!("scheme {:?} does not match model {:?}", self.step.scheme, self.model)));
        }
        if self.run.end_time.is_none() && self.run.max_steps.is_none() {
            return Err(Error::Config("run needs end_time or max_steps".into()));
        }
        if let Some(t) = self.run.end_time {
            if !(t > 0.0) {
                return Err(Error::Config(format!("run.end_time must be positive, got {t}")));
            }
        }
        if self.run.output_every == Some(0) {
            return Err(Error::Config("run.output_every must be at least 1".into()));
        }
        if !self.forcing.iter().all(|f| f.is_finite()) || !self.initial.velocity.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("forcing and initial velocity must be finite".into()));
        }
        for p in &self.probes {
            for d in 0..3 {
                if !(p.location[d] >= self.grid.lo[d] && p.location[d] <= self.grid.hi[d]) {
                    return Err(Error::Config(format!("probe at {:?} lies outside the domain", p.location)));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SolverConfig = toml::from_str(text).map_err(|e| Error::Config(describe(text, &e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Apply `key.path=value` overrides; the value is read as TOML and
    /// falls back to a plain string.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            let value = parse_value(raw.trim());
            set_path(&mut doc, key.trim(), value)?;
        }
        let cfg: SolverConfig = doc.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Prefix a deserialization error with its line number and the key on that line.
fn describe(text: &str, e: &toml::de::Error) -> String {
    let Some(span) = e.span() else { return e.message().to_string() };
    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
    let key = text.lines().nth(line - 1).and_then(|l| l.split_once('=')).map(|(k, _)| k.trim());
    match key {
        Some(k) => format!("line {line}, key `{k}`: {}", e.message()),
        None => format!("line {line}: {}", e.message()),
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(doc: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            toml::Value::Table(t) => {
                if last {
                    t.insert(part.to_string(), value);
                    return Ok(());
                }
                t.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()))
            }
            toml::Value::Array(a) => {
                let idx: usize = part.parse().map_err(|_| Error::Config(format!("`{part}` in `{key}` is not an index")))?;
                let len = a.len();
                let slot = a.get_mut(idx).ok_or_else(|| Error::Config(format!("index {idx} out of range ({len}) in `{key}`")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::Config(format!("`{key}` does not name a table entry"))),
        };
    }
    Err(Error::Config(format!("empty override key `{key}`")))
}

pub fn parse_config(path: &Path) -> Result<SolverConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    SolverConfig::from_toml(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests;
