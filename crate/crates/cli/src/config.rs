//! TOML run configuration.
//!
//! All quantities are in natural units, `ħ = m = k_B = 1`. A minimal file:
//!
//! ```toml
//! [system]
//! omega = 1.0
//! temperature = 1.0
//!
//! [unit]
//! oscillators = 4
//! omega = 1.0
//! lambda_i = 0.67
//! temperature = 1.0
//!
//! [coupling]
//! kind = "beamsplitter"      # or "spring"
//! semantics = "rescaled"     # or "raw"
//! mode = "highest"           # "com", "highest" or a 1-based label
//! strength = 0.5             # or weights = [...] per oscillator
//!
//! [propagation]
//! mode = "exact"             # exact | superoperator | recursion | ode
//! dt = 0.01
//! steps = 1000
//! ```
//!
//! Optional: `record_every`, `preset`, a `[drain]` table
//! (`omega`, `temperature`, `gamma`) and an `[outputs]` table
//! (`trajectory`, `ledger`, `summary`, `sweep`). Relative output paths are
//! taken from the directory holding the config file.

use std::path::{Path, PathBuf};

use cvcm_core::{
    CollisionScenario, CouplingKind, CouplingSpec, CouplingWeights, DrainSpec, ModeSelector, PropagationMode,
    RingUnitSpec, StrengthSemantics, SystemSpec,
};
use serde::Deserialize;

use crate::presets::Preset;
use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub record_every: Option<usize>,
    pub system: Option<SystemConfig>,
    pub unit: Option<UnitConfig>,
    pub coupling: Option<CouplingConfig>,
    pub drain: Option<DrainConfig>,
    pub propagation: Option<PropagationConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub omega: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitConfig {
    pub oscillators: usize,
    pub omega: f64,
    pub lambda_i: f64,
    pub temperature: f64,
    #[serde(default)]
    pub force_ring: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindName {
    Beamsplitter,
    Spring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticsName {
    Raw,
    #[default]
    Rescaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedMode {
    Com,
    Highest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum ModeField {
    Label(usize),
    Named(NamedMode),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub kind: KindName,
    #[serde(default)]
    pub semantics: SemanticsName,
    pub mode: Option<ModeField>,
    pub strength: Option<f64>,
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrainConfig {
    pub omega: f64,
    pub temperature: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Exact,
    Superoperator,
    Recursion,
    Ode,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    pub mode: ModeName,
    pub dt: f64,
    pub steps: usize,
    pub ode_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub trajectory: PathBuf,
    pub ledger: PathBuf,
    pub summary: PathBuf,
    pub sweep: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trajectory: "trajectory.csv".into(),
            ledger: "ledger.csv".into(),
            summary: "summary.txt".into(),
            sweep: "sweep.csv".into(),
        }
    }
}

impl OutputConfig {
    /// Default file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        let d = Self::default();
        Self {
            trajectory: dir.join(d.trajectory),
            ledger: dir.join(d.ledger),
            summary: dir.join(d.summary),
            sweep: dir.join(d.sweep),
        }
    }

    fn rebase(&mut self, base: &Path) {
        for p in [&mut self.trajectory, &mut self.ledger, &mut self.summary, &mut self.sweep] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.outputs.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// The scenario to run: the preset's when one is named, else the one
    /// spelled out in the file.
    pub fn scenario(&self) -> Result<CollisionScenario, CliError> {
        if let Some(p) = self.preset {
            return Ok(p.scenario());
        }
        let missing = |table: &str| CliError::Config {
            origin: "config".into(),
            message: format!("missing [{table}] table (required without a preset)"),
        };
        let s = self.system.ok_or_else(|| missing("system"))?;
        let u = self.unit.ok_or_else(|| missing("unit"))?;
        let c = self.coupling.as_ref().ok_or_else(|| missing("coupling"))?;
        let p = self.propagation.ok_or_else(|| missing("propagation"))?;
        Ok(CollisionScenario {
            system: SystemSpec {
                omega: s.omega,
                temperature: s.temperature,
            },
            unit: RingUnitSpec {
                oscillators: u.oscillators,
                omega: u.omega,
                lambda_i: u.lambda_i,
                temperature: u.temperature,
                force_ring: u.force_ring,
            },
            coupling: c.to_spec()?,
            dt: p.dt,
            n_steps: p.steps,
            drain: self.drain.map(|d| DrainSpec {
                omega: d.omega,
                temperature: d.temperature,
                gamma: d.gamma,
            }),
            mode: match p.mode {
                ModeName::Exact => PropagationMode::ExactStep,
                ModeName::Superoperator => PropagationMode::SuperoperatorStep,
                ModeName::Recursion => PropagationMode::DiscreteRecursion,
                ModeName::Ode => PropagationMode::ContinuousOde,
            },
            ode_step: p.ode_step,
        })
    }
}

impl CouplingConfig {
    fn to_spec(&self) -> Result<CouplingSpec, CliError> {
        let kind = match self.kind {
            KindName::Beamsplitter => CouplingKind::Beamsplitter,
            KindName::Spring => CouplingKind::Spring,
        };
        let semantics = match self.semantics {
            SemanticsName::Raw => StrengthSemantics::Raw,
            SemanticsName::Rescaled => StrengthSemantics::Rescaled,
        };
        let bad = |message: &str| CliError::Config {
            origin: "[coupling]".into(),
            message: message.into(),
        };
        let weights = match (&self.weights, self.mode, self.strength) {
            (Some(w), None, None) => CouplingWeights::PerOscillator(w.clone()),
            (None, Some(m), Some(strength)) => CouplingWeights::SingleMode {
                mode: match m {
                    ModeField::Label(k) => ModeSelector::Index(k),
                    ModeField::Named(NamedMode::Com) => ModeSelector::CenterOfMass,
                    ModeField::Named(NamedMode::Highest) => ModeSelector::Highest,
                },
                strength,
            },
            (Some(_), _, _) => return Err(bad("`weights` cannot be combined with `mode` or `strength`")),
            (None, _, _) => return Err(bad("give either `weights` or both `mode` and `strength`")),
        };
        Ok(CouplingSpec {
            kind,
            weights,
            semantics,
        })
    }
}
