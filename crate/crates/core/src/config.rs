//! Run configuration (TOML) and the named scheme presets.
//!
//! A config may name a `preset`; its scheme table is used as the base and
//! every key given explicitly under `[scheme]` overrides it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::{ChannelParams, DhitParams};
use crate::physics::{CentralPart, GasModel, InterfaceFlux};
use crate::sgs::{SgsConfig, SgsModelKind};
use crate::spatial::{SchemeConfig, ViscousScheme, VolumeMode};

pub const PRESETS: [&str; 7] = [
    "ilet-roe-overint",
    "split-pi-central",
    "split-pi-l2roe-smag",
    "split-pi-central-smag",
    "split-pi-br2-smag",
    "split-pi-cusp",
    "channel-dynsmag",
];

/// Scheme of a named preset.
pub fn preset(name: &str) -> Result<SchemeConfig> {
    let base = SchemeConfig::default();
    let smag = SgsConfig {
        model: SgsModelKind::Smagorinsky,
        c_s: Some(0.12),
        ..Default::default()
    };
    let s = match name {
        "ilet-roe-overint" => SchemeConfig {
            volume: VolumeMode::OverIntegration,
            interface_flux: InterfaceFlux::Roe,
            central_part: CentralPart::Mean,
            ..base
        },
        "split-pi-central" => base,
        "split-pi-l2roe-smag" => SchemeConfig {
            interface_flux: InterfaceFlux::L2roe,
            sgs: smag,
            ..base
        },
        "split-pi-central-smag" => SchemeConfig { sgs: smag, ..base },
        "split-pi-br2-smag" => SchemeConfig {
            viscous: ViscousScheme::Br2,
            eta_br: 2.0,
            sgs: smag,
            ..base
        },
        "split-pi-cusp" => SchemeConfig {
            sgs: SgsConfig {
                model: SgsModelKind::PlateauCusp,
                ..Default::default()
            },
            ..base
        },
        "channel-dynsmag" => SchemeConfig {
            viscous: ViscousScheme::Br2,
            eta_br: 1.0,
            eta_wall: Some(40.0),
            sgs: SgsConfig {
                model: SgsModelKind::DynamicSmagorinsky,
                ..Default::default()
            },
            ..base
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; available: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CaseConfig {
    TaylorGreen {
        mach: f64,
        #[serde(default = "one")]
        v0: f64,
    },
    DhitSynthetic(DhitParams),
    DhitImport {
        path: PathBuf,
    },
    Channel(ChannelParams),
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub cells: [usize; 3],
    /// Box lengths for periodic cases; defaults to `2 pi` each.
    #[serde(default)]
    pub lengths: Option<[f64; 3]>,
    /// Largest-to-smallest cell ratio across the channel.
    #[serde(default = "default_stretch")]
    pub stretch_ratio: f64,
}

fn default_stretch() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub end_time: f64,
    pub max_steps: Option<usize>,
    /// Fixed step; overrides the CFL estimate.
    pub dt: Option<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            end_time: 1.0,
            max_steps: None,
            dt: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Steps between time-series samples (0 disables).
    pub diagnostics_every: usize,
    /// Steps between spectrum files (periodic boxes only).
    pub spectrum_every: Option<usize>,
    /// Steps between checkpoints.
    pub checkpoint_every: Option<usize>,
    /// Highest shell of the spectral dissipation rate in the time series.
    pub spectral_k_max: Option<usize>,
    /// Channel: time before statistics sampling starts.
    pub channel_spinup: f64,
    /// Channel: steps between statistics samples.
    pub channel_sample_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("output"),
            diagnostics_every: 10,
            spectrum_every: None,
            checkpoint_every: None,
            spectral_k_max: None,
            channel_spinup: 0.0,
            channel_sample_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub preset: Option<String>,
    pub degree: usize,
    pub mesh: MeshConfig,
    pub case: CaseConfig,
    #[serde(default)]
    pub gas: GasModel,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Checkpoint to continue from instead of the initial condition.
    #[serde(default)]
    pub restart: Option<PathBuf>,
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

impl RunConfig {
    /// Parses a config document; errors carry line and column context.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(name) = doc.get("preset") {
            let name = name
                .as_str()
                .ok_or_else(|| Error::Config("preset must be a string".into()))?;
            let mut base = toml::Value::try_from(preset(name)?).map_err(|e| Error::Config(e.to_string()))?;
            if let Some(user) = doc.remove("scheme") {
                if !user.is_table() {
                    return Err(Error::Config("scheme must be a table".into()));
                }
                merge(&mut base, user);
            }
            doc.insert("scheme".into(), base);
        }
        let merged = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
        let cfg: RunConfig = toml::from_str(&merged).map_err(|e| {
            // re-parse the original for line context when the merged
            // document differs only by the preset expansion
            match toml::from_str::<RunConfig>(text) {
                Err(orig) => Error::Config(orig.to_string()),
                Ok(_) => Error::Config(e.to_string()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 || self.degree > 31 {
            return Err(Error::Config(format!("degree must be in 1..=31, got {}", self.degree)));
        }
        if self.mesh.cells.iter().any(|&c| c == 0) {
            return Err(Error::Config("mesh cells must be positive".into()));
        }
        if !(self.time.end_time >= 0.0) {
            return Err(Error::Config("end_time must be non-negative".into()));
        }
        if let Some(dt) = self.time.dt {
            if !(dt > 0.0) {
                return Err(Error::Config("fixed dt must be positive".into()));
            }
        }
        self.gas.validate().map_err(Error::Config)?;
        self.scheme.validate(self.degree)?;
        if let CaseConfig::TaylorGreen { mach, .. } = self.case {
            if mach < 0.0 {
                return Err(Error::Config("Mach number must be non-negative".into()));
            }
        }
        Ok(())
    }
}
