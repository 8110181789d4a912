//! Run configuration: TOML file, documented defaults, strict key checking.

use std::path::{Path, PathBuf};

use mmv2x_core::beamtraining::{BeamGeometry, BftTiming};
use mmv2x_core::channel::{AntennaHeights, Band, Diversity, OutageSpec, RadioConfig};
use mmv2x_core::feasibility::SolverSettings;
use mmv2x_core::kinematics::KinematicsParams;
use mmv2x_core::perception::{LidarConfig, OvertakeScenario, PerceptionSetup, TargetSurface};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sweep::{BeamSweep, OutageSweep, RequiredRateSweep};

pub const DEFAULT_SEED: u64 = 2020;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Wraps a core validation error, qualifying the field with its section.
    fn from_core(section: &str, err: mmv2x_core::Error) -> Self {
        match err {
            mmv2x_core::Error::Domain { field, reason } => ConfigError::invalid(
                if field.contains('.') {
                    field.to_owned()
                } else {
                    format!("{section}.{field}")
                },
                reason,
            ),
            other => ConfigError::invalid(section, other.to_string()),
        }
    }
}

/// Radio parameters shared by every selected band. Per-band columns come
/// from the preset unless overridden here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioSection {
    /// Restrict runs to one band; all three otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Band>,
    pub tx_power: f64,
    pub n_subcarriers: usize,
    pub fluctuation_sigma: f64,
    pub noise_figure: f64,
    pub ambient_temp: f64,
    pub ground_rel_permittivity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub carrier_freq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_antenna_spacing: Option<f64>,
}

impl Default for RadioSection {
    fn default() -> Self {
        let base = RadioConfig::preset(Band::Ghz60);
        Self {
            preset: None,
            tx_power: base.tx_power,
            n_subcarriers: base.n_subcarriers,
            fluctuation_sigma: base.fluctuation_sigma,
            noise_figure: base.noise_figure,
            ambient_temp: base.ambient_temp,
            ground_rel_permittivity: base.ground_rel_permittivity,
            carrier_freq: None,
            tx_gain: None,
            rx_gain: None,
            bandwidth: None,
            rx_antenna_spacing: None,
        }
    }
}

impl RadioSection {
    pub fn bands(&self) -> Vec<Band> {
        match self.preset {
            Some(b) => vec![b],
            None => Band::ALL.to_vec(),
        }
    }

    pub fn resolve(&self, band: Band) -> RadioConfig {
        let p = RadioConfig::preset(band);
        RadioConfig {
            carrier_freq: self.carrier_freq.unwrap_or(p.carrier_freq),
            tx_power: self.tx_power,
            tx_gain: self.tx_gain.unwrap_or(p.tx_gain),
            rx_gain: self.rx_gain.unwrap_or(p.rx_gain),
            bandwidth: self.bandwidth.unwrap_or(p.bandwidth),
            n_subcarriers: self.n_subcarriers,
            rx_antenna_spacing: self.rx_antenna_spacing.unwrap_or(p.rx_antenna_spacing),
            fluctuation_sigma: self.fluctuation_sigma,
            noise_figure: self.noise_figure,
            ambient_temp: self.ambient_temp,
            ground_rel_permittivity: self.ground_rel_permittivity,
        }
    }

    /// `(label, radio)` for every selected band.
    pub fn resolved_bands(&self) -> Vec<(String, RadioConfig)> {
        self.bands()
            .into_iter()
            .map(|b| (b.name().to_owned(), self.resolve(b)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutageSection {
    pub outage_prob: f64,
    pub n_samples: u64,
    /// Accept sample counts below the estimability guard.
    pub force: bool,
}

impl Default for OutageSection {
    fn default() -> Self {
        let d = OutageSpec::default();
        Self {
            outage_prob: d.outage_prob,
            n_samples: d.n_samples,
            force: d.force,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeasibilitySection {
    pub v_cap: f64,
    pub tolerance: f64,
    pub curve_step: f64,
    pub diversity: bool,
}

impl Default for FeasibilitySection {
    fn default() -> Self {
        let d = SolverSettings::default();
        Self {
            v_cap: d.v_cap,
            tolerance: d.tolerance,
            curve_step: d.curve_step,
            diversity: d.diversity.enabled(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub required_rate: RequiredRateSweep,
    pub outage_rate: OutageSweep,
    pub beam_analysis: BeamSweep,
}

/// Everything a run needs, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub kinematics: KinematicsParams,
    pub scenario: OvertakeScenario,
    pub lidar: LidarConfig,
    pub surface: TargetSurface,
    pub radio: RadioSection,
    pub antennas: AntennaHeights,
    pub outage: OutageSection,
    pub feasibility: FeasibilitySection,
    pub beam: BeamGeometry,
    pub bft: BftTiming,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            output_dir: None,
            kinematics: Default::default(),
            scenario: Default::default(),
            lidar: Default::default(),
            surface: Default::default(),
            radio: Default::default(),
            antennas: Default::default(),
            outage: Default::default(),
            feasibility: Default::default(),
            beam: Default::default(),
            bft: Default::default(),
            sweep: Default::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML text. Unknown keys are rejected by their dotted path.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut unknown = Vec::new();
        let de = toml::Deserializer::new(text);
        let mut cfg: RunConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
            .map_err(|e| ConfigError::Parse {
                path: origin.to_owned(),
                message: e.to_string().trim_end().to_owned(),
            })?;
        if let Some(key) = unknown.into_iter().next() {
            return Err(ConfigError::UnknownKey(key));
        }
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fills sweep grids that depend on other settings.
    pub fn resolve(&mut self) {
        self.sweep.required_rate.resolve(self.scenario.d_be);
        self.sweep.outage_rate.resolve();
        self.sweep.beam_analysis.resolve();
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let core = |section: &'static str| move |e| ConfigError::from_core(section, e);
        self.kinematics.validate().map_err(core("kinematics"))?;
        self.scenario.validate().map_err(core("scenario"))?;
        self.lidar.validate().map_err(core("lidar"))?;
        self.surface.validate().map_err(core("surface"))?;
        for band in self.radio.bands() {
            self.radio.resolve(band).validate().map_err(core("radio"))?;
        }
        if !(self.antennas.tx_height > 0.0) {
            return Err(ConfigError::invalid("antennas.tx_height", "must be > 0"));
        }
        if !(self.antennas.rx_height_low > 0.0) {
            return Err(ConfigError::invalid("antennas.rx_height_low", "must be > 0"));
        }
        self.outage_spec().validate().map_err(core("outage"))?;
        self.solver_settings().validate().map_err(core("feasibility"))?;
        self.beam.validate().map_err(core("beam"))?;
        self.bft.validate().map_err(core("bft"))?;
        self.sweep.required_rate.validate()?;
        self.sweep.outage_rate.validate()?;
        self.sweep.beam_analysis.validate()?;
        Ok(())
    }

    pub fn perception(&self) -> PerceptionSetup {
        PerceptionSetup {
            kinematics: self.kinematics,
            scenario: self.scenario,
            lidar: self.lidar,
            surface: self.surface,
        }
    }

    pub fn outage_spec(&self) -> OutageSpec {
        OutageSpec {
            outage_prob: self.outage.outage_prob,
            n_samples: self.outage.n_samples,
            seed: self.seed,
            force: self.outage.force,
        }
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            v_cap: self.feasibility.v_cap,
            tolerance: self.feasibility.tolerance,
            curve_step: self.feasibility.curve_step,
            diversity: Diversity::from_enabled(self.feasibility.diversity),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    /// SHA-256 over the resolved TOML form, excluding the output directory,
    /// truncated to 16 hex digits.
    pub fn config_hash(&self) -> String {
        let hashed = RunConfig {
            output_dir: None,
            ..self.clone()
        };
        let digest = Sha256::digest(hashed.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Reads and resolves a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    RunConfig::from_toml_str(&text, &path.display().to_string())
}
