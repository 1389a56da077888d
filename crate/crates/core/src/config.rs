//! Config files: TOML with one table per experiment.
//!
//! Every table is optional and every field defaults, so a file only needs
//! the values it changes. Run manifests use the same layout with the fully
//! resolved tables plus a `[run]` table, so a manifest is itself a config.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::clock::SkewPopulation;
use crate::engine::{EpsilonSearch, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::{NodePosition, Region};
use crate::multihop::HopChainConfig;
use crate::pco::PcoConfig;
use crate::waveform::PulseShape;

/// Monte-Carlo realization of one aggregate waveform around `tau0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformConfig {
    pub n_nodes: usize,
    /// `σ̄²`: node `i` transmits at `tau0 + T_i` with `T_i ~ N(0, σ̄²/α_i²)`.
    pub sigma_bar2: f64,
    pub tau0: f64,
    pub tau_nz: f64,
    pub shape: PulseShape,
    pub a_max: f64,
    pub skew: SkewPopulation,
    pub channel: ChannelModel,
    pub region: Region,
    /// Receiver position; the region center when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub receiver: Option<NodePosition>,
    pub trace_points: usize,
    /// Also tabulate the large-population limit waveform.
    pub limit: bool,
    pub seed: u64,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        WaveformConfig {
            n_nodes: 400,
            sigma_bar2: 0.01,
            tau0: 1.0,
            tau_nz: 0.5,
            shape: PulseShape::Sine,
            a_max: 1.0,
            skew: SkewPopulation::default(),
            channel: ChannelModel::no_pathloss(),
            region: Region::unit_square(),
            receiver: None,
            trace_points: 1001,
            limit: true,
            seed: 0,
        }
    }
}

impl WaveformConfig {
    pub fn receiver(&self) -> NodePosition {
        self.receiver.unwrap_or_else(|| self.region.center())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::config("n_nodes must be at least 1"));
        }
        if !(self.sigma_bar2 >= 0.0 && self.sigma_bar2.is_finite()) {
            return Err(Error::config("sigma_bar2 must be nonnegative"));
        }
        if self.trace_points < 2 {
            return Err(Error::config("trace_points must be at least 2"));
        }
        self.skew.validate()?;
        self.channel.validate()?;
        Region::new(self.region.width, self.region.height).map_err(|e| Error::config(e.to_string()))?;
        if !self.region.contains(self.receiver()) {
            return Err(Error::config("receiver lies outside the region"));
        }
        Ok(())
    }

    pub fn resolved(&self) -> Result<Self> {
        self.validate()?;
        Ok(WaveformConfig { receiver: Some(self.receiver()), ..self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Pathloss,
    /// Coupled `(D_j, K_j)` pairs.
    #[default]
    Delay,
    /// `(D_fix, K_fix)` draws; needs an interior receiver.
    Fix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSampleConfig {
    pub kind: SampleKind,
    pub channel: ChannelModel,
    pub region: Region,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub receiver: Option<NodePosition>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ChannelSampleConfig {
    fn default() -> Self {
        ChannelSampleConfig {
            kind: SampleKind::Delay,
            channel: ChannelModel::default(),
            region: Region::unit_square(),
            receiver: None,
            samples: 100_000,
            seed: 0,
        }
    }
}

impl ChannelSampleConfig {
    pub fn receiver(&self) -> NodePosition {
        self.receiver.unwrap_or_else(|| self.region.center())
    }

    pub fn resolved(&self) -> Result<Self> {
        self.channel.validate()?;
        Region::new(self.region.width, self.region.height).map_err(|e| Error::config(e.to_string()))?;
        if self.samples == 0 {
            return Err(Error::config("samples must be at least 1"));
        }
        Ok(ChannelSampleConfig { receiver: Some(self.receiver()), ..self.clone() })
    }
}

/// Provenance written into a manifest; ignored when the file is read back.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunInfo {
    pub tool_version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_path: Option<String>,
    pub seed: u64,
    pub out: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_search: Option<EpsilonSearch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waveform: Option<WaveformConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pco: Option<PcoConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multihop: Option<HopChainConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_sample: Option<ChannelSampleConfig>,
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }
}
