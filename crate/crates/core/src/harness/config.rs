use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::synth::SynthParams;
use super::{read_to_string, HarnessError, Result};
use crate::ensemble::EnsembleConfig;
use crate::metrics::MetricConfig;
use crate::sampler::{NoiseModel, SamplerConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Seeded corruption of each entry's ground truth.
    #[default]
    Simulated,
    /// Live chat-completions endpoint over each entry's image.
    Vlm,
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulated" => Ok(Self::Simulated),
            "vlm" => Ok(Self::Vlm),
            _ => Err(format!("unknown sampler {s:?} (expected simulated or vlm)")),
        }
    }
}

/// Everything a run depends on. Section names mirror the library config types.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub sampler_kind: SamplerKind,
    pub ensemble: EnsembleConfig,
    pub sampler: SamplerConfig,
    pub noise: NoiseModel,
    pub metric: MetricConfig,
    pub synth: SynthParams,
    /// Worker threads for batch commands; 0 uses one per core.
    pub jobs: usize,
}

impl RunConfig {
    /// Reads a TOML file (`.toml`) or JSON file (anything else); missing keys keep
    /// their defaults.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let parsed = if is_toml {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|message| HarnessError::Format {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        self.metric.validate().map_err(HarnessError::Config)?;
        self.noise.validate().map_err(HarnessError::Config)?;
        self.synth.validate().map_err(HarnessError::Config)?;
        if self.sampler_kind == SamplerKind::Vlm {
            self.sampler.validate().map_err(HarnessError::Config)?;
        }
        Ok(())
    }

    /// Sets every seed in the config.
    pub fn set_seed(&mut self, seed: u64) {
        self.noise.seed = seed;
        self.synth.seed = seed;
    }

    /// Hex SHA-256 of the JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Per-entry noise seed derived from the run seed and the entry id.
pub fn entry_seed(base: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
