//! TOML run configuration.
//!
//! ```toml
//! [schedule]
//! betas = [1e-4, 6.3e-4, 4.0e-3, 2.5e-2, 0.158, 0.5]
//!
//! [sampler]
//! variant = "corrected"     # plain | baseline | corrected
//! sigma_mode = "ddpm"       # ddpm | ddim0
//! stage1_end = 3
//! seed = 0
//!
//! [gla]
//! iterations = 32
//! momentum = 0.99
//! variant = "fast"          # fast | classic
//!
//! [stft]                    # sample rate comes from the input file
//! n_fft = 2048
//! win_length = 1200
//! hop_length = 300
//! centered = true
//!
//! [mel]
//! bands = 128
//! f_min = 0.0
//! # f_max = 11025.0         # defaults to Nyquist
//! ```
//!
//! Every section and key is optional; missing values take the defaults
//! shown. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffusion::{NoiseSchedule, SamplerConfig, SigmaMode, TraceMode, Variant};
use crate::dsp::{MelConfig, StftConfig};
use crate::phase_retrieval::{GlaConfig, GlaVariant, PhaseInit};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub betas: Vec<f64>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { betas: NoiseSchedule::geometric_six().betas().to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub variant: Variant,
    pub sigma_mode: SigmaMode,
    pub stage1_end: usize,
    #[serde(with = "seed_repr")]
    pub seed: u64,
}

/// TOML integers are signed 64-bit; seeds above `i64::MAX` are written as
/// decimal strings and either form is accepted on input.
mod seed_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => u64::try_from(v).map_err(|_| de::Error::custom(format!("seed must be non-negative, got {v}"))),
            Repr::Text(t) => t.parse().map_err(|_| de::Error::custom(format!("invalid seed {t:?}"))),
        }
    }
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self { variant: Variant::Corrected, sigma_mode: SigmaMode::Ddpm, stage1_end: 3, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlaSection {
    pub iterations: usize,
    pub momentum: f64,
    pub variant: GlaVariant,
}

impl Default for GlaSection {
    fn default() -> Self {
        let d = GlaConfig::default();
        Self { iterations: d.iterations, momentum: d.momentum, variant: d.variant }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftSection {
    pub n_fft: usize,
    pub win_length: usize,
    pub hop_length: usize,
    pub centered: bool,
}

impl Default for StftSection {
    fn default() -> Self {
        let d = StftConfig::default();
        Self { n_fft: d.n_fft, win_length: d.win_length, hop_length: d.hop_length, centered: d.centered }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocoderConfig {
    pub schedule: ScheduleSection,
    pub sampler: SamplerSection,
    pub gla: GlaSection,
    pub stft: StftSection,
    pub mel: MelConfig,
}

impl VocoderConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that does not depend on the input sample rate.
    pub fn validate(&self) -> Result<()> {
        let schedule = self.schedule().map_err(|e| Error::Config(format!("schedule: {e}")))?;
        if self.sampler.stage1_end > schedule.steps() {
            return Err(Error::Config(format!(
                "sampler.stage1_end = {} exceeds the {} schedule steps",
                self.sampler.stage1_end,
                schedule.steps()
            )));
        }
        if !(0.0..1.0).contains(&self.gla.momentum) {
            return Err(Error::Config(format!("gla.momentum must lie in [0, 1), got {}", self.gla.momentum)));
        }
        self.stft_config(22_050).validate().map_err(|e| Error::Config(format!("stft: {e}")))?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::from_betas(&self.schedule.betas)
    }

    pub fn stft_config(&self, sample_rate: u32) -> StftConfig {
        let s = &self.stft;
        StftConfig {
            n_fft: s.n_fft,
            win_length: s.win_length,
            hop_length: s.hop_length,
            sample_rate,
            centered: s.centered,
        }
    }

    /// Griffin-Lim settings; the random phase seed is supplied per call.
    pub fn gla_config(&self) -> GlaConfig {
        GlaConfig {
            iterations: self.gla.iterations,
            variant: self.gla.variant,
            momentum: self.gla.momentum,
            phase_init: PhaseInit::Random(self.sampler.seed),
        }
    }

    pub fn sampler_config(&self, sample_rate: u32) -> SamplerConfig {
        SamplerConfig {
            variant: self.sampler.variant,
            sigma_mode: self.sampler.sigma_mode,
            stage1_end: self.sampler.stage1_end,
            seed: self.sampler.seed,
            gla: self.gla_config(),
            stft: self.stft_config(sample_rate),
            trace: TraceMode::Hash,
        }
    }
}
