//! Turning flags, configuration files and file names into concrete settings.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use pavoc::config::VocoderConfig;
use pavoc::dsp::{MelFilterbank, StftConfig};
use pavoc::io::{read_melb, read_wav, Audio, MelFile, SUPPORTED_SAMPLE_RATES};
use sha2::{Digest, Sha256};

use crate::args::{DspArgs, GlaArgs, SamplerArgs};

/// Configuration file (or defaults) with command-line overrides applied.
pub fn resolve_config(
    dsp: &DspArgs,
    gla: Option<&GlaArgs>,
    sampler: Option<&SamplerArgs>,
) -> pavoc::Result<VocoderConfig> {
    let mut c = match &dsp.config {
        Some(path) => VocoderConfig::load(path)?,
        None => VocoderConfig::default(),
    };
    if let Some(v) = dsp.n_fft {
        c.stft.n_fft = v;
    }
    if let Some(v) = dsp.win_length {
        c.stft.win_length = v;
    }
    if let Some(v) = dsp.hop_length {
        c.stft.hop_length = v;
    }
    if let Some(v) = dsp.mel_bands {
        c.mel.bands = v;
    }
    if let Some(v) = dsp.f_min {
        c.mel.f_min = v;
    }
    if dsp.f_max.is_some() {
        c.mel.f_max = dsp.f_max;
    }
    if let Some(g) = gla {
        if let Some(v) = g.seed {
            c.sampler.seed = v;
        }
        if let Some(v) = g.gla_iters {
            c.gla.iterations = v;
        }
        if let Some(v) = g.gla_momentum {
            c.gla.momentum = v;
        }
    }
    if let Some(s) = sampler {
        if let Some(v) = s.variant {
            c.sampler.variant = v.into();
        }
        if let Some(v) = s.stage1_end {
            c.sampler.stage1_end = v;
        }
        if let Some(v) = s.sigma {
            c.sampler.sigma_mode = v.into();
        }
    }
    c.validate()?;
    Ok(c)
}

/// Per-file seed: `seed XOR` the first eight bytes of SHA-256 of the file
/// name, so results do not depend on the directory a corpus lives in.
pub fn file_seed(seed: u64, path: &Path) -> u64 {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let digest = Sha256::digest(name.as_bytes());
    seed ^ u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into())
}

/// Expands `{stem}` and `{reference}` in a path or predictor template.
pub fn expand(template: &str, stem: &str, reference: Option<&str>) -> String {
    let s = template.replace("{stem}", stem);
    match reference {
        Some(r) => s.replace("{reference}", r),
        None => s,
    }
}

/// A MELB file with the STFT geometry it implies under `config`.
pub struct LoadedMel {
    pub file: MelFile,
    pub stft: StftConfig,
}

pub fn load_mel(path: &Path, config: &VocoderConfig) -> pavoc::Result<LoadedMel> {
    let file = read_melb(path)?;
    if !SUPPORTED_SAMPLE_RATES.contains(&file.sample_rate) {
        return Err(pavoc::Error::Format(format!(
            "{}: unsupported sample rate {} Hz",
            path.display(),
            file.sample_rate
        )));
    }
    let stft = config.stft_config(file.sample_rate);
    if file.hop_length as usize != stft.hop_length {
        return Err(pavoc::Error::Config(format!(
            "{} was analyzed with hop {}, configuration uses {}",
            path.display(),
            file.hop_length,
            stft.hop_length
        )));
    }
    if file.mel.bands() != config.mel.bands {
        return Err(pavoc::Error::Config(format!(
            "{} has {} mel bands, configuration uses {}",
            path.display(),
            file.mel.bands(),
            config.mel.bands
        )));
    }
    Ok(LoadedMel { file, stft })
}

pub fn load_reference(template: Option<&str>, stem: &str) -> pavoc::Result<Option<(PathBuf, Audio)>> {
    template
        .map(|t| {
            let path = PathBuf::from(expand(t, stem, None));
            read_wav(&path).map(|audio| (path, audio))
        })
        .transpose()
}

/// Output length: the reference length when one is given (it must map to
/// the mel's frame count), else the shortest length with that frame count.
pub fn output_length(mel: &LoadedMel, reference: Option<&Audio>) -> pavoc::Result<usize> {
    let frames = mel.file.mel.frames();
    match reference {
        Some(audio) => {
            if audio.sample_rate != mel.stft.sample_rate {
                return Err(pavoc::Error::InvalidArgument(format!(
                    "reference is {} Hz, mel is {} Hz",
                    audio.sample_rate, mel.stft.sample_rate
                )));
            }
            let ref_frames = mel.stft.num_frames(audio.samples.len())?;
            if ref_frames != frames {
                return Err(pavoc::Error::InvalidArgument(format!(
                    "reference gives {ref_frames} frames, mel has {frames}"
                )));
            }
            Ok(audio.samples.len())
        }
        None => Ok(mel.stft.signal_length(frames)),
    }
}

/// Filterbanks are costly to build (pseudo-inverse); share them across files.
#[derive(Default)]
pub struct FilterbankCache {
    banks: Mutex<HashMap<u32, Arc<MelFilterbank>>>,
}

impl FilterbankCache {
    pub fn get(&self, config: &VocoderConfig, stft: &StftConfig) -> pavoc::Result<Arc<MelFilterbank>> {
        if let Some(fb) = self.banks.lock().expect("filterbank cache poisoned").get(&stft.sample_rate) {
            return Ok(Arc::clone(fb));
        }
        let fb = Arc::new(config.mel.build(stft).map_err(|e| pavoc::Error::Config(format!("filterbank: {e}")))?);
        self.banks.lock().expect("filterbank cache poisoned").insert(stft.sample_rate, Arc::clone(&fb));
        Ok(fb)
    }
}

/// File-level worker pool, capped by `PAVOC_THREADS` when set.
pub fn thread_pool() -> pavoc::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var("PAVOC_THREADS") {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| pavoc::Error::Config(format!("PAVOC_THREADS must be a positive integer, got {value:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| pavoc::Error::Config(format!("thread pool: {e}")))
}
