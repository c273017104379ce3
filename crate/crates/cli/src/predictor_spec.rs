//! `--predictor` specifications.

use std::path::{Path, PathBuf};
use std::time::Duration;

use pavoc::diffusion::NoiseSchedule;
use pavoc::io::read_wav;
use pavoc::predictor::{DegradedOraclePredictor, ExternalPredictor, NoisePredictor, OraclePredictor, ZeroPredictor};

#[derive(Debug, Clone, PartialEq)]
pub enum PredictorSpec {
    Zero,
    /// Exact noise given a reference; `None` means "the input itself".
    Oracle { reference: Option<PathBuf> },
    Degraded { reference: Option<PathBuf>, snr_db: f64 },
    External { command: String },
}

fn parse_snr(text: &str) -> pavoc::Result<f64> {
    let snr: f64 = text
        .trim()
        .parse()
        .map_err(|_| pavoc::Error::InvalidArgument(format!("invalid SNR {text:?} in predictor spec")))?;
    if snr.is_nan() || snr == f64::NEG_INFINITY {
        return Err(pavoc::Error::InvalidArgument(format!("SNR must be finite or inf, got {text}")));
    }
    Ok(snr)
}

impl PredictorSpec {
    /// `zero`, `oracle[:<wav>]`, `degraded:[<wav>:]<snr_db>`, `external:<cmd>`.
    pub fn parse(text: &str) -> pavoc::Result<Self> {
        let (kind, rest) = match text.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (text, None),
        };
        match (kind, rest) {
            ("zero", None) => Ok(PredictorSpec::Zero),
            ("oracle", None) => Ok(PredictorSpec::Oracle { reference: None }),
            ("oracle", Some(path)) if !path.is_empty() => Ok(PredictorSpec::Oracle { reference: Some(path.into()) }),
            ("degraded", Some(rest)) => match rest.rsplit_once(':') {
                Some((path, snr)) if !path.is_empty() => {
                    Ok(PredictorSpec::Degraded { reference: Some(path.into()), snr_db: parse_snr(snr)? })
                }
                _ => Ok(PredictorSpec::Degraded { reference: None, snr_db: parse_snr(rest)? }),
            },
            ("external", Some(cmd)) if !cmd.trim().is_empty() => Ok(PredictorSpec::External { command: cmd.to_string() }),
            _ => Err(pavoc::Error::InvalidArgument(format!(
                "unknown predictor spec {text:?}; expected zero, oracle:<wav>, degraded:<wav>:<snr_db> or external:<command>"
            ))),
        }
    }

    /// Reference WAV named by the spec itself, if any.
    pub fn reference_path(&self) -> Option<&Path> {
        match self {
            PredictorSpec::Oracle { reference } | PredictorSpec::Degraded { reference, .. } => reference.as_deref(),
            _ => None,
        }
    }

    fn reference<'a>(explicit: &'a Option<PathBuf>, fallback: Option<&'a Path>) -> pavoc::Result<&'a Path> {
        explicit
            .as_deref()
            .or(fallback)
            .ok_or_else(|| pavoc::Error::InvalidArgument("oracle predictors need a reference WAV".into()))
    }

    fn load_reference(path: &Path, length: usize) -> pavoc::Result<Vec<f64>> {
        let audio = read_wav(path)?;
        if audio.samples.len() != length {
            return Err(pavoc::Error::InvalidArgument(format!(
                "oracle reference {} has {} samples, generation needs {length}",
                path.display(),
                audio.samples.len()
            )));
        }
        Ok(audio.samples)
    }

    /// Instantiates the predictor for one generation of `length` samples.
    pub fn build(
        &self,
        fallback_reference: Option<&Path>,
        length: usize,
        schedule: &NoiseSchedule,
        seed: u64,
        log_mel: bool,
        timeout: Duration,
    ) -> pavoc::Result<Box<dyn NoisePredictor + Send>> {
        Ok(match self {
            PredictorSpec::Zero => Box::new(ZeroPredictor),
            PredictorSpec::Oracle { reference } => {
                let y0 = Self::load_reference(Self::reference(reference, fallback_reference)?, length)?;
                Box::new(OraclePredictor::new(y0, schedule.clone()))
            }
            PredictorSpec::Degraded { reference, snr_db } => {
                let y0 = Self::load_reference(Self::reference(reference, fallback_reference)?, length)?;
                Box::new(DegradedOraclePredictor::new(y0, schedule.clone(), *snr_db, seed))
            }
            PredictorSpec::External { command } => Box::new(ExternalPredictor::spawn_shell(command, log_mel, timeout)?),
        })
    }
}

pub fn timeout(secs: f64) -> pavoc::Result<Duration> {
    Duration::try_from_secs_f64(secs)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| pavoc::Error::InvalidArgument(format!("predictor timeout must be positive, got {secs}")))
}
