//! Objective signal metrics and real-time-factor measurement.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::dsp::{apply_mel, MagnitudeSpectrogram, MelFilterbank, MelSpectrogram, Stft, StftConfig};
use crate::{Error, Result};

/// Amplitude floor applied before taking logarithms.
pub const LSD_FLOOR: f64 = 1e-5;

/// Metrics of one waveform against its references. Fields that need a
/// reference waveform are `None` when none was supplied.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MetricReport {
    pub spectral_convergence: Option<f64>,
    pub log_spectral_distance_db: Option<f64>,
    pub snr_db: Option<f64>,
    pub mel_consistency: f64,
}

impl MetricReport {
    /// Full report: reference-based metrics when `reference` is given, plus
    /// consistency against the conditioning mel.
    pub fn evaluate(
        waveform: &[f64],
        reference: Option<&[f64]>,
        mel: &MelSpectrogram,
        fb: &MelFilterbank,
        stft_config: &StftConfig,
    ) -> Result<Self> {
        let plan = Stft::new(*stft_config)?;
        let est_mag = plan.forward(waveform)?.magnitude();
        let mel_consistency = mel_consistency_of(&est_mag, mel, fb)?;
        let mut report = MetricReport { mel_consistency, ..Default::default() };
        if let Some(reference) = reference {
            let ref_mag = plan.forward(reference)?.magnitude();
            report.spectral_convergence = Some(spectral_convergence(&ref_mag, &est_mag)?);
            report.log_spectral_distance_db = Some(log_spectral_distance(&ref_mag, &est_mag, LSD_FLOOR)?);
            report.snr_db = Some(snr_db(reference, waveform)?);
        }
        Ok(report)
    }
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("spectrogram dims {a:?} and {b:?} differ")));
    }
    Ok(())
}

fn frobenius_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `‖ref − est‖_F / ‖ref‖_F`.
pub fn spectral_convergence(reference: &MagnitudeSpectrogram, estimate: &MagnitudeSpectrogram) -> Result<f64> {
    check_dims((reference.frames(), reference.bins()), (estimate.frames(), estimate.bins()))?;
    let norm = reference.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::invalid("spectral convergence is undefined for a zero reference"));
    }
    Ok(frobenius_distance(reference.data(), estimate.data()) / norm)
}

/// RMS over frames of the per-frame RMS dB difference, with both spectra
/// floored at `floor` before the logarithm.
pub fn log_spectral_distance(
    reference: &MagnitudeSpectrogram,
    estimate: &MagnitudeSpectrogram,
    floor: f64,
) -> Result<f64> {
    check_dims((reference.frames(), reference.bins()), (estimate.frames(), estimate.bins()))?;
    if !(floor > 0.0) {
        return Err(Error::invalid(format!("log floor must be positive, got {floor}")));
    }
    let frames = reference.frames();
    if frames == 0 || reference.bins() == 0 {
        return Ok(0.0);
    }
    let total: f64 = (0..frames)
        .map(|i| {
            let (r, e) = (reference.frame(i), estimate.frame(i));
            let sq: f64 = r
                .iter()
                .zip(e)
                .map(|(&a, &b)| (20.0 * (a.max(floor).log10() - b.max(floor).log10())).powi(2))
                .sum();
            sq / r.len() as f64
        })
        .sum();
    Ok((total / frames as f64).sqrt())
}

/// `10·log10(Σref² / Σ(ref − est)²)`; `+∞` when the waveforms are equal.
pub fn snr_db(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::invalid(format!(
            "reference has {} samples, estimate has {}",
            reference.len(),
            estimate.len()
        )));
    }
    let signal: f64 = reference.iter().map(|v| v * v).sum();
    if signal == 0.0 {
        return Err(Error::invalid("SNR is undefined for a silent reference"));
    }
    let noise: f64 = reference.iter().zip(estimate).map(|(r, e)| (r - e).powi(2)).sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

/// `‖B·|stft(waveform)| − mel‖_F / ‖mel‖_F`.
pub fn mel_consistency(
    waveform: &[f64],
    conditioning: &MelSpectrogram,
    fb: &MelFilterbank,
    stft_config: &StftConfig,
) -> Result<f64> {
    let frames = stft_config.num_frames(waveform.len())?;
    if frames != conditioning.frames() {
        return Err(Error::invalid(format!(
            "waveform gives {frames} frames, conditioning mel has {}",
            conditioning.frames()
        )));
    }
    let magnitude = crate::dsp::stft(waveform, stft_config)?.magnitude();
    mel_consistency_of(&magnitude, conditioning, fb)
}

fn mel_consistency_of(magnitude: &MagnitudeSpectrogram, conditioning: &MelSpectrogram, fb: &MelFilterbank) -> Result<f64> {
    let norm = conditioning.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::invalid("mel consistency is undefined for a zero mel"));
    }
    let mel = apply_mel(magnitude, fb)?;
    check_dims((mel.frames(), mel.bands()), (conditioning.frames(), conditioning.bands()))?;
    Ok(frobenius_distance(mel.data(), conditioning.data()) / norm)
}

/// Wall-clock statistics of a repeated task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RtfMeasurement {
    /// Audio seconds per median wall-clock second.
    pub rtf: f64,
    pub median_secs: f64,
    pub min_secs: f64,
    pub max_secs: f64,
    pub samples_secs: Vec<f64>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Times `task` `repetitions` times on a dedicated thread and reports
/// `audio_seconds / median wall-clock seconds`.
pub fn measure_rtf<F>(task: F, audio_seconds: f64, repetitions: usize) -> Result<RtfMeasurement>
where
    F: FnMut() -> Result<()> + Send,
{
    if repetitions == 0 {
        return Err(Error::invalid("at least one repetition is required"));
    }
    if !(audio_seconds > 0.0 && audio_seconds.is_finite()) {
        return Err(Error::invalid(format!("audio duration must be positive, got {audio_seconds}")));
    }
    let mut task = task;
    let samples = std::thread::scope(|scope| {
        scope
            .spawn(move || -> Result<Vec<Duration>> {
                (0..repetitions)
                    .map(|_| {
                        let start = Instant::now();
                        task()?;
                        Ok(start.elapsed())
                    })
                    .collect()
            })
            .join()
            .map_err(|_| Error::invalid("benchmark task panicked"))?
    })?;
    let mut secs: Vec<f64> = samples.iter().map(Duration::as_secs_f64).collect();
    let samples_secs = secs.clone();
    secs.sort_by(f64::total_cmp);
    let median_secs = median(&secs);
    Ok(RtfMeasurement {
        rtf: audio_seconds / median_secs.max(f64::MIN_POSITIVE),
        median_secs,
        min_secs: secs[0],
        max_secs: secs[secs.len() - 1],
        samples_secs,
    })
}
