//! Metric rows and CSV output.

use std::path::Path;

use pavoc::dsp::{MelFilterbank, MelSpectrogram, StftConfig};
use pavoc::metrics::MetricReport;
use serde::Serialize;

/// One CSV row per generated file. Absent metrics are empty cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub path: String,
    pub variant: String,
    pub stage1_end: Option<usize>,
    pub spectral_convergence: Option<f64>,
    pub lsd_db: Option<f64>,
    pub snr_db: Option<f64>,
    pub mel_consistency: Option<f64>,
    pub rtf: Option<f64>,
}

impl MetricRow {
    pub fn new(path: &Path, variant: &str, stage1_end: Option<usize>) -> Self {
        Self {
            path: path.display().to_string(),
            variant: variant.to_string(),
            stage1_end,
            spectral_convergence: None,
            lsd_db: None,
            snr_db: None,
            mel_consistency: None,
            rtf: None,
        }
    }

    /// Fills every metric that is defined: mel consistency needs a non-zero
    /// mel, the reference metrics a non-silent reference.
    pub fn with_metrics(
        mut self,
        waveform: &[f64],
        reference: Option<&[f64]>,
        mel: &MelSpectrogram,
        fb: &MelFilterbank,
        stft: &StftConfig,
    ) -> pavoc::Result<Self> {
        if mel.frobenius_norm() > 0.0 {
            let reference = reference.filter(|r| r.iter().any(|v| *v != 0.0));
            let report = MetricReport::evaluate(waveform, reference, mel, fb, stft)?;
            self.mel_consistency = Some(report.mel_consistency);
            self.spectral_convergence = report.spectral_convergence;
            self.lsd_db = report.log_spectral_distance_db;
            self.snr_db = report.snr_db;
        }
        Ok(self)
    }

    pub fn with_rtf(mut self, audio_secs: f64, elapsed_secs: f64) -> Self {
        if elapsed_secs > 0.0 {
            self.rtf = Some(audio_secs / elapsed_secs);
        }
        self
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
