use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use super::spectrogram::{MagnitudeSpectrogram, MelSpectrogram};
use super::stft::StftConfig;
use crate::{Error, Result};

/// `B · B⁺` must reproduce the identity to this max-abs tolerance.
const INVERSE_TOLERANCE: f64 = 1e-4;
/// Smallest-to-largest singular value ratio below which `B` is rank deficient.
const RANK_TOLERANCE: f64 = 1e-8;
/// Amplitude floor for the optional log-mel payload.
pub const LOG_MEL_FLOOR: f64 = 1e-5;

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Non-negative `bands × bins` mel matrix `B` and its right pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: DMatrix<f64>,
    pseudo_inverse: DMatrix<f64>,
    f_min: f64,
    f_max: f64,
    sample_rate: u32,
}

/// Parameters needed to rebuild a filterbank; serialized into manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MelConfig {
    pub bands: usize,
    pub f_min: f64,
    /// `None` means Nyquist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self { bands: 128, f_min: 0.0, f_max: None }
    }
}

impl MelConfig {
    pub fn build(&self, stft: &StftConfig) -> Result<MelFilterbank> {
        let f_max = self.f_max.unwrap_or(stft.sample_rate as f64 / 2.0);
        build_mel_filterbank(self.bands, stft, self.f_min, f_max)
    }
}

impl MelFilterbank {
    /// Wraps an explicit weight matrix, computing and checking `B⁺`.
    pub fn from_weights(weights: DMatrix<f64>, f_min: f64, f_max: f64, sample_rate: u32) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("filterbank weights must be finite and non-negative"));
        }
        if let Some(row) = (0..weights.nrows()).find(|&r| weights.row(r).iter().all(|w| *w == 0.0)) {
            return Err(Error::invalid(format!("mel band {row} has empty support")));
        }
        let pseudo_inverse = pseudo_inverse_mel(&weights, 0.0)?;
        let identity_error = (&weights * &pseudo_inverse - DMatrix::identity(weights.nrows(), weights.nrows()))
            .amax();
        if identity_error > INVERSE_TOLERANCE {
            return Err(Error::RankDeficient(format!(
                "B·B⁺ deviates from identity by {identity_error:e}"
            )));
        }
        Ok(Self { weights, pseudo_inverse, f_min, f_max, sample_rate })
    }

    pub fn bands(&self) -> usize {
        self.weights.nrows()
    }

    pub fn bins(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn pseudo_inverse(&self) -> &DMatrix<f64> {
        &self.pseudo_inverse
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// `max |B·B⁺ − I|`.
    pub fn identity_error(&self) -> f64 {
        let m = self.bands();
        (&self.weights * &self.pseudo_inverse - DMatrix::identity(m, m)).amax()
    }
}

/// Triangular filters on the HTK mel scale with Slaney-style area
/// normalization (each triangle scaled by `2 / (f_right - f_left)`).
pub fn build_mel_filterbank(bands: usize, config: &StftConfig, f_min: f64, f_max: f64) -> Result<MelFilterbank> {
    config.validate()?;
    let bins = config.bins();
    let nyquist = config.sample_rate as f64 / 2.0;
    if bands == 0 {
        return Err(Error::invalid("at least one mel band is required"));
    }
    if bands >= bins {
        return Err(Error::RankDeficient(format!(
            "{bands} mel bands cannot have full row rank over {bins} frequency bins"
        )));
    }
    if !(0.0 <= f_min && f_min < f_max && f_max <= nyquist) {
        return Err(Error::invalid(format!(
            "band edges must satisfy 0 <= f_min < f_max <= {nyquist}, got {f_min}..{f_max}"
        )));
    }
    let (mel_lo, mel_hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
    let edges: Vec<f64> = (0..bands + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (bands + 1) as f64))
        .collect();
    let bin_hz = config.sample_rate as f64 / config.n_fft as f64;
    let weights = DMatrix::from_fn(bands, bins, |m, k| {
        let f = k as f64 * bin_hz;
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let rising = (f - left) / (center - left);
        let falling = (right - f) / (right - center);
        rising.min(falling).max(0.0) * 2.0 / (right - left)
    });
    MelFilterbank::from_weights(weights, f_min, f_max, config.sample_rate)
}

/// Right pseudo-inverse `Bᵀ(BBᵀ + ridge·I)⁻¹`.
///
/// At `ridge = 0` this is the Moore-Penrose inverse and requires full row
/// rank (smallest singular value above `1e-8` times the largest).
pub fn pseudo_inverse_mel(weights: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::invalid(format!("ridge must be finite and non-negative, got {ridge}")));
    }
    let m = weights.nrows();
    if m == 0 || m > weights.ncols() {
        return Err(Error::RankDeficient(format!(
            "a {m}×{} matrix has no right inverse",
            weights.ncols()
        )));
    }
    let gram = weights * weights.transpose();
    if ridge == 0.0 {
        let eig = gram.clone().symmetric_eigenvalues();
        let max = eig.max().max(0.0).sqrt();
        let min = eig.min().max(0.0).sqrt();
        if !(min > RANK_TOLERANCE * max) {
            return Err(Error::RankDeficient(format!(
                "singular value ratio {:e} below {RANK_TOLERANCE:e}; use a positive ridge",
                if max > 0.0 { min / max } else { 0.0 }
            )));
        }
    }
    let regularized = gram + DMatrix::identity(m, m) * ridge;
    let chol = regularized.cholesky().ok_or_else(|| {
        Error::RankDeficient("BBᵀ + ridge·I is not positive definite; use a positive ridge".into())
    })?;
    Ok(chol.solve(weights).transpose())
}

/// `X̃ = B·X`, frame by frame.
pub fn apply_mel(mag: &MagnitudeSpectrogram, fb: &MelFilterbank) -> Result<MelSpectrogram> {
    if mag.bins() != fb.bins() {
        return Err(Error::invalid(format!(
            "magnitude has {} bins, filterbank expects {}",
            mag.bins(),
            fb.bins()
        )));
    }
    let cols = DMatrixView::from_slice(mag.data(), mag.bins(), mag.frames());
    let mel = fb.weights() * cols;
    // Rounding cannot produce negatives from non-negative operands.
    Ok(MelSpectrogram::from_parts_unchecked(mag.frames(), fb.bands(), mel.as_slice().to_vec()))
}

/// `B⁺·X̃` before clamping; may contain small negatives.
pub fn estimate_magnitude_unclamped(mel: &MelSpectrogram, fb: &MelFilterbank) -> Result<Vec<f64>> {
    if mel.bands() != fb.bands() {
        return Err(Error::invalid(format!(
            "mel has {} bands, filterbank expects {}",
            mel.bands(),
            fb.bands()
        )));
    }
    let cols = DMatrixView::from_slice(mel.data(), mel.bands(), mel.frames());
    Ok((fb.pseudo_inverse() * cols).as_slice().to_vec())
}

/// `X̂ = max(B⁺·X̃, 0)`.
pub fn estimate_magnitude(mel: &MelSpectrogram, fb: &MelFilterbank) -> Result<MagnitudeSpectrogram> {
    let raw = estimate_magnitude_unclamped(mel, fb)?;
    Ok(MagnitudeSpectrogram::from_parts_unchecked(
        mel.frames(),
        fb.bins(),
        raw.into_iter().map(|v| v.max(0.0)).collect(),
    ))
}

/// `log10(max(x, 1e-5))`, used only for predictor payloads.
pub fn log_compress(mel: &MelSpectrogram) -> Vec<f64> {
    mel.data().iter().map(|v| v.max(LOG_MEL_FLOOR).log10()).collect()
}
