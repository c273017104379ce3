use std::fmt;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use super::spectrogram::ComplexSpectrogram;
use super::window::make_hann_window;
use crate::{Error, Result};

/// Maximum relative spread of the overlapped squared window before
/// synthesis is refused.
const COLA_TOLERANCE: f64 = 1e-10;

/// STFT geometry. All lengths are in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftConfig {
    pub n_fft: usize,
    pub win_length: usize,
    pub hop_length: usize,
    pub sample_rate: u32,
    /// Reflect-pad the signal by `n_fft / 2` on both sides.
    pub centered: bool,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self::vocoder(22_050)
    }
}

impl StftConfig {
    /// 2048-point FFT, 1200-sample Hann window, hop 300, centered.
    pub fn vocoder(sample_rate: u32) -> Self {
        Self { n_fft: 2048, win_length: 1200, hop_length: 300, sample_rate, centered: true }
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || self.win_length == 0 || self.hop_length == 0 || self.sample_rate == 0 {
            return Err(Error::Config(format!("all STFT sizes must be positive: {self}")));
        }
        if self.win_length > self.n_fft {
            return Err(Error::Config(format!("win_length exceeds n_fft: {self}")));
        }
        if self.hop_length > self.win_length {
            return Err(Error::Config(format!("hop_length exceeds win_length: {self}")));
        }
        Ok(())
    }

    /// Number of frames the analysis produces for a signal of `len` samples.
    pub fn num_frames(&self, len: usize) -> Result<usize> {
        if len == 0 {
            return Err(Error::invalid("signal must contain at least one sample"));
        }
        if self.centered {
            Ok(1 + len / self.hop_length)
        } else if len < self.n_fft {
            Err(Error::invalid(format!(
                "uncentered analysis needs at least n_fft = {} samples, got {len}",
                self.n_fft
            )))
        } else {
            Ok(1 + (len - self.n_fft) / self.hop_length)
        }
    }

    /// Shortest signal length that yields `frames` frames.
    pub fn signal_length(&self, frames: usize) -> usize {
        let frames = frames.max(1);
        if self.centered {
            ((frames - 1) * self.hop_length).max(1)
        } else {
            (frames - 1) * self.hop_length + self.n_fft
        }
    }

    /// Relative spread `(max - min) / max` of the overlap-added squared
    /// window over one hop period.
    pub fn cola_deviation(&self) -> Result<f64> {
        self.validate()?;
        let window = make_hann_window(self.win_length)?;
        let mut sums = vec![0.0; self.hop_length];
        for (n, w) in window.iter().enumerate() {
            sums[n % self.hop_length] += w * w;
        }
        let max = sums.iter().cloned().fold(f64::MIN, f64::max);
        let min = sums.iter().cloned().fold(f64::MAX, f64::min);
        if max <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok((max - min) / max)
    }

    pub fn satisfies_cola(&self) -> bool {
        self.cola_deviation().map(|d| d <= COLA_TOLERANCE).unwrap_or(false)
    }
}

impl fmt::Display for StftConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n_fft={} win={} hop={} sr={} centered={}",
            self.n_fft, self.win_length, self.hop_length, self.sample_rate, self.centered
        )
    }
}

/// Planned STFT analysis/synthesis pair for one [`StftConfig`].
///
/// The Hann window is zero-padded symmetrically to `n_fft`. Synthesis is the
/// least-squares inverse of analysis (including the reflect padding), so
/// `stft ∘ istft` is the orthogonal projection onto consistent spectrograms
/// under the two-sided spectral norm.
#[derive(Clone)]
pub struct Stft {
    config: StftConfig,
    window: Vec<f64>,
    support: std::ops::Range<usize>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    cola: bool,
}

impl fmt::Debug for Stft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stft").field("config", &self.config).field("cola", &self.cola).finish()
    }
}

impl Stft {
    pub fn new(config: StftConfig) -> Result<Self> {
        config.validate()?;
        let hann = make_hann_window(config.win_length)?;
        let offset = (config.n_fft - config.win_length) / 2;
        let mut window = vec![0.0; config.n_fft];
        window[offset..offset + config.win_length].copy_from_slice(&hann);
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Self {
            config,
            window,
            support: offset..offset + config.win_length,
            forward: planner.plan_fft_forward(config.n_fft),
            inverse: planner.plan_fft_inverse(config.n_fft),
            cola: config.satisfies_cola(),
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    /// The analysis window, zero-padded to `n_fft`.
    pub fn window(&self) -> &[f64] {
        &self.window
    }

    fn pad(&self) -> usize {
        if self.config.centered { self.config.n_fft / 2 } else { 0 }
    }

    /// Maps a position in the padded signal to a sample of the original.
    fn source_index(&self, padded: usize, len: usize) -> Option<usize> {
        if self.config.centered {
            Some(reflect_index(padded as isize - self.pad() as isize, len))
        } else if padded < len {
            Some(padded)
        } else {
            None
        }
    }

    pub fn forward(&self, signal: &[f64]) -> Result<ComplexSpectrogram> {
        let frames = self.config.num_frames(signal.len())?;
        if let Some(v) = signal.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("signal contains non-finite sample {v}")));
        }
        let bins = self.config.bins();
        let hop = self.config.hop_length;
        let mut frame_buf = self.forward.make_input_vec();
        let mut spec_buf = self.forward.make_output_vec();
        let mut scratch = self.forward.make_scratch_vec();
        let mut data = Vec::with_capacity(frames * bins);
        for f in 0..frames {
            frame_buf.iter_mut().for_each(|v| *v = 0.0);
            for n in self.support.clone() {
                if let Some(i) = self.source_index(f * hop + n, signal.len()) {
                    frame_buf[n] = self.window[n] * signal[i];
                }
            }
            self.forward
                .process_with_scratch(&mut frame_buf, &mut spec_buf, &mut scratch)
                .map_err(|e| Error::invalid(format!("forward FFT failed: {e}")))?;
            data.extend_from_slice(&spec_buf);
        }
        Ok(ComplexSpectrogram::from_parts_unchecked(frames, bins, data))
    }

    /// Least-squares inverse producing exactly `length` samples.
    pub fn inverse(&self, spec: &ComplexSpectrogram, length: usize) -> Result<Vec<f64>> {
        if !self.cola {
            return Err(Error::Config(format!(
                "window/hop pair violates constant overlap-add ({})",
                self.config
            )));
        }
        if spec.bins() != self.config.bins() {
            return Err(Error::invalid(format!(
                "spectrogram has {} bins, config expects {}",
                spec.bins(),
                self.config.bins()
            )));
        }
        if length == 0 {
            return Err(Error::invalid("target length must be positive"));
        }
        let n_fft = self.config.n_fft;
        let hop = self.config.hop_length;
        let frames = spec.frames();
        let padded_len = (frames.saturating_sub(1)) * hop + n_fft;
        let mut num = vec![0.0; padded_len];
        let mut den = vec![0.0; padded_len];
        let mut spec_buf = self.inverse.make_input_vec();
        let mut frame_buf = self.inverse.make_output_vec();
        let mut scratch = self.inverse.make_scratch_vec();
        let scale = 1.0 / n_fft as f64;
        let last = spec_buf.len() - 1;
        for f in 0..frames {
            spec_buf.copy_from_slice(spec.frame(f));
            // A real signal has real DC and Nyquist coefficients.
            spec_buf[0].im = 0.0;
            if n_fft % 2 == 0 {
                spec_buf[last].im = 0.0;
            }
            self.inverse
                .process_with_scratch(&mut spec_buf, &mut frame_buf, &mut scratch)
                .map_err(|e| Error::invalid(format!("inverse FFT failed: {e}")))?;
            let base = f * hop;
            for n in self.support.clone() {
                let w = self.window[n];
                num[base + n] += w * frame_buf[n] * scale;
                den[base + n] += w * w;
            }
        }
        let mut x_num = vec![0.0; length];
        let mut x_den = vec![0.0; length];
        for j in 0..padded_len {
            if den[j] == 0.0 {
                continue;
            }
            if let Some(i) = self.source_index(j, length) {
                x_num[i] += num[j];
                x_den[i] += den[j];
            }
        }
        Ok(x_num
            .into_iter()
            .zip(x_den)
            .map(|(n, d)| if d > 0.0 { n / d } else { 0.0 })
            .collect())
    }

    /// `stft(istft(spec))` with the given signal length.
    pub fn project(&self, spec: &ComplexSpectrogram, length: usize) -> Result<ComplexSpectrogram> {
        let expected = self.config.num_frames(length)?;
        if spec.frames() != expected {
            return Err(Error::invalid(format!(
                "spectrogram has {} frames, a {length}-sample signal has {expected}",
                spec.frames()
            )));
        }
        let signal = self.inverse(spec, length)?;
        self.forward(&signal)
    }
}

/// Whole-sample symmetric reflection (numpy `reflect`), repeated as needed
/// for signals shorter than the padding.
fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m >= len as isize { (period - m) as usize } else { m as usize }
}

/// One-shot analysis; plans a transform per call.
pub fn stft(signal: &[f64], config: &StftConfig) -> Result<ComplexSpectrogram> {
    Stft::new(*config)?.forward(signal)
}

/// One-shot least-squares synthesis; plans a transform per call.
pub fn istft(spec: &ComplexSpectrogram, config: &StftConfig, target_length: usize) -> Result<Vec<f64>> {
    Stft::new(*config)?.inverse(spec, target_length)
}
