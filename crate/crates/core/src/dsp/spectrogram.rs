use num_complex::Complex64;

use crate::{Error, Result};

/// Complex STFT, `frames × bins`, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    frames: usize,
    bins: usize,
    data: Vec<Complex64>,
}

impl ComplexSpectrogram {
    pub fn new(frames: usize, bins: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != frames * bins {
            return Err(Error::invalid(format!(
                "spectrogram data has {} entries, expected {frames}×{bins}",
                data.len()
            )));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("spectrogram contains non-finite entries"));
        }
        Ok(Self { frames, bins, data })
    }

    pub fn zeros(frames: usize, bins: usize) -> Self {
        Self { frames, bins, data: vec![Complex64::new(0.0, 0.0); frames * bins] }
    }

    pub(crate) fn from_parts_unchecked(frames: usize, bins: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), frames * bins);
        Self { frames, bins, data }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn frame(&self, index: usize) -> &[Complex64] {
        &self.data[index * self.bins..(index + 1) * self.bins]
    }

    pub fn magnitude(&self) -> MagnitudeSpectrogram {
        MagnitudeSpectrogram {
            frames: self.frames,
            bins: self.bins,
            data: self.data.iter().map(|c| c.norm()).collect(),
        }
    }

    /// Plain Frobenius norm over the stored (one-sided) bins.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Energy of the equivalent two-sided spectrum divided by `n_fft`.
    ///
    /// With the unnormalized forward DFT this equals the energy of the
    /// windowed frames (Parseval). DC, and Nyquist when `n_fft` is even,
    /// appear once in the two-sided spectrum; every other stored bin twice.
    pub fn energy(&self, n_fft: usize) -> f64 {
        let has_nyquist = n_fft % 2 == 0;
        let mut total = 0.0;
        for frame in self.data.chunks_exact(self.bins) {
            for (k, c) in frame.iter().enumerate() {
                let single = k == 0 || (has_nyquist && k == self.bins - 1);
                total += if single { c.norm_sqr() } else { 2.0 * c.norm_sqr() };
            }
        }
        total / n_fft as f64
    }

    /// `‖self - other‖_F / ‖other‖_F`.
    pub fn relative_distance(&self, other: &ComplexSpectrogram) -> f64 {
        let num: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = other.data.iter().map(|c| c.norm_sqr()).sum();
        if den == 0.0 {
            if num == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            (num / den).sqrt()
        }
    }
}

/// Non-negative linear-amplitude magnitudes, `frames × bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrogram {
    frames: usize,
    bins: usize,
    data: Vec<f64>,
}

impl MagnitudeSpectrogram {
    pub fn new(frames: usize, bins: usize, data: Vec<f64>) -> Result<Self> {
        check_non_negative(frames, bins, &data, "magnitude")?;
        Ok(Self { frames, bins, data })
    }

    pub fn zeros(frames: usize, bins: usize) -> Self {
        Self { frames, bins, data: vec![0.0; frames * bins] }
    }

    pub(crate) fn from_parts_unchecked(frames: usize, bins: usize, data: Vec<f64>) -> Self {
        Self { frames, bins, data }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frame(&self, index: usize) -> &[f64] {
        &self.data[index * self.bins..(index + 1) * self.bins]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Linear-amplitude mel spectrogram, `frames × bands`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    frames: usize,
    bands: usize,
    data: Vec<f64>,
}

impl MelSpectrogram {
    pub fn new(frames: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        check_non_negative(frames, bands, &data, "mel")?;
        Ok(Self { frames, bands, data })
    }

    pub fn zeros(frames: usize, bands: usize) -> Self {
        Self { frames, bands, data: vec![0.0; frames * bands] }
    }

    pub(crate) fn from_parts_unchecked(frames: usize, bands: usize, data: Vec<f64>) -> Self {
        Self { frames, bands, data }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn check_non_negative(rows: usize, cols: usize, data: &[f64], what: &str) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::invalid(format!(
            "{what} data has {} entries, expected {rows}×{cols}",
            data.len()
        )));
    }
    if let Some(v) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::invalid(format!("{what} entries must be finite and non-negative, found {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nan() {
        assert!(MagnitudeSpectrogram::new(1, 2, vec![1.0, -1.0]).is_err());
        assert!(MelSpectrogram::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(MelSpectrogram::new(1, 2, vec![1.0]).is_err());
        assert!(MelSpectrogram::new(1, 2, vec![0.0, 3.0]).is_ok());
    }

    #[test]
    fn energy_weights_interior_bins_twice() {
        let one = Complex64::new(1.0, 0.0);
        // n_fft = 4 → bins 0, 1, 2 (Nyquist)
        let s = ComplexSpectrogram::new(1, 3, vec![one, one, one]).unwrap();
        assert_eq!(s.energy(4), (1.0 + 2.0 + 1.0) / 4.0);
        // n_fft = 5 → bins 0, 1, 2, no Nyquist
        assert_eq!(s.energy(5), (1.0 + 2.0 + 2.0) / 5.0);
    }
}
