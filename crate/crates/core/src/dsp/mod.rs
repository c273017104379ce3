//! Short-time Fourier analysis/synthesis and mel filterbanks.
//!
//! Conventions:
//!
//! * Spectrograms are stored frame-major: `data[frame * bins + bin]`.
//! * The forward DFT is unnormalized; the inverse carries the `1/n_fft`.
//! * Only the non-negative frequencies (`n_fft / 2 + 1` bins) are stored.
//!   Energies and inner products that must agree with the time domain use
//!   the full-spectrum weighting (interior bins count twice), see
//!   [`ComplexSpectrogram::energy`].
//! * Mel spectrograms are linear amplitude: `mel = B · |X|`.

mod mel;
mod spectrogram;
mod stft;
mod window;

pub use mel::{
    apply_mel, build_mel_filterbank, estimate_magnitude, estimate_magnitude_unclamped, hz_to_mel,
    log_compress, mel_to_hz, pseudo_inverse_mel, MelConfig, MelFilterbank, LOG_MEL_FLOOR,
};
pub use spectrogram::{ComplexSpectrogram, MagnitudeSpectrogram, MelSpectrogram};
pub use stft::{istft, stft, Stft, StftConfig};
pub use window::make_hann_window;

pub use num_complex::Complex64;
