//! Phase-aware diffusion vocoder sampling.
//!
//! A conditioning mel spectrogram is inverted once, through the filterbank
//! pseudo-inverse and Fast Griffin-Lim, into a waveform estimate `x̃`. The
//! reverse diffusion process then substitutes `x̃` for its own "predicted
//! clean signal" during the first, noisiest steps before handing over to
//! ordinary DDIM/DDPM updates.
//!
//! * [`dsp`]: STFT, Hann window, mel filterbank and its pseudo-inverse.
//! * [`phase_retrieval`]: magnitude/consistency projections and Griffin-Lim.
//! * [`diffusion`]: noise schedules, step rules and two-stage generation.
//! * [`predictor`]: the noise-predictor interface, analytic oracles and a
//!   client for external predictor processes.
//! * [`metrics`]: spectral metrics and real-time-factor measurement.
//! * [`io`], [`config`], [`corpus`]: file formats, TOML configuration and
//!   synthetic test utterances.

pub mod config;
pub mod corpus;
pub mod diffusion;
pub mod dsp;
pub mod error;
pub mod io;
pub mod metrics;
pub mod phase_retrieval;
pub mod predictor;
pub mod rng;

pub use error::{Error, Result};
