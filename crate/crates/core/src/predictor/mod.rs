//! Noise predictors `ε̂(y_t, mel, sqrt(ᾱ_t))`.
//!
//! The engine ships analytic predictors for verification plus a client for
//! an external process (e.g. a neural network runtime) speaking the framed
//! protocol in [`protocol`].

mod external;
mod oracle;
pub mod protocol;

pub use external::{ExternalPredictor, DEFAULT_TIMEOUT};
pub use oracle::{degraded_oracle_predict, oracle_predict, DegradedOraclePredictor, OraclePredictor, ZeroPredictor, NOISE_LEVEL_TOLERANCE};

use crate::dsp::MelSpectrogram;
use crate::{Error, Result};

/// Arguments of one predictor evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PredictorRequest<'a> {
    pub y_t: &'a [f64],
    pub mel: &'a MelSpectrogram,
    /// `sqrt(ᾱ_t)` in `(0, 1]`.
    pub noise_level: f64,
}

impl PredictorRequest<'_> {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_level > 0.0 && self.noise_level <= 1.0) {
            return Err(Error::invalid(format!("noise level {} outside (0, 1]", self.noise_level)));
        }
        if self.y_t.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("y_t contains non-finite samples"));
        }
        Ok(())
    }
}

/// Source of noise estimates for the reverse process.
///
/// Implementations take `&mut self` so that process-backed predictors can
/// hold one in-flight request at a time; run parallel generations with one
/// predictor per generation.
pub trait NoisePredictor {
    fn predict(&mut self, request: &PredictorRequest<'_>) -> Result<Vec<f64>>;
}

impl<P: NoisePredictor + ?Sized> NoisePredictor for Box<P> {
    fn predict(&mut self, request: &PredictorRequest<'_>) -> Result<Vec<f64>> {
        (**self).predict(request)
    }
}

/// Checks the output contract of a predictor.
pub(crate) fn check_output(request: &PredictorRequest<'_>, eps: &[f64]) -> Result<()> {
    if eps.len() != request.y_t.len() {
        return Err(Error::ContractViolation(format!(
            "predictor returned {} samples for a {}-sample request",
            eps.len(),
            request.y_t.len()
        )));
    }
    if eps.iter().any(|v| !v.is_finite()) {
        return Err(Error::ContractViolation("predictor returned non-finite values".into()));
    }
    Ok(())
}
