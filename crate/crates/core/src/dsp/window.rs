use std::f64::consts::TAU;

use crate::{Error, Result};

/// Periodic Hann window, `w[k] = 0.5 (1 - cos(2πk / length))`.
pub fn make_hann_window(length: usize) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::invalid("window length must be at least 1"));
    }
    let n = length as f64;
    Ok((0..length)
        .map(|k| 0.5 * (1.0 - (TAU * k as f64 / n).cos()))
        .collect())
}
