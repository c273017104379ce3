//! Seeded random streams.
//!
//! Every stochastic quantity in the engine (initial noise, per-step noise,
//! random GLA phase, degraded-predictor perturbations) is drawn from a
//! ChaCha8 stream keyed by `(seed, stream)`. ChaCha is counter based, so a
//! given key always yields the same sequence regardless of platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream identifiers keep independent consumers of one seed apart.
pub mod streams {
    pub const GENERATION: u64 = 1;
    pub const GLA_PHASE: u64 = 2;
    pub const CORPUS: u64 = 3;
    /// Degraded predictor streams are `PREDICTOR_BASE + step index`.
    pub const PREDICTOR_BASE: u64 = 1 << 32;
}

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fills `out` with standard normal draws using the Box-Muller transform.
pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut chunks = out.chunks_exact_mut(2);
    for pair in &mut chunks {
        let (a, b) = box_muller(rng);
        pair[0] = a;
        pair[1] = b;
    }
    if let [last] = chunks.into_remainder() {
        *last = box_muller(rng).0;
    }
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    fill_standard_normal(rng, &mut v);
    v
}

fn box_muller<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    // 1 - U maps [0, 1) onto (0, 1], keeping ln finite.
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Uniform angle on `[0, 2π)`.
pub fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    std::f64::consts::TAU * rng.gen::<f64>()
}
