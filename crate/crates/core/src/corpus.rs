//! Deterministic synthetic speech-like utterances for tests and benchmarks.
//!
//! Each utterance is a sequence of syllables: a glottal-like harmonic source
//! with a wandering pitch, shaped by three vowel formants, preceded by an
//! optional fricative noise burst, with short pauses between syllables.
//! The result has the harmonic structure, spectral envelope and temporal
//! modulation that make phase retrieval non-trivial, without shipping audio.

use std::f64::consts::TAU;

use rand::Rng;

use crate::rng::{self, streams};

/// Formant centre frequencies (Hz) of a few vowels.
const VOWELS: [[f64; 3]; 5] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
    [300.0, 870.0, 2240.0],
];
const FORMANT_GAINS: [f64; 3] = [1.0, 0.5, 0.25];
const FORMANT_BANDWIDTHS: [f64; 3] = [90.0, 110.0, 160.0];

/// Peak amplitude of generated utterances.
pub const PEAK: f64 = 0.5;

fn envelope(f: f64, formants: &[f64; 3]) -> f64 {
    formants
        .iter()
        .zip(FORMANT_GAINS)
        .zip(FORMANT_BANDWIDTHS)
        .map(|((&fc, g), bw)| g / (1.0 + ((f - fc) / bw).powi(2)))
        .sum::<f64>()
        + 0.01
}

/// A `seconds`-long utterance at `sample_rate`, fully determined by `seed`.
pub fn synthetic_utterance(seed: u64, sample_rate: u32, seconds: f64) -> Vec<f64> {
    let sr = sample_rate as f64;
    let n = (seconds * sr).round() as usize;
    let mut rng = rng::stream(seed, streams::CORPUS);
    let mut out = vec![0.0; n];

    let base_f0 = rng.gen_range(95.0..230.0);
    let mut start = (rng.gen_range(0.02..0.08) * sr) as usize;
    let mut phase = 0.0;
    while start < n {
        let len = ((rng.gen_range(0.12..0.28)) * sr) as usize;
        let end = (start + len).min(n);
        let formants = VOWELS[rng.gen_range(0..VOWELS.len())];
        let glide = rng.gen_range(-0.25..0.25);
        let vibrato_rate = rng.gen_range(3.0..7.0);
        let loudness = rng.gen_range(0.5..1.0);

        if rng.gen_bool(0.5) {
            let burst = ((rng.gen_range(0.03..0.07)) * sr) as usize;
            let noise_gain = rng.gen_range(0.05..0.15);
            let mut prev = 0.0;
            for i in start.saturating_sub(burst)..start {
                let white: f64 = rng.gen_range(-1.0..1.0);
                let pos = (i + burst - start) as f64 / burst as f64;
                out[i] += noise_gain * (white - prev) * (std::f64::consts::PI * pos).sin();
                prev = white;
            }
        }

        let seg = (end - start) as f64;
        for (k, sample) in out[start..end].iter_mut().enumerate() {
            let pos = k as f64 / seg;
            let time = k as f64 / sr;
            let f0 = base_f0 * (1.0 + glide * pos) * (1.0 + 0.03 * (TAU * vibrato_rate * time).sin());
            phase = (phase + TAU * f0 / sr) % TAU;
            let mut v = 0.0;
            let mut h = 1;
            while (h as f64) * f0 < 0.45 * sr {
                let f = h as f64 * f0;
                v += envelope(f, &formants) / (h as f64).sqrt() * (h as f64 * phase).sin();
                h += 1;
            }
            let amp = (std::f64::consts::PI * pos).sin().powf(0.6);
            *sample += loudness * amp * v;
        }
        start = end + (rng.gen_range(0.03..0.12) * sr) as usize;
    }

    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v *= PEAK / peak);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        let a = synthetic_utterance(1, 22_050, 1.0);
        let b = synthetic_utterance(1, 22_050, 1.0);
        let c = synthetic_utterance(2, 22_050, 1.0);
        assert_eq!(a.len(), 22_050);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn normalized_and_finite() {
        let x = synthetic_utterance(5, 22_050, 1.0);
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - PEAK).abs() < 1e-12);
        assert!(x.iter().all(|v| v.is_finite()));
        let energy: f64 = x.iter().map(|v| v * v).sum();
        assert!(energy > 100.0 * 1e-3);
    }
}
