//! Griffin-Lim phase retrieval.
//!
//! Both variants alternate the magnitude projection `M` (keep phase, impose
//! the target modulus) with the consistency projection `C = stft ∘ istft`:
//!
//! * classic: `c_{k+1} = C(M(c_k))`
//! * fast: `t_k = C(M(c_k))`, `c_{k+1} = t_k + α (t_k − t_{k−1})`, `t_{−1} = t_0`
//!
//! The emitted signal is `istft(M(c_K))`, so the output honors the target
//! magnitude as closely as one synthesis allows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{estimate_magnitude, ComplexSpectrogram, MagnitudeSpectrogram, MelFilterbank, MelSpectrogram, Stft, StftConfig};
use crate::rng::{self, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlaVariant {
    Classic,
    Fast,
}

/// Starting phase for the first magnitude projection.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseInit {
    /// Uniform angles on `[0, 2π)` from the given seed.
    Random(u64),
    Zero,
    Provided(ComplexSpectrogram),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlaConfig {
    pub iterations: usize,
    pub variant: GlaVariant,
    /// Only read by [`GlaVariant::Fast`].
    pub momentum: f64,
    pub phase_init: PhaseInit,
}

impl Default for GlaConfig {
    /// Fast GLA, 32 iterations, momentum 0.99, random phase from seed 0.
    fn default() -> Self {
        Self { iterations: 32, variant: GlaVariant::Fast, momentum: 0.99, phase_init: PhaseInit::Random(0) }
    }
}

impl GlaConfig {
    pub fn classic(iterations: usize) -> Self {
        Self { iterations, variant: GlaVariant::Classic, ..Self::default() }
    }

    pub fn with_init(mut self, phase_init: PhaseInit) -> Self {
        self.phase_init = phase_init;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.variant == GlaVariant::Fast && !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("fast GLA momentum must lie in [0, 1), got {}", self.momentum)));
        }
        Ok(())
    }
}

/// Replaces every modulus with the target, keeping the phase. Zero entries
/// take angle 0.
pub fn project_magnitude(spec: &ComplexSpectrogram, target: &MagnitudeSpectrogram) -> Result<ComplexSpectrogram> {
    check_dims(spec, target)?;
    let mut out = spec.clone();
    project_magnitude_in_place(&mut out, target);
    Ok(out)
}

fn project_magnitude_in_place(spec: &mut ComplexSpectrogram, target: &MagnitudeSpectrogram) {
    for (c, &m) in spec.data_mut().iter_mut().zip(target.data()) {
        let norm = c.norm();
        *c = if norm > 0.0 { *c * (m / norm) } else { Complex64::new(m, 0.0) };
    }
}

fn check_dims(spec: &ComplexSpectrogram, target: &MagnitudeSpectrogram) -> Result<()> {
    if spec.frames() != target.frames() || spec.bins() != target.bins() {
        return Err(Error::invalid(format!(
            "spectrogram is {}×{}, target magnitude is {}×{}",
            spec.frames(),
            spec.bins(),
            target.frames(),
            target.bins()
        )));
    }
    Ok(())
}

/// `stft(istft(spec))` for a signal of `length` samples.
pub fn project_consistency(spec: &ComplexSpectrogram, config: &StftConfig, length: usize) -> Result<ComplexSpectrogram> {
    Stft::new(*config)?.project(spec, length)
}

/// Griffin-Lim reconstruction of a `length`-sample signal.
pub fn griffin_lim(
    target: &MagnitudeSpectrogram,
    stft_config: &StftConfig,
    gla_config: &GlaConfig,
    length: usize,
) -> Result<Vec<f64>> {
    let plan = Stft::new(*stft_config)?;
    run(target, &plan, gla_config, length, None)
}

/// Like [`griffin_lim`], also returning the spectral convergence
/// `‖|t_k| − target‖_F / ‖target‖_F` of every consistent iterate `t_k`.
pub fn griffin_lim_traced(
    target: &MagnitudeSpectrogram,
    stft_config: &StftConfig,
    gla_config: &GlaConfig,
    length: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let plan = Stft::new(*stft_config)?;
    let mut errors = Vec::with_capacity(gla_config.iterations);
    let signal = run(target, &plan, gla_config, length, Some(&mut errors))?;
    Ok((signal, errors))
}

/// Griffin-Lim with a pre-planned transform.
pub fn griffin_lim_with(plan: &Stft, target: &MagnitudeSpectrogram, gla_config: &GlaConfig, length: usize) -> Result<Vec<f64>> {
    run(target, plan, gla_config, length, None)
}

fn run(
    target: &MagnitudeSpectrogram,
    plan: &Stft,
    gla: &GlaConfig,
    length: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<Vec<f64>> {
    gla.validate()?;
    if let Some(v) = target.data().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::invalid(format!("target magnitude must be finite and non-negative, found {v}")));
    }
    let frames = plan.config().num_frames(length)?;
    if target.frames() != frames || target.bins() != plan.config().bins() {
        return Err(Error::invalid(format!(
            "target is {}×{}, a {length}-sample signal gives {frames}×{}",
            target.frames(),
            target.bins(),
            plan.config().bins()
        )));
    }

    let mut current = initial_spectrogram(target, &gla.phase_init)?;
    let target_norm = target.frobenius_norm();
    let momentum = match gla.variant {
        GlaVariant::Classic => 0.0,
        GlaVariant::Fast => gla.momentum,
    };
    let mut previous: Option<ComplexSpectrogram> = None;

    for _ in 0..gla.iterations {
        project_magnitude_in_place(&mut current, target);
        let consistent = plan.forward(&plan.inverse(&current, length)?)?;
        if let Some(errors) = trace.as_deref_mut() {
            errors.push(convergence(&consistent, target, target_norm));
        }
        let prev = previous.as_ref().unwrap_or(&consistent);
        let mut next = consistent.clone();
        if momentum != 0.0 {
            for ((n, t), p) in next.data_mut().iter_mut().zip(consistent.data()).zip(prev.data()) {
                *n = *t + (*t - *p) * momentum;
            }
        }
        previous = Some(consistent);
        current = next;
    }

    project_magnitude_in_place(&mut current, target);
    plan.inverse(&current, length)
}

fn convergence(spec: &ComplexSpectrogram, target: &MagnitudeSpectrogram, target_norm: f64) -> f64 {
    let num: f64 = spec
        .data()
        .iter()
        .zip(target.data())
        .map(|(c, m)| (c.norm() - m).powi(2))
        .sum::<f64>()
        .sqrt();
    if target_norm > 0.0 { num / target_norm } else { num }
}

fn initial_spectrogram(target: &MagnitudeSpectrogram, init: &PhaseInit) -> Result<ComplexSpectrogram> {
    let (frames, bins) = (target.frames(), target.bins());
    let data = match init {
        PhaseInit::Zero => target.data().iter().map(|&m| Complex64::new(m, 0.0)).collect(),
        PhaseInit::Random(seed) => {
            let mut rng = rng::stream(*seed, streams::GLA_PHASE);
            target
                .data()
                .iter()
                .map(|&m| Complex64::from_polar(m, rng::uniform_angle(&mut rng)))
                .collect()
        }
        PhaseInit::Provided(spec) => {
            if spec.frames() != frames || spec.bins() != bins {
                return Err(Error::invalid(format!(
                    "provided phase is {}×{}, target is {frames}×{bins}",
                    spec.frames(),
                    spec.bins()
                )));
            }
            spec.data().to_vec()
        }
    };
    Ok(ComplexSpectrogram::from_parts_unchecked(frames, bins, data))
}

/// Mel → waveform: pseudo-inverse magnitude estimate followed by Griffin-Lim
/// from a random phase drawn with `seed`. The `phase_init` of `gla_config`
/// is replaced by `Random(seed)`.
pub fn reconstruct_from_mel(
    mel: &MelSpectrogram,
    fb: &MelFilterbank,
    stft_config: &StftConfig,
    gla_config: &GlaConfig,
    seed: u64,
    length: usize,
) -> Result<Vec<f64>> {
    let plan = Stft::new(*stft_config)?;
    reconstruct_from_mel_with(&plan, mel, fb, gla_config, seed, length)
}

pub fn reconstruct_from_mel_with(
    plan: &Stft,
    mel: &MelSpectrogram,
    fb: &MelFilterbank,
    gla_config: &GlaConfig,
    seed: u64,
    length: usize,
) -> Result<Vec<f64>> {
    let magnitude = estimate_magnitude(mel, fb)?;
    let gla = GlaConfig { phase_init: PhaseInit::Random(seed), ..gla_config.clone() };
    run(&magnitude, plan, &gla, length, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{apply_mel, stft, MelConfig};
    use crate::rng;

    fn small_config() -> StftConfig {
        StftConfig { n_fft: 256, win_length: 160, hop_length: 40, sample_rate: 8_000, centered: true }
    }

    fn rel_rms(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn magnitude_projection_examples() {
        let spec = ComplexSpectrogram::new(1, 3, vec![c(3.0, 4.0), c(0.0, 0.0), c(-1.0, 0.5)]).unwrap();
        let target = MagnitudeSpectrogram::new(1, 3, vec![10.0, 2.0, c(-1.0, 0.5).norm()]).unwrap();
        let out = project_magnitude(&spec, &target).unwrap();
        assert!((out.data()[0] - c(6.0, 8.0)).norm() < 1e-12);
        assert_eq!(out.data()[1], c(2.0, 0.0));
        assert!((out.data()[2] - spec.data()[2]).norm() < 1e-12);
        let wrong = MagnitudeSpectrogram::zeros(2, 3);
        assert!(project_magnitude(&spec, &wrong).is_err());
    }

    #[test]
    fn magnitude_projection_hits_target() {
        let mut r = rng::stream(11, 0);
        let n = 500;
        let re = rng::standard_normal_vec(&mut r, n);
        let im = rng::standard_normal_vec(&mut r, n);
        let mags: Vec<f64> = rng::standard_normal_vec(&mut r, n).iter().map(|v| v.abs()).collect();
        let spec = ComplexSpectrogram::new(1, n, re.iter().zip(&im).map(|(a, b)| c(*a, *b)).collect()).unwrap();
        let target = MagnitudeSpectrogram::new(1, n, mags.clone()).unwrap();
        let out = project_magnitude(&spec, &target).unwrap();
        for (o, m) in out.data().iter().zip(&mags) {
            assert!((o.norm() - m).abs() <= 4.0 * f64::EPSILON * m.max(1.0));
        }
    }

    #[test]
    fn consistency_projection_fixed_point_and_idempotent() {
        let cfg = small_config();
        let x = rng::standard_normal_vec(&mut rng::stream(2, 0), 1_000);
        let s = stft(&x, &cfg).unwrap();
        let p = project_consistency(&s, &cfg, x.len()).unwrap();
        assert!(p.relative_distance(&s) < 1e-9);

        let zero = ComplexSpectrogram::zeros(s.frames(), s.bins());
        let pz = project_consistency(&zero, &cfg, x.len()).unwrap();
        assert!(pz.data().iter().all(|v| v.norm() == 0.0));

        let mut r = rng::stream(3, 0);
        let data: Vec<Complex64> = (0..s.frames() * s.bins())
            .map(|_| {
                let v = rng::standard_normal_vec(&mut r, 2);
                c(v[0], v[1])
            })
            .collect();
        let y = ComplexSpectrogram::new(s.frames(), s.bins(), data).unwrap();
        let once = project_consistency(&y, &cfg, x.len()).unwrap();
        let twice = project_consistency(&once, &cfg, x.len()).unwrap();
        assert!(twice.relative_distance(&once) < 1e-9);
        // non-expansive
        assert!(once.energy(cfg.n_fft) <= y.energy(cfg.n_fft) * (1.0 + 1e-12));
    }

    #[test]
    fn consistent_start_is_a_fixed_point() {
        let cfg = small_config();
        let x = rng::standard_normal_vec(&mut rng::stream(4, 0), 1_200);
        let s = stft(&x, &cfg).unwrap();
        for variant in [GlaVariant::Classic, GlaVariant::Fast] {
            for iterations in [0, 1, 7] {
                let gla = GlaConfig { iterations, variant, momentum: 0.99, phase_init: PhaseInit::Provided(s.clone()) };
                let y = griffin_lim(&s.magnitude(), &cfg, &gla, x.len()).unwrap();
                assert!(rel_rms(&y, &x) < 1e-6, "{variant:?} {iterations}");
            }
        }
    }

    #[test]
    fn zero_target_zero_signal() {
        let cfg = small_config();
        let frames = cfg.num_frames(800).unwrap();
        let y = griffin_lim(&MagnitudeSpectrogram::zeros(frames, cfg.bins()), &cfg, &GlaConfig::classic(0), 800).unwrap();
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_targets() {
        let cfg = small_config();
        let frames = cfg.num_frames(800).unwrap();
        let target = MagnitudeSpectrogram::zeros(frames + 1, cfg.bins());
        assert!(griffin_lim(&target, &cfg, &GlaConfig::default(), 800).is_err());
        let bad_momentum = GlaConfig { momentum: 1.0, ..GlaConfig::default() };
        let target = MagnitudeSpectrogram::zeros(frames, cfg.bins());
        assert!(matches!(griffin_lim(&target, &cfg, &bad_momentum, 800), Err(Error::Config(_))));
    }

    #[test]
    fn fast_with_zero_momentum_matches_classic() {
        let cfg = small_config();
        let x = rng::standard_normal_vec(&mut rng::stream(6, 0), 1_000);
        let target = stft(&x, &cfg).unwrap().magnitude();
        let classic = GlaConfig { phase_init: PhaseInit::Random(5), ..GlaConfig::classic(10) };
        let fast = GlaConfig { variant: GlaVariant::Fast, momentum: 0.0, ..classic.clone() };
        let (a, ea) = griffin_lim_traced(&target, &cfg, &classic, x.len()).unwrap();
        let (b, eb) = griffin_lim_traced(&target, &cfg, &fast, x.len()).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= 1e-12));
        assert_eq!(ea, eb);
    }

    #[test]
    fn classic_error_non_increasing() {
        let cfg = small_config();
        let fb = MelConfig { bands: 40, ..MelConfig::default() }.build(&cfg).unwrap();
        for seed in 0..10 {
            let x = rng::standard_normal_vec(&mut rng::stream(seed, 0), 1_000);
            let mel = apply_mel(&stft(&x, &cfg).unwrap().magnitude(), &fb).unwrap();
            let target = estimate_magnitude(&mel, &fb).unwrap();
            let gla = GlaConfig { phase_init: PhaseInit::Random(seed), ..GlaConfig::classic(32) };
            let (_, errors) = griffin_lim_traced(&target, &cfg, &gla, x.len()).unwrap();
            assert_eq!(errors.len(), 32);
            for w in errors.windows(2) {
                assert!(w[1] <= w[0] + 1e-7, "seed {seed}: {errors:?}");
            }
        }
    }

    #[test]
    fn reconstruction_deterministic_and_zero() {
        let cfg = small_config();
        let fb = MelConfig { bands: 40, ..MelConfig::default() }.build(&cfg).unwrap();
        let x = rng::standard_normal_vec(&mut rng::stream(8, 0), 1_000);
        let mel = apply_mel(&stft(&x, &cfg).unwrap().magnitude(), &fb).unwrap();
        let a = reconstruct_from_mel(&mel, &fb, &cfg, &GlaConfig::default(), 42, x.len()).unwrap();
        let b = reconstruct_from_mel(&mel, &fb, &cfg, &GlaConfig::default(), 42, x.len()).unwrap();
        assert_eq!(a, b);
        let c = reconstruct_from_mel(&mel, &fb, &cfg, &GlaConfig::default(), 43, x.len()).unwrap();
        assert_ne!(a, c);
        let z = reconstruct_from_mel(&MelSpectrogram::zeros(mel.frames(), 40), &fb, &cfg, &GlaConfig::default(), 1, x.len()).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
    }
}
