use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::schedule::{NoiseSchedule, SigmaMode};
use super::steps::{corrected_step, ddim_step, per_step_gla_baseline_step};
use crate::dsp::{estimate_magnitude, MagnitudeSpectrogram, MelFilterbank, MelSpectrogram, Stft, StftConfig};
use crate::phase_retrieval::{reconstruct_from_mel_with, GlaConfig};
use crate::predictor::{NoisePredictor, PredictorRequest};
use crate::rng::{self, streams};
use crate::{Error, Result};

/// Update rule used for steps `t > stage1_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Classical sampling throughout; `stage1_end` is ignored.
    Plain,
    /// Griffin-Lim on every stage-1 step, replacing the whole iterate.
    #[serde(alias = "baseline")]
    PerStepGlaBaseline,
    /// Predicted `y0` replaced by the one-shot reconstruction `x̃`.
    Corrected,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::PerStepGlaBaseline => "baseline",
            Variant::Corrected => "corrected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// 64-bit digest of each iterate.
    #[default]
    Hash,
    Full,
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub variant: Variant,
    pub sigma_mode: SigmaMode,
    /// Last step index handled by the classical rule; steps
    /// `T..stage1_end+1` use the variant's stage-1 rule.
    pub stage1_end: usize,
    pub seed: u64,
    pub gla: GlaConfig,
    pub stft: StftConfig,
    pub trace: TraceMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Corrected,
            sigma_mode: SigmaMode::Ddpm,
            stage1_end: 3,
            seed: 0,
            gla: GlaConfig::default(),
            stft: StftConfig::default(),
            trace: TraceMode::Hash,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Hash(u64),
    Full(Vec<f64>),
}

impl Snapshot {
    fn of(samples: &[f64], mode: TraceMode) -> Self {
        match mode {
            TraceMode::Hash => Snapshot::Hash(digest(samples)),
            TraceMode::Full => Snapshot::Full(samples.to_vec()),
        }
    }
}

fn digest(samples: &[f64]) -> u64 {
    let mut hasher = Sha256::new();
    for s in samples {
        hasher.update(s.to_le_bytes());
    }
    let out = hasher.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 is 32 bytes"))
}

/// One reverse step: `t` and the iterate `y_{t−1}` it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub snapshot: Snapshot,
    /// Nanoseconds since the generation started, taken after the step.
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationTrace {
    pub steps: Vec<StepRecord>,
    /// Time spent computing `x̃`, when the variant needed it.
    pub reconstruction_ns: Option<u64>,
    pub total_ns: u64,
}

enum StageOne<'a> {
    Plain,
    Corrected(&'a [f64]),
    Baseline(&'a MagnitudeSpectrogram),
}

fn check_inputs(mel: &MelSpectrogram, schedule: &NoiseSchedule, config: &SamplerConfig, length: usize) -> Result<()> {
    if config.stage1_end > schedule.steps() {
        return Err(Error::Config(format!(
            "stage-1 endpoint {} exceeds the {} schedule steps",
            config.stage1_end,
            schedule.steps()
        )));
    }
    let frames = config.stft.num_frames(length)?;
    if frames != mel.frames() {
        return Err(Error::invalid(format!(
            "{length} samples give {frames} frames but the mel has {}",
            mel.frames()
        )));
    }
    Ok(())
}

/// Reverse diffusion from seeded Gaussian noise to a `length`-sample
/// waveform conditioned on `mel`.
///
/// For the corrected variant `x̃` is reconstructed once, before the first
/// step, with Griffin-Lim seeded by `config.seed`. Noise is drawn from one
/// stream: `y_T` first, then one `z` per step.
pub fn generate(
    mel: &MelSpectrogram,
    fb: &MelFilterbank,
    predictor: &mut dyn NoisePredictor,
    schedule: &NoiseSchedule,
    config: &SamplerConfig,
    length: usize,
) -> Result<(Vec<f64>, GenerationTrace)> {
    check_inputs(mel, schedule, config, length)?;
    let start = Instant::now();
    let plan = Stft::new(config.stft)?;
    let needs_stage_one = config.stage1_end < schedule.steps();
    match config.variant {
        Variant::Corrected if needs_stage_one => {
            let x_tilde = reconstruct_from_mel_with(&plan, mel, fb, &config.gla, config.seed, length)?;
            let reconstruction_ns = start.elapsed().as_nanos() as u64;
            let (y, mut trace) = run(mel, predictor, schedule, config, length, &plan, StageOne::Corrected(&x_tilde), start)?;
            trace.reconstruction_ns = Some(reconstruction_ns);
            Ok((y, trace))
        }
        Variant::PerStepGlaBaseline if needs_stage_one => {
            let magnitude = estimate_magnitude(mel, fb)?;
            run(mel, predictor, schedule, config, length, &plan, StageOne::Baseline(&magnitude), start)
        }
        _ => run(mel, predictor, schedule, config, length, &plan, StageOne::Plain, start),
    }
}

/// Corrected generation with a caller-supplied `x̃` (e.g. an oracle
/// reconstruction). `config.variant` is ignored.
pub fn generate_with_estimate(
    mel: &MelSpectrogram,
    predictor: &mut dyn NoisePredictor,
    schedule: &NoiseSchedule,
    config: &SamplerConfig,
    x_tilde: &[f64],
) -> Result<(Vec<f64>, GenerationTrace)> {
    let length = x_tilde.len();
    check_inputs(mel, schedule, config, length)?;
    let start = Instant::now();
    let plan = Stft::new(config.stft)?;
    run(mel, predictor, schedule, config, length, &plan, StageOne::Corrected(x_tilde), start)
}

#[allow(clippy::too_many_arguments)]
fn run(
    mel: &MelSpectrogram,
    predictor: &mut dyn NoisePredictor,
    schedule: &NoiseSchedule,
    config: &SamplerConfig,
    length: usize,
    plan: &Stft,
    stage_one: StageOne<'_>,
    start: Instant,
) -> Result<(Vec<f64>, GenerationTrace)> {
    let mut noise = rng::stream(config.seed, streams::GENERATION);
    let mut y = rng::standard_normal_vec(&mut noise, length);
    let mut trace = GenerationTrace { steps: Vec::with_capacity(schedule.steps()), ..Default::default() };

    for t in (1..=schedule.steps()).rev() {
        let z = rng::standard_normal_vec(&mut noise, length);
        let request = PredictorRequest { y_t: &y, mel, noise_level: schedule.noise_level(t) };
        let eps = predictor.predict(&request)?;
        if eps.len() != length {
            return Err(Error::ContractViolation(format!(
                "predictor returned {} samples for a {length}-sample request",
                eps.len()
            )));
        }
        let sigma = schedule.sigma(t, config.sigma_mode);
        y = match (&stage_one, t > config.stage1_end) {
            (StageOne::Corrected(x_tilde), true) => corrected_step(&y, &eps, t, schedule, sigma, &z, x_tilde)?,
            (StageOne::Baseline(magnitude), true) => {
                per_step_gla_baseline_step(&y, &eps, t, schedule, magnitude, plan, &config.gla, &z)?
            }
            _ => ddim_step(&y, &eps, t, schedule, sigma, &z)?,
        };
        trace.steps.push(StepRecord {
            t,
            snapshot: Snapshot::of(&y, config.trace),
            elapsed_ns: start.elapsed().as_nanos() as u64,
        });
    }
    trace.total_ns = start.elapsed().as_nanos() as u64;
    Ok((y, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{apply_mel, stft, MelConfig};
    use crate::predictor::{OraclePredictor, ZeroPredictor};
    use crate::phase_retrieval::reconstruct_from_mel;

    struct Fixture {
        stft: StftConfig,
        fb: MelFilterbank,
        mel: MelSpectrogram,
        y0: Vec<f64>,
    }

    fn fixture() -> Fixture {
        let stft_cfg = StftConfig { n_fft: 256, win_length: 160, hop_length: 40, sample_rate: 8_000, centered: true };
        let fb = MelConfig { bands: 40, ..MelConfig::default() }.build(&stft_cfg).unwrap();
        let y0: Vec<f64> = (0..1_200).map(|n| 0.3 * (0.07 * n as f64).sin() + 0.1 * (0.31 * n as f64).sin()).collect();
        let mel = apply_mel(&stft(&y0, &stft_cfg).unwrap().magnitude(), &fb).unwrap();
        Fixture { stft: stft_cfg, fb, mel, y0 }
    }

    fn config(f: &Fixture, variant: Variant, stage1_end: usize) -> SamplerConfig {
        SamplerConfig {
            variant,
            stage1_end,
            seed: 17,
            stft: f.stft,
            gla: GlaConfig { iterations: 8, ..GlaConfig::default() },
            ..SamplerConfig::default()
        }
    }

    fn bits(v: &[f64]) -> Vec<u64> {
        v.iter().map(|x| x.to_bits()).collect()
    }

    #[test]
    fn oracle_collapse_ddim() {
        let f = fixture();
        let s = NoiseSchedule::geometric_six();
        let mut oracle = OraclePredictor::new(f.y0.clone(), s.clone());
        let cfg = SamplerConfig { sigma_mode: SigmaMode::DdimZero, ..config(&f, Variant::Plain, 3) };
        let (y, trace) = generate(&f.mel, &f.fb, &mut oracle, &s, &cfg, f.y0.len()).unwrap();
        let err: f64 = y.iter().zip(&f.y0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = f.y0.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err / norm < 1e-6, "{}", err / norm);
        assert_eq!(trace.steps.len(), 6);
        assert_eq!(trace.steps.iter().map(|r| r.t).collect::<Vec<_>>(), vec![6, 5, 4, 3, 2, 1]);
        assert!(trace.steps.windows(2).all(|w| w[0].elapsed_ns <= w[1].elapsed_ns));
    }

    #[test]
    fn endpoint_zero_returns_reconstruction() {
        let f = fixture();
        let s = NoiseSchedule::geometric_six();
        let cfg = config(&f, Variant::Corrected, 0);
        let (y, trace) = generate(&f.mel, &f.fb, &mut ZeroPredictor, &s, &cfg, f.y0.len()).unwrap();
        let x_tilde = reconstruct_from_mel(&f.mel, &f.fb, &f.stft, &cfg.gla, cfg.seed, f.y0.len()).unwrap();
        assert_eq!(bits(&y), bits(&x_tilde));
        assert!(trace.reconstruction_ns.is_some());
    }

    #[test]
    fn endpoint_t_matches_plain() {
        let f = fixture();
        let s = NoiseSchedule::geometric_six();
        for mode in [SigmaMode::Ddpm, SigmaMode::DdimZero] {
            let mut p1 = OraclePredictor::new(f.y0.clone(), s.clone());
            let mut p2 = p1.clone();
            let corrected = SamplerConfig { sigma_mode: mode, ..config(&f, Variant::Corrected, 6) };
            let plain = SamplerConfig { sigma_mode: mode, ..config(&f, Variant::Plain, 2) };
            let (a, ta) = generate(&f.mel, &f.fb, &mut p1, &s, &corrected, f.y0.len()).unwrap();
            let (b, tb) = generate(&f.mel, &f.fb, &mut p2, &s, &plain, f.y0.len()).unwrap();
            assert_eq!(bits(&a), bits(&b));
            let snaps = |t: &GenerationTrace| t.steps.iter().map(|r| r.snapshot.clone()).collect::<Vec<_>>();
            assert_eq!(snaps(&ta), snaps(&tb));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let f = fixture();
        let s = NoiseSchedule::geometric_six();
        for variant in [Variant::Plain, Variant::Corrected, Variant::PerStepGlaBaseline] {
            let cfg = SamplerConfig { trace: TraceMode::Full, ..config(&f, variant, 3) };
            let (a, ta) = generate(&f.mel, &f.fb, &mut ZeroPredictor, &s, &cfg, f.y0.len()).unwrap();
            let (b, tb) = generate(&f.mel, &f.fb, &mut ZeroPredictor, &s, &cfg, f.y0.len()).unwrap();
            assert_eq!(bits(&a), bits(&b));
            assert_eq!(ta.steps.len(), 6);
            for (x, y) in ta.steps.iter().zip(&tb.steps) {
                assert_eq!(x.snapshot, y.snapshot);
            }
            let other = SamplerConfig { seed: 18, ..cfg };
            let (c, _) = generate(&f.mel, &f.fb, &mut ZeroPredictor, &s, &other, f.y0.len()).unwrap();
            assert_ne!(bits(&a), bits(&c));
        }
    }

    #[test]
    fn estimate_entry_point_matches_generate() {
        let f = fixture();
        let s = NoiseSchedule::geometric_six();
        let cfg = config(&f, Variant::Corrected, 2);
        let x_tilde = reconstruct_from_mel(&f.mel, &f.fb, &f.stft, &cfg.gla, cfg.seed, f.y0.len()).unwrap();
        let mut p1 = OraclePredictor::new(f.y0.clone(), s.clone());
        let mut p2 = p1.clone();
        let (a, _) = generate(&f.mel, &f.fb, &mut p1, &s, &cfg, f.y0.len()).unwrap();
        let (b, _) = generate_with_estimate(&f.mel, &mut p2, &s, &cfg, &x_tilde).unwrap();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = fixture();
        let s = NoiseSchedule::geometric_six();
        let cfg = config(&f, Variant::Corrected, 7);
        assert!(matches!(generate(&f.mel, &f.fb, &mut ZeroPredictor, &s, &cfg, f.y0.len()), Err(Error::Config(_))));
        let cfg = config(&f, Variant::Corrected, 3);
        assert!(generate(&f.mel, &f.fb, &mut ZeroPredictor, &s, &cfg, f.y0.len() + 400).is_err());
    }

    #[test]
    fn predictor_failure_aborts() {
        struct Failing(usize);
        impl NoisePredictor for Failing {
            fn predict(&mut self, r: &PredictorRequest<'_>) -> Result<Vec<f64>> {
                self.0 += 1;
                if self.0 == 3 {
                    Err(Error::PredictorUnavailable("gone".into()))
                } else {
                    Ok(vec![0.0; r.y_t.len()])
                }
            }
        }
        let f = fixture();
        let s = NoiseSchedule::geometric_six();
        let err = generate(&f.mel, &f.fb, &mut Failing(0), &s, &config(&f, Variant::Plain, 3), f.y0.len()).unwrap_err();
        assert!(err.is_predictor_failure());

        struct Short;
        impl NoisePredictor for Short {
            fn predict(&mut self, _: &PredictorRequest<'_>) -> Result<Vec<f64>> {
                Ok(vec![0.0; 3])
            }
        }
        let err = generate(&f.mel, &f.fb, &mut Short, &s, &config(&f, Variant::Plain, 3), f.y0.len()).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
    }

    #[test]
    fn predictor_sees_noise_levels() {
        struct Levels(Vec<f64>);
        impl NoisePredictor for Levels {
            fn predict(&mut self, r: &PredictorRequest<'_>) -> Result<Vec<f64>> {
                self.0.push(r.noise_level);
                Ok(vec![0.0; r.y_t.len()])
            }
        }
        let f = fixture();
        let s = NoiseSchedule::geometric_six();
        let mut p = Levels(Vec::new());
        generate(&f.mel, &f.fb, &mut p, &s, &config(&f, Variant::Plain, 3), f.y0.len()).unwrap();
        let expected: Vec<f64> = (1..=6).rev().map(|t| s.alpha_bar(t).sqrt()).collect();
        assert_eq!(p.0, expected);
    }
}
