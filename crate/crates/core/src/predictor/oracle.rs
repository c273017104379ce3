use super::{check_output, NoisePredictor, PredictorRequest};
use crate::diffusion::NoiseSchedule;
use crate::rng::{self, streams};
use crate::{Error, Result};

/// Tolerance when resolving `sqrt(ᾱ_t)` back to a step index.
pub const NOISE_LEVEL_TOLERANCE: f64 = 1e-9;

fn resolve_step(noise_level: f64, schedule: &NoiseSchedule) -> Result<usize> {
    if noise_level >= 1.0 {
        return Err(Error::invalid("oracle noise is undefined at ᾱ = 1"));
    }
    schedule.step_for_noise_level(noise_level, NOISE_LEVEL_TOLERANCE).ok_or_else(|| {
        Error::invalid(format!("noise level {noise_level} matches no step of the schedule"))
    })
}

/// Exact noise `(y_t − sqrt(ᾱ_t)·y0) / sqrt(1 − ᾱ_t)` given the clean signal.
pub fn oracle_predict(req: &PredictorRequest<'_>, y0_ref: &[f64], schedule: &NoiseSchedule) -> Result<Vec<f64>> {
    req.validate()?;
    if y0_ref.len() != req.y_t.len() {
        return Err(Error::invalid(format!(
            "reference has {} samples, y_t has {}",
            y0_ref.len(),
            req.y_t.len()
        )));
    }
    let t = resolve_step(req.noise_level, schedule)?;
    let ab = schedule.alpha_bar(t);
    let (a, s) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(req.y_t.iter().zip(y0_ref).map(|(y, x)| (y - a * x) / s).collect())
}

/// Oracle noise plus white Gaussian error at `snr_db` relative to the
/// oracle's mean power. `snr_db = +∞` disables the error. The perturbation
/// is seeded by `(seed, step)`, so repeated calls are reproducible.
pub fn degraded_oracle_predict(
    req: &PredictorRequest<'_>,
    y0_ref: &[f64],
    schedule: &NoiseSchedule,
    snr_db: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("snr_db must be finite or +inf, got {snr_db}")));
    }
    let mut eps = oracle_predict(req, y0_ref, schedule)?;
    if snr_db == f64::INFINITY || eps.is_empty() {
        return Ok(eps);
    }
    let power = eps.iter().map(|v| v * v).sum::<f64>() / eps.len() as f64;
    if power == 0.0 {
        return Ok(eps);
    }
    let scale = (power * 10f64.powf(-snr_db / 10.0)).sqrt();
    let t = resolve_step(req.noise_level, schedule)?;
    let mut rng = rng::stream(seed, streams::PREDICTOR_BASE + t as u64);
    let noise = rng::standard_normal_vec(&mut rng, eps.len());
    eps.iter_mut().zip(noise).for_each(|(e, n)| *e += scale * n);
    Ok(eps)
}

/// In-process oracle holding its reference signal.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    y0_ref: Vec<f64>,
    schedule: NoiseSchedule,
}

impl OraclePredictor {
    pub fn new(y0_ref: Vec<f64>, schedule: NoiseSchedule) -> Self {
        Self { y0_ref, schedule }
    }
}

impl NoisePredictor for OraclePredictor {
    fn predict(&mut self, request: &PredictorRequest<'_>) -> Result<Vec<f64>> {
        let eps = oracle_predict(request, &self.y0_ref, &self.schedule)?;
        check_output(request, &eps)?;
        Ok(eps)
    }
}

/// Oracle with simulated estimation error; see [`degraded_oracle_predict`].
#[derive(Debug, Clone)]
pub struct DegradedOraclePredictor {
    y0_ref: Vec<f64>,
    schedule: NoiseSchedule,
    snr_db: f64,
    seed: u64,
}

impl DegradedOraclePredictor {
    pub fn new(y0_ref: Vec<f64>, schedule: NoiseSchedule, snr_db: f64, seed: u64) -> Self {
        Self { y0_ref, schedule, snr_db, seed }
    }
}

impl NoisePredictor for DegradedOraclePredictor {
    fn predict(&mut self, request: &PredictorRequest<'_>) -> Result<Vec<f64>> {
        let eps = degraded_oracle_predict(request, &self.y0_ref, &self.schedule, self.snr_db, self.seed)?;
        check_output(request, &eps)?;
        Ok(eps)
    }
}

/// Always predicts zero noise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPredictor;

impl NoisePredictor for ZeroPredictor {
    fn predict(&mut self, request: &PredictorRequest<'_>) -> Result<Vec<f64>> {
        request.validate()?;
        Ok(vec![0.0; request.y_t.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::forward_diffuse;
    use crate::dsp::MelSpectrogram;

    fn mel() -> MelSpectrogram {
        MelSpectrogram::zeros(1, 1)
    }

    #[test]
    fn scalar_example() {
        let s = NoiseSchedule::from_betas(&[0.36]).unwrap();
        let mel = mel();
        let req = PredictorRequest { y_t: &[2.0], mel: &mel, noise_level: 0.8 };
        let eps = oracle_predict(&req, &[1.0], &s).unwrap();
        assert!((eps[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn inverts_forward_process() {
        let s = NoiseSchedule::geometric_six();
        let mut r = rng::stream(1, 0);
        let y0 = rng::standard_normal_vec(&mut r, 100);
        let eps = rng::standard_normal_vec(&mut r, 100);
        let mel = mel();
        for t in 1..=6 {
            let yt = forward_diffuse(&y0, t, &eps, &s).unwrap();
            let req = PredictorRequest { y_t: &yt, mel: &mel, noise_level: s.noise_level(t) };
            let got = oracle_predict(&req, &y0, &s).unwrap();
            let err: f64 = got.iter().zip(&eps).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = eps.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(err / norm < 1e-10, "t={t}");

            let clean: Vec<f64> = y0.iter().map(|v| v * s.noise_level(t)).collect();
            let req = PredictorRequest { y_t: &clean, mel: &mel, noise_level: s.noise_level(t) };
            assert!(oracle_predict(&req, &y0, &s).unwrap().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn rejects_unknown_levels() {
        let s = NoiseSchedule::geometric_six();
        let mel = mel();
        let req = PredictorRequest { y_t: &[0.0], mel: &mel, noise_level: 1.0 };
        assert!(oracle_predict(&req, &[0.0], &s).is_err());
        let req = PredictorRequest { y_t: &[0.0], mel: &mel, noise_level: 0.5 };
        assert!(oracle_predict(&req, &[0.0], &s).is_err());
        let req = PredictorRequest { y_t: &[0.0], mel: &mel, noise_level: s.noise_level(2) };
        assert!(oracle_predict(&req, &[0.0, 1.0], &s).is_err());
    }

    #[test]
    fn degraded_infinite_snr_is_oracle() {
        let s = NoiseSchedule::geometric_six();
        let y0 = rng::standard_normal_vec(&mut rng::stream(2, 0), 64);
        let yt = rng::standard_normal_vec(&mut rng::stream(3, 0), 64);
        let mel = mel();
        let req = PredictorRequest { y_t: &yt, mel: &mel, noise_level: s.noise_level(3) };
        assert_eq!(
            degraded_oracle_predict(&req, &y0, &s, f64::INFINITY, 9).unwrap(),
            oracle_predict(&req, &y0, &s).unwrap()
        );
        let a = degraded_oracle_predict(&req, &y0, &s, 10.0, 9).unwrap();
        let b = degraded_oracle_predict(&req, &y0, &s, 10.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(degraded_oracle_predict(&req, &y0, &s, f64::NAN, 9).is_err());
    }

    #[test]
    fn degraded_power_ratio() {
        let s = NoiseSchedule::geometric_six();
        let n = 10_000;
        let y0 = rng::standard_normal_vec(&mut rng::stream(4, 0), n);
        let yt = rng::standard_normal_vec(&mut rng::stream(5, 0), n);
        let mel = mel();
        let req = PredictorRequest { y_t: &yt, mel: &mel, noise_level: s.noise_level(5) };
        let clean = oracle_predict(&req, &y0, &s).unwrap();
        let noisy = degraded_oracle_predict(&req, &y0, &s, 10.0, 1).unwrap();
        let p_clean: f64 = clean.iter().map(|v| v * v).sum();
        let p_err: f64 = clean.iter().zip(&noisy).map(|(a, b)| (a - b).powi(2)).sum();
        let ratio = p_err / p_clean;
        assert!((ratio - 0.1).abs() < 0.005, "ratio {ratio}");
    }

    #[test]
    fn degraded_zero_power_is_unperturbed() {
        let s = NoiseSchedule::geometric_six();
        let y0 = vec![1.0; 8];
        let yt: Vec<f64> = y0.iter().map(|v| v * s.noise_level(2)).collect();
        let mel = mel();
        let req = PredictorRequest { y_t: &yt, mel: &mel, noise_level: s.noise_level(2) };
        let eps = degraded_oracle_predict(&req, &y0, &s, 0.0, 1).unwrap();
        assert!(eps.iter().all(|v| v.abs() < 1e-12));
    }
}
