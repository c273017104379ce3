use super::schedule::NoiseSchedule;
use crate::dsp::{MagnitudeSpectrogram, Stft};
use crate::phase_retrieval::{griffin_lim_with, GlaConfig, PhaseInit};
use crate::{Error, Result};

fn check_len(what: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::invalid(format!("{what} has {} samples, expected {len}", v.len())));
    }
    Ok(())
}

/// `a·x + b·e + s·z`, skipping terms whose coefficient is exactly zero so
/// that e.g. `1·x + 0·e` reproduces `x` bit for bit (signed zeros included).
fn combine(a: f64, x: &[f64], b: f64, e: &[f64], s: f64, z: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().map(|v| a * v).collect();
    if b != 0.0 {
        out.iter_mut().zip(e).for_each(|(o, v)| *o += b * v);
    }
    if s != 0.0 {
        out.iter_mut().zip(z).for_each(|(o, v)| *o += s * v);
    }
    out
}

/// `y_t = sqrt(ᾱ_t)·y0 + sqrt(1 − ᾱ_t)·ε`, for `0 ≤ t ≤ T`.
pub fn forward_diffuse(y0: &[f64], t: usize, eps: &[f64], schedule: &NoiseSchedule) -> Result<Vec<f64>> {
    if t > schedule.steps() {
        return Err(Error::invalid(format!("step {t} outside 0..={}", schedule.steps())));
    }
    check_len("noise", eps, y0.len())?;
    let ab = schedule.alpha_bar(t);
    Ok(combine(ab.sqrt(), y0, (1.0 - ab).sqrt(), eps, 0.0, &[]))
}

/// Denoised estimate `(y_t − sqrt(1 − ᾱ_t)·ε̂) / sqrt(ᾱ_t)`.
pub fn predict_y0(y_t: &[f64], eps_hat: &[f64], t: usize, schedule: &NoiseSchedule) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    check_len("predicted noise", eps_hat, y_t.len())?;
    let ab = schedule.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(y_t.iter().zip(eps_hat).map(|(y, e)| (y - b * e) / a).collect())
}

/// Ancestral DDPM update
/// `(y_t − (1 − α_t)/sqrt(1 − ᾱ_t)·ε̂) / sqrt(α_t) + σ_t·z` with the DDPM `σ_t`.
pub fn ddpm_step(y_t: &[f64], eps_hat: &[f64], t: usize, schedule: &NoiseSchedule, z: &[f64]) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    check_len("predicted noise", eps_hat, y_t.len())?;
    check_len("step noise", z, y_t.len())?;
    let alpha = schedule.alpha(t);
    let coef = (1.0 - alpha) / (1.0 - schedule.alpha_bar(t)).sqrt();
    let scale = 1.0 / alpha.sqrt();
    let sigma = schedule.sigma_ddpm(t);
    let mut out: Vec<f64> = y_t.iter().zip(eps_hat).map(|(y, e)| scale * (y - coef * e)).collect();
    if sigma != 0.0 {
        out.iter_mut().zip(z).for_each(|(o, v)| *o += sigma * v);
    }
    Ok(out)
}

fn direction_coefficient(schedule: &NoiseSchedule, t: usize, sigma_t: f64) -> Result<f64> {
    if !(sigma_t.is_finite() && sigma_t >= 0.0) {
        return Err(Error::invalid(format!("sigma must be finite and non-negative, got {sigma_t}")));
    }
    let radicand = 1.0 - schedule.alpha_bar(t - 1) - sigma_t * sigma_t;
    if radicand < -4.0 * f64::EPSILON {
        return Err(Error::invalid(format!(
            "sigma_{t}² = {:e} exceeds 1 − ᾱ_{} = {:e}",
            sigma_t * sigma_t,
            t - 1,
            1.0 - schedule.alpha_bar(t - 1)
        )));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// DDIM-decomposed update:
/// `sqrt(ᾱ_{t−1})·ŷ0 + sqrt(1 − ᾱ_{t−1} − σ_t²)·ε̂ + σ_t·z`, with `ŷ0` from
/// [`predict_y0`].
pub fn ddim_step(
    y_t: &[f64],
    eps_hat: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    sigma_t: f64,
    z: &[f64],
) -> Result<Vec<f64>> {
    let y0 = predict_y0(y_t, eps_hat, t, schedule)?;
    check_len("step noise", z, y_t.len())?;
    let dir = direction_coefficient(schedule, t, sigma_t)?;
    Ok(combine(schedule.alpha_bar(t - 1).sqrt(), &y0, dir, eps_hat, sigma_t, z))
}

/// [`ddim_step`] with the predicted `y0` replaced by the reconstruction `x̃`.
///
/// `ε̂` is the predictor output for the uncorrected `y_t`; it is not
/// re-evaluated after the substitution.
pub fn corrected_step(
    y_t: &[f64],
    eps_hat: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    sigma_t: f64,
    z: &[f64],
    x_tilde: &[f64],
) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    check_len("predicted noise", eps_hat, y_t.len())?;
    check_len("step noise", z, y_t.len())?;
    check_len("reconstruction", x_tilde, y_t.len())?;
    let dir = direction_coefficient(schedule, t, sigma_t)?;
    Ok(combine(schedule.alpha_bar(t - 1).sqrt(), x_tilde, dir, eps_hat, sigma_t, z))
}

/// Re-implementation of the per-step GLA update used as a baseline: run
/// Griffin-Lim on `magnitude` starting from the phase of the predicted
/// `y0`, then re-noise the result to level `t − 1` with `z`, replacing the
/// whole iterate.
///
/// `magnitude` is the pseudo-inverse estimate of the conditioning mel; it is
/// the same for every step so callers compute it once. The `phase_init` of
/// `gla` is overridden.
#[allow(clippy::too_many_arguments)]
pub fn per_step_gla_baseline_step(
    y_t: &[f64],
    eps_hat: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    magnitude: &MagnitudeSpectrogram,
    plan: &Stft,
    gla: &GlaConfig,
    z: &[f64],
) -> Result<Vec<f64>> {
    let y0 = predict_y0(y_t, eps_hat, t, schedule)?;
    check_len("step noise", z, y_t.len())?;
    let phase = plan.forward(&y0)?;
    let gla = gla.clone().with_init(PhaseInit::Provided(phase));
    let x_hat = griffin_lim_with(plan, magnitude, &gla, y_t.len())?;
    forward_diffuse(&x_hat, t - 1, z, schedule)
}
