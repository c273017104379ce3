use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the per-step noise scale `σ_t` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// `σ_t = sqrt((1 − ᾱ_{t−1}) / (1 − ᾱ_t) · β_t)`.
    Ddpm,
    /// `σ_t = 0`, deterministic sampling.
    #[serde(alias = "ddim0")]
    DdimZero,
}

/// `β_t`, `α_t`, `ᾱ_t` and DDPM `σ_t` for `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    /// Index 0 holds `ᾱ_0 = 1`.
    alpha_bars: Vec<f64>,
    /// Index 0 is unused.
    sigmas_ddpm: Vec<f64>,
}

impl NoiseSchedule {
    pub fn from_betas(betas: &[f64]) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::invalid("a schedule needs at least one step"));
        }
        if let Some((i, b)) = betas.iter().enumerate().find(|(_, b)| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::invalid(format!("beta_{} = {b} is outside (0, 1)", i + 1)));
        }
        let mut alpha_bars = Vec::with_capacity(betas.len() + 1);
        alpha_bars.push(1.0);
        for b in betas {
            let prev = *alpha_bars.last().unwrap();
            alpha_bars.push(prev * (1.0 - b));
        }
        let mut sigmas_ddpm = vec![0.0; betas.len() + 1];
        for t in 1..=betas.len() {
            let ratio = (1.0 - alpha_bars[t - 1]) / (1.0 - alpha_bars[t]);
            sigmas_ddpm[t] = (ratio * betas[t - 1]).sqrt();
        }
        if alpha_bars.windows(2).any(|w| !(w[1] < w[0])) || alpha_bars.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("cumulative alphas must be finite and strictly decreasing"));
        }
        Ok(Self { betas: betas.to_vec(), alpha_bars, sigmas_ddpm })
    }

    /// Six-step schedule with `β` spaced log-uniformly over `[1e-4, 0.5]`.
    ///
    /// A stand-in for a tuned six-step vocoder schedule; load tuned values
    /// from a config file when available.
    pub fn geometric_six() -> Self {
        Self::geometric(6, 1e-4, 0.5).expect("static schedule is valid")
    }

    pub fn geometric(steps: usize, first: f64, last: f64) -> Result<Self> {
        if steps == 0 || !(first > 0.0 && last > 0.0) {
            return Err(Error::invalid("geometric schedule needs steps >= 1 and positive endpoints"));
        }
        let betas: Vec<f64> = if steps == 1 {
            vec![first]
        } else {
            let ratio = (last / first).ln() / (steps - 1) as f64;
            (0..steps).map(|i| first * (ratio * i as f64).exp()).collect()
        };
        Self::from_betas(&betas)
    }

    /// Number of steps `T`.
    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// `β_t`, `1 ≤ t ≤ T`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        1.0 - self.beta(t)
    }

    /// `ᾱ_t`, `0 ≤ t ≤ T`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t]
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    pub fn sigma_ddpm(&self, t: usize) -> f64 {
        self.sigmas_ddpm[t]
    }

    pub fn sigma(&self, t: usize, mode: SigmaMode) -> f64 {
        match mode {
            SigmaMode::Ddpm => self.sigma_ddpm(t),
            SigmaMode::DdimZero => 0.0,
        }
    }

    /// Noise-level conditioning value `sqrt(ᾱ_t)`.
    pub fn noise_level(&self, t: usize) -> f64 {
        self.alpha_bars[t].sqrt()
    }

    /// Step whose `sqrt(ᾱ_t)` lies within `tolerance` of `level`, nearest first.
    pub fn step_for_noise_level(&self, level: f64, tolerance: f64) -> Option<usize> {
        (1..=self.steps())
            .map(|t| (t, (self.noise_level(t) - level).abs()))
            .filter(|(_, d)| *d <= tolerance)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(t, _)| t)
    }

    pub(crate) fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::invalid(format!("step {t} outside 1..={}", self.steps())));
        }
        Ok(())
    }
}
