//! Reverse-diffusion sampling with optional Griffin-Lim correction.
//!
//! Step index `t` runs from `T` down to `1`; `ᾱ_0 = 1` by convention, which
//! makes `σ_1 = 0` and the last step deterministic.

mod sampler;
mod schedule;
mod steps;

pub use sampler::{generate, generate_with_estimate, GenerationTrace, SamplerConfig, Snapshot, StepRecord, TraceMode, Variant};
pub use schedule::{NoiseSchedule, SigmaMode};
pub use steps::{corrected_step, ddim_step, ddpm_step, forward_diffuse, per_step_gla_baseline_step, predict_y0};
