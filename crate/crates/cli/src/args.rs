use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pavoc::diffusion::{SigmaMode, Variant};

#[derive(Debug, Clone, Parser)]
#[command(name = "pavoc", version, about = "Phase-aware diffusion vocoder: mel analysis, Griffin-Lim, corrected diffusion sampling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Compute MELB mel spectrograms from WAV files.
    Analyze(AnalyzeArgs),
    /// Invert MELB files with the filterbank pseudo-inverse and Fast Griffin-Lim.
    Reconstruct(ReconstructArgs),
    /// Run (corrected) reverse diffusion conditioned on MELB files.
    Generate(GenerateArgs),
    /// Corrected generation with oracle spectrogram or oracle phase estimates.
    OracleEval(OracleEvalArgs),
    /// Generate at every stage-1 endpoint and report per-file optima.
    Sweep(SweepArgs),
    /// Measure real-time factors of sampling variants.
    Bench(BenchArgs),
    /// Re-run a command from the manifest it wrote.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Reconstruct(_) => "reconstruct",
            Command::Generate(_) => "generate",
            Command::OracleEval(_) => "oracle-eval",
            Command::Sweep(_) => "sweep",
            Command::Bench(_) => "bench",
            Command::Replay(_) => "replay",
        }
    }
}

/// STFT and filterbank settings; flags override the configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct DspArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_fft: Option<usize>,
    #[arg(long)]
    pub win_length: Option<usize>,
    #[arg(long)]
    pub hop_length: Option<usize>,
    #[arg(long)]
    pub mel_bands: Option<usize>,
    #[arg(long)]
    pub f_min: Option<f64>,
    #[arg(long)]
    pub f_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlaArgs {
    /// Base seed; each file uses `seed XOR hash(file name)`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub gla_iters: Option<usize>,
    #[arg(long)]
    pub gla_momentum: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Plain,
    Baseline,
    Corrected,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Plain => Variant::Plain,
            VariantArg::Baseline => Variant::PerStepGlaBaseline,
            VariantArg::Corrected => Variant::Corrected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaArg {
    Ddpm,
    Ddim0,
}

impl From<SigmaArg> for SigmaMode {
    fn from(s: SigmaArg) -> Self {
        match s {
            SigmaArg::Ddpm => SigmaMode::Ddpm,
            SigmaArg::Ddim0 => SigmaMode::DdimZero,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SamplerArgs {
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Last step handled by the classical rule (0 = Griffin-Lim only, T = plain).
    #[arg(long)]
    pub stage1_end: Option<usize>,
    #[arg(long, value_enum)]
    pub sigma: Option<SigmaArg>,
}

/// Where noise estimates come from.
#[derive(Debug, Clone, Args)]
pub struct PredictorArgs {
    /// `zero`, `oracle:<wav>`, `degraded:<wav>:<snr_db>` or
    /// `external:<command line>`. `{stem}` expands to the input file stem
    /// and `{reference}` to the resolved reference path.
    #[arg(long, default_value = "zero")]
    pub predictor: String,
    /// Send log10-compressed mel to external predictors.
    #[arg(long)]
    pub log_mel: bool,
    /// Seconds to wait for an external predictor reply.
    #[arg(long, default_value_t = 30.0)]
    pub predictor_timeout: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub dsp: DspArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Reference WAV (supports `{stem}`): fixes the output length and enables metrics.
    #[arg(long)]
    pub reference: Option<String>,
    #[command(flatten)]
    pub dsp: DspArgs,
    #[command(flatten)]
    pub gla: GlaArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Reference WAV (supports `{stem}`): fixes the output length and enables metrics.
    #[arg(long)]
    pub reference: Option<String>,
    #[command(flatten)]
    pub dsp: DspArgs,
    #[command(flatten)]
    pub gla: GlaArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleMode {
    /// Griffin-Lim on the true magnitude.
    OracleSpec,
    /// True phase with the pseudo-inverse magnitude.
    OraclePhase,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct OracleEvalArgs {
    /// Reference WAV files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: OracleMode,
    /// Predictor spec; `oracle` and `degraded:<snr_db>` refer to the input itself.
    #[arg(long, default_value = "oracle")]
    pub predictor: String,
    #[arg(long)]
    pub log_mel: bool,
    #[arg(long, default_value_t = 30.0)]
    pub predictor_timeout: f64,
    #[command(flatten)]
    pub dsp: DspArgs,
    #[command(flatten)]
    pub gla: GlaArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Reference WAV per input; `{stem}` expands to the MELB file stem.
    #[arg(long)]
    pub reference: String,
    #[command(flatten)]
    pub dsp: DspArgs,
    #[command(flatten)]
    pub gla: GlaArgs,
    #[arg(long, value_enum)]
    pub sigma: Option<SigmaArg>,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Reference WAV per input (supports `{stem}`), used for lengths and oracle predictors.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["plain", "corrected", "baseline"])]
    pub variants: Vec<VariantArg>,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[command(flatten)]
    pub dsp: DspArgs,
    #[command(flatten)]
    pub gla: GlaArgs,
    #[arg(long)]
    pub stage1_end: Option<usize>,
    #[arg(long, value_enum)]
    pub sigma: Option<SigmaArg>,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
