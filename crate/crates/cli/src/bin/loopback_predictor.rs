//! Predictor process for testing: speaks the wire protocol on stdin/stdout.
//!
//! ```text
//! pavoc-loopback-predictor [--mode zero|oracle] [--reference ref.wav]
//!                          [--config run.toml] [--exit-after N]
//!                          [--misbehave none|bad-magic|wrong-length|hang]
//! ```

use std::io::{stdin, stdout, BufReader, BufWriter};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use pavoc::config::VocoderConfig;
use pavoc::io::read_wav;
use pavoc_cli::loopback::{LoopbackMode, LoopbackServer, Misbehavior};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Zero,
    Oracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Misbehave {
    None,
    BadMagic,
    WrongLength,
    Hang,
}

#[derive(Debug, Parser)]
#[command(name = "pavoc-loopback-predictor", about = "Reference noise predictor over stdin/stdout")]
struct Args {
    #[arg(long, value_enum, default_value = "zero")]
    mode: Mode,
    /// Clean reference signal (oracle mode).
    #[arg(long)]
    reference: Option<std::path::PathBuf>,
    /// Configuration providing the noise schedule (oracle mode).
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Exit without answering after this many answered requests.
    #[arg(long)]
    exit_after: Option<usize>,
    #[arg(long, value_enum, default_value = "none")]
    misbehave: Misbehave,
}

fn run(args: Args) -> anyhow::Result<()> {
    let mode = match args.mode {
        Mode::Zero => LoopbackMode::Zero,
        Mode::Oracle => {
            let reference = args.reference.context("--reference is required in oracle mode")?;
            let config = match &args.config {
                Some(path) => VocoderConfig::load(path)?,
                None => VocoderConfig::default(),
            };
            LoopbackMode::Oracle { y0: read_wav(&reference)?.samples, schedule: config.schedule()? }
        }
    };
    let misbehavior = match args.misbehave {
        Misbehave::None => Misbehavior::None,
        Misbehave::BadMagic => Misbehavior::BadMagic,
        Misbehave::WrongLength => Misbehavior::WrongLength,
        Misbehave::Hang => Misbehavior::Hang,
    };
    let server = LoopbackServer { mode, exit_after: args.exit_after, misbehavior };
    server.serve(BufReader::new(stdin().lock()), BufWriter::new(stdout().lock()))?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pavoc-loopback-predictor: {e:#}");
            ExitCode::FAILURE
        }
    }
}
