//! Command-line front end for the `pavoc` vocoder engine.
//!
//! Exposed as a library so that integration tests can drive commands
//! in-process; the `pavoc` binary is a thin wrapper around [`execute`].

pub mod args;
mod commands;
pub mod exit;
pub mod loopback;
pub mod manifest;
pub mod predictor_spec;
pub mod report;
pub mod resolve;

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Parser;
use pavoc::config::VocoderConfig;
use rayon::prelude::*;

pub use args::{Cli, Command};
use exit::BatchFailure;
use manifest::{unix_now, RunManifest};
use resolve::FilterbankCache;

/// How a command was invoked; replays substitute the recorded configuration
/// and may redirect the output directory.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub config_override: Option<VocoderConfig>,
    pub out_override: Option<PathBuf>,
}

/// Parses `args` (without the program name) and runs the command.
pub fn run<I, S>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(std::iter::once("pavoc".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| pavoc::Error::InvalidArgument(e.to_string()))?;
    execute(cli, Invocation { argv, ..Default::default() })
}

pub fn execute(cli: Cli, invocation: Invocation) -> anyhow::Result<()> {
    match &cli.command {
        Command::Analyze(a) => commands::analyze::run(a, &invocation),
        Command::Reconstruct(a) => commands::reconstruct::run(a, &invocation),
        Command::Generate(a) => commands::generate::run(a, &invocation),
        Command::OracleEval(a) => commands::oracle_eval::run(a, &invocation),
        Command::Sweep(a) => commands::sweep::run(a, &invocation),
        Command::Bench(a) => commands::bench::run(a, &invocation),
        Command::Replay(a) => replay(&a.manifest, a.out.clone()),
    }
}

fn replay(manifest_path: &Path, out: Option<PathBuf>) -> anyhow::Result<()> {
    let manifest = RunManifest::read(manifest_path)?;
    if manifest.command == "replay" {
        return Err(pavoc::Error::InvalidArgument("a replay manifest cannot be replayed".into()).into());
    }
    let cli = Cli::try_parse_from(std::iter::once("pavoc".to_string()).chain(manifest.argv.iter().cloned()))
        .map_err(|e| pavoc::Error::Format(format!("{}: recorded arguments: {e}", manifest_path.display())))?;
    execute(cli, Invocation { argv: manifest.argv, config_override: Some(manifest.config), out_override: out })
}

/// Shared state of one batch command.
pub(crate) struct Session {
    pub command: &'static str,
    pub config: VocoderConfig,
    pub out: PathBuf,
    pub cache: FilterbankCache,
    argv: Vec<String>,
    started: f64,
    pool: rayon::ThreadPool,
}

impl Session {
    pub fn new(
        command: &'static str,
        invocation: &Invocation,
        out: &Path,
        resolve: impl FnOnce() -> pavoc::Result<VocoderConfig>,
    ) -> anyhow::Result<Self> {
        let started = unix_now();
        let config = match &invocation.config_override {
            Some(c) => {
                c.validate()?;
                c.clone()
            }
            None => resolve()?,
        };
        let out = invocation.out_override.clone().unwrap_or_else(|| out.to_path_buf());
        std::fs::create_dir_all(&out).with_context(|| format!("creating output directory {}", out.display()))?;
        Ok(Self {
            command,
            config,
            out,
            cache: FilterbankCache::default(),
            argv: invocation.argv.clone(),
            started,
            pool: resolve::thread_pool()?,
        })
    }

    /// Maps `f` over `items` on the file-level pool, preserving order.
    pub fn par_map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    /// Writes the manifest and turns per-file failures into a batch error.
    pub fn finish(&self, inputs: &[PathBuf], outputs: &[PathBuf], failure: Option<BatchFailure>) -> anyhow::Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            argv: self.argv.clone(),
            seed: self.config.sampler.seed.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            started_unix: self.started,
            finished_unix: unix_now(),
            config: self.config.clone(),
        };
        manifest.write(&self.out)?;
        match failure {
            Some(f) => Err(f.into()),
            None => Ok(()),
        }
    }
}

/// Splits per-file results, reporting failures on stderr.
pub(crate) fn partition<T>(inputs: &[PathBuf], results: Vec<anyhow::Result<T>>) -> (Vec<T>, Option<BatchFailure>) {
    let total = results.len();
    let mut ok = Vec::new();
    let mut failure: Option<BatchFailure> = None;
    for (path, result) in inputs.iter().zip(results) {
        match result {
            Ok(v) => ok.push(v),
            Err(e) => {
                eprintln!("{}: {e:#}", path.display());
                let f = failure.get_or_insert(BatchFailure { failed: 0, total, code: exit::exit_code(&e) });
                f.failed += 1;
            }
        }
    }
    (ok, failure)
}
