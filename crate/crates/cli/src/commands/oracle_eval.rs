//! Corrected generation with an oracle-informed `x̃`:
//!
//! * oracle spectrogram: Griffin-Lim on the true magnitude `|stft(ref)|`;
//! * oracle phase: the pseudo-inverse magnitude `B⁺·mel` combined with the
//!   true phase of `stft(ref)`, one inverse STFT.

use std::path::{Path, PathBuf};
use std::time::Instant;

use pavoc::diffusion::{generate_with_estimate, Variant};
use pavoc::dsp::{apply_mel, estimate_magnitude, Stft};
use pavoc::io::{read_wav, write_wav};
use pavoc::phase_retrieval::{griffin_lim_with, project_magnitude, PhaseInit};

use crate::args::{OracleEvalArgs, OracleMode};
use crate::predictor_spec::{timeout, PredictorSpec};
use crate::report::{write_csv, MetricRow};
use crate::resolve::{expand, file_seed, resolve_config, stem};
use crate::{partition, Invocation, Session};

pub fn run(args: &OracleEvalArgs, invocation: &Invocation) -> anyhow::Result<()> {
    let session = Session::new("oracle-eval", invocation, &args.out.out, || {
        resolve_config(&args.dsp, Some(&args.gla), Some(&args.sampler))
    })?;
    let results = session.par_map(&args.inputs, |path| evaluate_one(&session, args, path));
    let (done, failure) = partition(&args.inputs, results);
    let mut rows = Vec::new();
    let mut outputs = Vec::new();
    for (paths, file_rows) in done {
        outputs.extend(paths);
        rows.extend(file_rows);
    }
    for row in &rows {
        println!(
            "{}\t{}\tmel_consistency={}\tsnr_db={}",
            row.path,
            row.variant,
            row.mel_consistency.map_or("-".into(), |v| format!("{v:.6}")),
            row.snr_db.map_or("-".into(), |v| format!("{v:.3}"))
        );
    }
    write_csv(&session.out.join("oracle_eval_metrics.csv"), &rows)?;
    session.finish(&args.inputs, &outputs, failure)
}

fn modes(mode: OracleMode) -> &'static [(&'static str, OracleMode)] {
    match mode {
        OracleMode::OracleSpec => &[("oracle_spec", OracleMode::OracleSpec)],
        OracleMode::OraclePhase => &[("oracle_phase", OracleMode::OraclePhase)],
        OracleMode::Both => &[("oracle_spec", OracleMode::OracleSpec), ("oracle_phase", OracleMode::OraclePhase)],
    }
}

fn evaluate_one(session: &Session, args: &OracleEvalArgs, path: &Path) -> anyhow::Result<(Vec<PathBuf>, Vec<MetricRow>)> {
    let config = &session.config;
    let name = stem(path);
    let audio = read_wav(path)?;
    let stft_config = config.stft_config(audio.sample_rate);
    let plan = Stft::new(stft_config)?;
    let fb = session.cache.get(config, &stft_config)?;
    let spec = plan.forward(&audio.samples)?;
    let magnitude = spec.magnitude();
    let mel = apply_mel(&magnitude, &fb)?;
    let schedule = config.schedule()?;
    let seed = file_seed(config.sampler.seed, path);
    let predictor_spec = PredictorSpec::parse(&expand(&args.predictor, &name, Some(&path.display().to_string())))?;
    let length = audio.samples.len();
    let secs = audio.duration_secs();

    let mut sampler = config.sampler_config(audio.sample_rate);
    sampler.seed = seed;
    sampler.variant = Variant::Corrected;

    let mut outputs = Vec::new();
    let mut rows = Vec::new();
    for &(label, mode) in modes(args.mode) {
        let start = Instant::now();
        let x_tilde = match mode {
            OracleMode::OracleSpec => {
                let gla = config.gla_config().with_init(PhaseInit::Random(seed));
                griffin_lim_with(&plan, &magnitude, &gla, length)?
            }
            _ => {
                let estimate = estimate_magnitude(&mel, &fb)?;
                plan.inverse(&project_magnitude(&spec, &estimate)?, length)?
            }
        };
        let mut predictor =
            predictor_spec.build(Some(path), length, &schedule, seed, args.log_mel, timeout(args.predictor_timeout)?)?;
        let (y, _) = generate_with_estimate(&mel, &mut predictor, &schedule, &sampler, &x_tilde)?;
        let elapsed = start.elapsed().as_secs_f64();

        let out = session.out.join(format!("{name}.{label}.wav"));
        write_wav(&out, &y, audio.sample_rate)?;
        outputs.push(out);
        rows.push(
            MetricRow::new(path, label, Some(sampler.stage1_end))
                .with_metrics(&y, Some(&audio.samples), &mel, &fb, &stft_config)?
                .with_rtf(secs, elapsed),
        );
    }
    Ok((outputs, rows))
}
