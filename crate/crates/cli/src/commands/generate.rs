use std::path::{Path, PathBuf};

use pavoc::diffusion::generate;
use pavoc::io::{read_wav, write_wav};

use crate::args::GenerateArgs;
use crate::predictor_spec::{timeout, PredictorSpec};
use crate::report::{write_csv, MetricRow};
use crate::resolve::{expand, file_seed, load_mel, load_reference, output_length, resolve_config, stem};
use crate::{partition, Invocation, Session};

pub fn run(args: &GenerateArgs, invocation: &Invocation) -> anyhow::Result<()> {
    let session = Session::new("generate", invocation, &args.out.out, || {
        resolve_config(&args.dsp, Some(&args.gla), Some(&args.sampler))
    })?;
    let results = session.par_map(&args.inputs, |path| generate_one(&session, args, path));
    let (done, failure) = partition(&args.inputs, results);
    let (outputs, rows): (Vec<PathBuf>, Vec<MetricRow>) = done.into_iter().unzip();
    write_csv(&session.out.join("generate_metrics.csv"), &rows)?;
    for out in &outputs {
        println!("{}", out.display());
    }
    session.finish(&args.inputs, &outputs, failure)
}

fn generate_one(session: &Session, args: &GenerateArgs, path: &Path) -> anyhow::Result<(PathBuf, MetricRow)> {
    let config = &session.config;
    let name = stem(path);
    let mel = load_mel(path, config)?;
    let reference = load_reference(args.reference.as_deref(), &name)?;
    let reference_path = reference.as_ref().map(|(p, _)| p.display().to_string());
    let spec = PredictorSpec::parse(&expand(&args.predictor.predictor, &name, reference_path.as_deref()))?;
    // Without --reference, an oracle's own reference still fixes the length.
    let length = match (&reference, spec.reference_path()) {
        (None, Some(oracle_ref)) => output_length(&mel, Some(&read_wav(oracle_ref)?))?,
        _ => output_length(&mel, reference.as_ref().map(|(_, a)| a))?,
    };
    let fb = session.cache.get(config, &mel.stft)?;
    let schedule = config.schedule()?;
    let seed = file_seed(config.sampler.seed, path);
    let mut predictor = spec.build(
        reference.as_ref().map(|(p, _)| p.as_path()),
        length,
        &schedule,
        seed,
        args.predictor.log_mel,
        timeout(args.predictor.predictor_timeout)?,
    )?;

    let mut sampler = config.sampler_config(mel.stft.sample_rate);
    sampler.seed = seed;
    let (y, trace) = generate(&mel.file.mel, &fb, &mut predictor, &schedule, &sampler, length)?;

    let out = session.out.join(format!("{name}.wav"));
    write_wav(&out, &y, mel.stft.sample_rate)?;
    let row = MetricRow::new(path, sampler.variant.name(), Some(sampler.stage1_end))
        .with_metrics(&y, reference.as_ref().map(|(_, a)| a.samples.as_slice()), &mel.file.mel, &fb, &mel.stft)?
        .with_rtf(length as f64 / mel.stft.sample_rate as f64, trace.total_ns as f64 * 1e-9);
    Ok((out, row))
}
