use std::path::{Path, PathBuf};
use std::time::Instant;

use pavoc::io::write_wav;
use pavoc::phase_retrieval::reconstruct_from_mel;

use crate::args::ReconstructArgs;
use crate::report::{write_csv, MetricRow};
use crate::resolve::{file_seed, load_mel, load_reference, output_length, resolve_config, stem};
use crate::{partition, Invocation, Session};

pub fn run(args: &ReconstructArgs, invocation: &Invocation) -> anyhow::Result<()> {
    let session = Session::new("reconstruct", invocation, &args.out.out, || {
        resolve_config(&args.dsp, Some(&args.gla), None)
    })?;
    let results = session.par_map(&args.inputs, |path| reconstruct_one(&session, path, args.reference.as_deref()));
    let (done, failure) = partition(&args.inputs, results);
    let (outputs, rows): (Vec<PathBuf>, Vec<MetricRow>) = done.into_iter().unzip();
    write_csv(&session.out.join("reconstruct_metrics.csv"), &rows)?;
    for out in &outputs {
        println!("{}", out.display());
    }
    session.finish(&args.inputs, &outputs, failure)
}

fn reconstruct_one(session: &Session, path: &Path, reference: Option<&str>) -> anyhow::Result<(PathBuf, MetricRow)> {
    let name = stem(path);
    let mel = load_mel(path, &session.config)?;
    let reference = load_reference(reference, &name)?;
    let length = output_length(&mel, reference.as_ref().map(|(_, a)| a))?;
    let fb = session.cache.get(&session.config, &mel.stft)?;
    let seed = file_seed(session.config.sampler.seed, path);

    let start = Instant::now();
    let x = reconstruct_from_mel(&mel.file.mel, &fb, &mel.stft, &session.config.gla_config(), seed, length)?;
    let elapsed = start.elapsed().as_secs_f64();

    let out = session.out.join(format!("{name}.wav"));
    write_wav(&out, &x, mel.stft.sample_rate)?;
    let row = MetricRow::new(path, "gla", Some(0))
        .with_metrics(&x, reference.as_ref().map(|(_, a)| a.samples.as_slice()), &mel.file.mel, &fb, &mel.stft)?
        .with_rtf(length as f64 / mel.stft.sample_rate as f64, elapsed);
    Ok((out, row))
}
