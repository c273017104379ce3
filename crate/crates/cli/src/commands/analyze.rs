use std::path::{Path, PathBuf};

use pavoc::dsp::{apply_mel, stft};
use pavoc::io::{read_wav, write_melb, MelFile};

use crate::args::AnalyzeArgs;
use crate::resolve::{resolve_config, stem};
use crate::{partition, Invocation, Session};

pub fn run(args: &AnalyzeArgs, invocation: &Invocation) -> anyhow::Result<()> {
    let session = Session::new("analyze", invocation, &args.out.out, || resolve_config(&args.dsp, None, None))?;
    let results = session.par_map(&args.inputs, |path| analyze_one(&session, path));
    let (outputs, failure) = partition(&args.inputs, results);
    for out in &outputs {
        println!("{}", out.display());
    }
    session.finish(&args.inputs, &outputs, failure)
}

fn analyze_one(session: &Session, path: &Path) -> anyhow::Result<PathBuf> {
    let audio = read_wav(path)?;
    let stft_config = session.config.stft_config(audio.sample_rate);
    let fb = session.cache.get(&session.config, &stft_config)?;
    let mel = apply_mel(&stft(&audio.samples, &stft_config)?.magnitude(), &fb)?;
    let out = session.out.join(format!("{}.melb", stem(path)));
    write_melb(&out, &MelFile { mel, sample_rate: audio.sample_rate, hop_length: stft_config.hop_length as u32 })?;
    Ok(out)
}
