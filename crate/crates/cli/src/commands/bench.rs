//! Serial real-time-factor measurement of sampling variants over a batch.

use std::path::PathBuf;
use std::sync::Arc;

use pavoc::diffusion::{generate, Variant};
use pavoc::dsp::MelFilterbank;
use pavoc::io::read_wav;
use pavoc::metrics::measure_rtf;
use pavoc::predictor::NoisePredictor;
use serde::Serialize;

use crate::args::{BenchArgs, SamplerArgs};
use crate::predictor_spec::{timeout, PredictorSpec};
use crate::report::write_csv;
use crate::resolve::{expand, file_seed, load_mel, load_reference, output_length, resolve_config, stem, LoadedMel};
use crate::{Invocation, Session};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub variant: String,
    pub stage1_end: usize,
    pub files: usize,
    pub audio_seconds: f64,
    pub repetitions: usize,
    pub median_secs: f64,
    pub min_secs: f64,
    pub max_secs: f64,
    pub rtf: f64,
}

struct Item {
    mel: LoadedMel,
    fb: Arc<MelFilterbank>,
    length: usize,
    seed: u64,
    spec: PredictorSpec,
    reference: Option<PathBuf>,
}

pub fn run(args: &BenchArgs, invocation: &Invocation) -> anyhow::Result<()> {
    let sampler_args = SamplerArgs { stage1_end: args.stage1_end, sigma: args.sigma, variant: None };
    let session = Session::new("bench", invocation, &args.out.out, || {
        resolve_config(&args.dsp, Some(&args.gla), Some(&sampler_args))
    })?;
    if args.repetitions == 0 {
        return Err(pavoc::Error::InvalidArgument("--repetitions must be at least 1".into()).into());
    }
    let config = &session.config;
    let schedule = config.schedule()?;
    let wait = timeout(args.predictor.predictor_timeout)?;

    let mut items = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let name = stem(path);
        let mel = load_mel(path, config)?;
        let reference = load_reference(args.reference.as_deref(), &name)?;
        let ref_string = reference.as_ref().map(|(p, _)| p.display().to_string());
        let spec = PredictorSpec::parse(&expand(&args.predictor.predictor, &name, ref_string.as_deref()))?;
        let length = match (&reference, spec.reference_path()) {
            (None, Some(oracle_ref)) => output_length(&mel, Some(&read_wav(oracle_ref)?))?,
            _ => output_length(&mel, reference.as_ref().map(|(_, a)| a))?,
        };
        let reference_path = reference.map(|(p, _)| p);
        let fb = session.cache.get(config, &mel.stft)?;
        items.push(Item { mel, fb, length, seed: file_seed(config.sampler.seed, path), spec, reference: reference_path });
    }
    let audio_seconds: f64 = items.iter().map(|i| i.length as f64 / i.mel.stft.sample_rate as f64).sum();

    let mut rows = Vec::new();
    for &variant_arg in &args.variants {
        let variant: Variant = variant_arg.into();
        // Predictors are built before timing so that start-up costs (e.g.
        // spawning an external process) are excluded equally for all variants.
        let mut predictors: Vec<Box<dyn NoisePredictor + Send>> = items
            .iter()
            .map(|i| i.spec.build(i.reference.as_deref(), i.length, &schedule, i.seed, args.predictor.log_mel, wait))
            .collect::<pavoc::Result<_>>()?;
        let items = &items;
        let schedule = &schedule;
        let measurement = measure_rtf(
            || {
                for (item, predictor) in items.iter().zip(predictors.iter_mut()) {
                    let mut sampler = config.sampler_config(item.mel.stft.sample_rate);
                    sampler.variant = variant;
                    sampler.seed = item.seed;
                    generate(&item.mel.file.mel, &item.fb, predictor, schedule, &sampler, item.length)?;
                }
                Ok(())
            },
            audio_seconds,
            args.repetitions,
        )?;
        rows.push(BenchRow {
            variant: variant.name().to_string(),
            stage1_end: config.sampler.stage1_end,
            files: items.len(),
            audio_seconds,
            repetitions: args.repetitions,
            median_secs: measurement.median_secs,
            min_secs: measurement.min_secs,
            max_secs: measurement.max_secs,
            rtf: measurement.rtf,
        });
    }

    println!("{:<10} {:>10} {:>12} {:>12} {:>12}", "variant", "rtf", "median_s", "min_s", "max_s");
    for r in &rows {
        println!("{:<10} {:>10.3} {:>12.4} {:>12.4} {:>12.4}", r.variant, r.rtf, r.median_secs, r.min_secs, r.max_secs);
    }
    let csv = session.out.join("bench.csv");
    write_csv(&csv, &rows)?;
    session.finish(&args.inputs, &[csv], None)
}
