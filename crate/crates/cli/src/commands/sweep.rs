//! Generation at every stage-1 endpoint `0..=T`, with a per-file optimum
//! histogram for each metric.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use pavoc::diffusion::{generate, Variant};
use pavoc::phase_retrieval::reconstruct_from_mel;
use serde::Serialize;

use crate::args::{SamplerArgs, SweepArgs};
use crate::predictor_spec::{timeout, PredictorSpec};
use crate::report::{write_csv, MetricRow};
use crate::resolve::{expand, file_seed, load_mel, load_reference, output_length, resolve_config, stem};
use crate::{partition, Invocation, Session};

/// Metrics ranked per file, with their preferred direction.
pub const RANKED_METRICS: [(&str, bool); 4] =
    [("mel_consistency", false), ("spectral_convergence", false), ("lsd_db", false), ("snr_db", true)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub path: String,
    pub variant: String,
    pub stage1_end: usize,
    pub spectral_convergence: Option<f64>,
    pub lsd_db: Option<f64>,
    pub snr_db: Option<f64>,
    pub mel_consistency: Option<f64>,
    pub rtf: Option<f64>,
    /// Metrics for which this endpoint is the file's optimum (`;`-separated).
    pub optimal_for: String,
    /// Metrics whose optimum was tied and resolved toward the smaller endpoint.
    pub tie_broken_for: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub path: String,
    pub stage1_end: usize,
    pub error: String,
}

fn metric(row: &MetricRow, name: &str) -> Option<f64> {
    match name {
        "mel_consistency" => row.mel_consistency,
        "spectral_convergence" => row.spectral_convergence,
        "lsd_db" => row.lsd_db,
        "snr_db" => row.snr_db,
        _ => None,
    }
}

/// Index of the best value; ties go to the smaller index. Returns the
/// index and whether a tie was broken.
pub fn best_endpoint(values: &[(usize, f64)], higher_is_better: bool) -> Option<(usize, bool)> {
    let mut best: Option<(usize, f64)> = None;
    let mut tied = false;
    for &(n, v) in values {
        if v.is_nan() {
            continue;
        }
        match best {
            None => best = Some((n, v)),
            Some((bn, bv)) => {
                let better = if higher_is_better { v > bv } else { v < bv };
                if better {
                    best = Some((n, v));
                    tied = false;
                } else if v == bv {
                    tied = true;
                    if n < bn {
                        best = Some((n, v));
                    }
                }
            }
        }
    }
    best.map(|(n, _)| (n, tied))
}

pub fn run(args: &SweepArgs, invocation: &Invocation) -> anyhow::Result<()> {
    let sampler_args = SamplerArgs { sigma: args.sigma, ..Default::default() };
    let session = Session::new("sweep", invocation, &args.out.out, || {
        resolve_config(&args.dsp, Some(&args.gla), Some(&sampler_args))
    })?;
    let steps = session.config.schedule()?.steps();
    let results = session.par_map(&args.inputs, |path| sweep_one(&session, args, path));
    let (done, failure) = partition(&args.inputs, results);

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut histograms = vec![vec![0usize; steps + 1]; RANKED_METRICS.len()];
    for (file_rows, file_failures) in done {
        let mut sweep_rows: Vec<SweepRow> = file_rows
            .iter()
            .map(|(n, r)| SweepRow {
                path: r.path.clone(),
                variant: r.variant.clone(),
                stage1_end: *n,
                spectral_convergence: r.spectral_convergence,
                lsd_db: r.lsd_db,
                snr_db: r.snr_db,
                mel_consistency: r.mel_consistency,
                rtf: r.rtf,
                optimal_for: String::new(),
                tie_broken_for: String::new(),
            })
            .collect();
        for (m, &(name, higher)) in RANKED_METRICS.iter().enumerate() {
            let values: Vec<(usize, f64)> =
                file_rows.iter().filter_map(|(n, r)| metric(r, name).map(|v| (*n, v))).collect();
            if let Some((best, tied)) = best_endpoint(&values, higher) {
                histograms[m][best] += 1;
                let row = sweep_rows.iter_mut().find(|r| r.stage1_end == best).expect("best endpoint has a row");
                append(&mut row.optimal_for, name);
                if tied {
                    append(&mut row.tie_broken_for, name);
                }
            }
        }
        rows.extend(sweep_rows);
        failures.extend(file_failures);
    }

    write_csv(&session.out.join("sweep.csv"), &rows)?;
    if !failures.is_empty() {
        write_csv(&session.out.join("sweep_failures.csv"), &failures)?;
    }
    let report = histogram_report(&histograms, steps);
    std::fs::write(session.out.join("sweep_histogram.txt"), &report)?;
    print!("{report}");

    let outputs = vec![session.out.join("sweep.csv"), session.out.join("sweep_histogram.txt")];
    let failure = failure.or_else(|| {
        (!failures.is_empty()).then(|| crate::exit::BatchFailure {
            failed: failures.len(),
            total: args.inputs.len() * (steps + 1),
            code: crate::exit::FAILURE,
        })
    });
    session.finish(&args.inputs, &outputs, failure)
}

fn append(list: &mut String, item: &str) {
    if !list.is_empty() {
        list.push(';');
    }
    list.push_str(item);
}

pub fn histogram_report(histograms: &[Vec<usize>], steps: usize) -> String {
    let mut s = String::from("optimal stage-1 endpoint per file (ties resolved toward the smaller endpoint)\n");
    for ((name, higher), counts) in RANKED_METRICS.iter().zip(histograms) {
        let files: usize = counts.iter().sum();
        let _ = writeln!(s, "\n{name} ({} is better), {files} files", if *higher { "higher" } else { "lower" });
        for (n, &c) in counts.iter().enumerate() {
            let label = match n {
                0 => " (gla)",
                n if n == steps => " (plain)",
                _ => "",
            };
            let _ = writeln!(s, "  n={n:<2} {:<40} {c}{label}", "#".repeat(c.min(40)));
        }
    }
    s
}

type FileSweep = (Vec<(usize, MetricRow)>, Vec<SweepFailure>);

fn sweep_one(session: &Session, args: &SweepArgs, path: &Path) -> anyhow::Result<FileSweep> {
    let config = &session.config;
    let name = stem(path);
    let mel = load_mel(path, config)?;
    let (reference_path, reference) =
        load_reference(Some(&args.reference), &name)?.expect("sweep always has a reference template");
    let ref_string = reference_path.display().to_string();
    let spec = PredictorSpec::parse(&expand(&args.predictor.predictor, &name, Some(&ref_string)))?;
    let length = output_length(&mel, Some(&reference))?;
    let fb = session.cache.get(config, &mel.stft)?;
    let schedule = config.schedule()?;
    let seed = file_seed(config.sampler.seed, path);
    let secs = length as f64 / mel.stft.sample_rate as f64;
    let mut predictor = spec.build(
        Some(reference_path.as_path()),
        length,
        &schedule,
        seed,
        args.predictor.log_mel,
        timeout(args.predictor.predictor_timeout)?,
    )?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for n in 0..=schedule.steps() {
        let outcome = (|| -> anyhow::Result<MetricRow> {
            let start = Instant::now();
            // Endpoint 0 returns x̃ exactly, so it is computed as the plain
            // reconstruction (no predictor calls) — the same operation as
            // `reconstruct`.
            let (y, label) = if n == 0 {
                (reconstruct_from_mel(&mel.file.mel, &fb, &mel.stft, &config.gla_config(), seed, length)?, "gla")
            } else {
                let mut sampler = config.sampler_config(mel.stft.sample_rate);
                sampler.seed = seed;
                sampler.variant = Variant::Corrected;
                sampler.stage1_end = n;
                let label = if n == schedule.steps() { "plain" } else { "corrected" };
                (generate(&mel.file.mel, &fb, &mut predictor, &schedule, &sampler, length)?.0, label)
            };
            let elapsed = start.elapsed().as_secs_f64();
            Ok(MetricRow::new(path, label, Some(n))
                .with_metrics(&y, Some(&reference.samples), &mel.file.mel, &fb, &mel.stft)?
                .with_rtf(secs, elapsed))
        })();
        match outcome {
            Ok(row) => rows.push((n, row)),
            Err(e) => {
                eprintln!("{} endpoint {n}: {e:#}", path.display());
                failures.push(SweepFailure { path: path.display().to_string(), stage1_end: n, error: format!("{e:#}") });
            }
        }
    }
    Ok((rows, failures))
}
