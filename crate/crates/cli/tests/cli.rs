use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pavoc::corpus::synthetic_utterance;
use pavoc::io::{read_melb, read_wav, write_melb, write_wav, MelFile};
use pavoc::dsp::MelSpectrogram;

const PAVOC: &str = env!("CARGO_BIN_EXE_pavoc");
const LOOPBACK: &str = env!("CARGO_BIN_EXE_pavoc-loopback-predictor");

fn pavoc(args: &[&str]) -> Output {
    Command::new(PAVOC).args(args).env_remove("PAVOC_THREADS").output().expect("run pavoc")
}

fn ok(args: &[&str]) -> Output {
    let out = pavoc(args);
    assert!(out.status.success(), "pavoc {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(args: &[&str]) -> i32 {
    pavoc(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes `n` synthetic utterances and their MELB analyses; returns
/// (wav paths, melb paths).
fn corpus(dir: &Path, n: u64) -> (Vec<PathBuf>, Vec<PathBuf>) {
    let wav_dir = dir.join("wav");
    let mel_dir = dir.join("mel");
    std::fs::create_dir_all(&wav_dir).unwrap();
    let wavs: Vec<PathBuf> = (0..n)
        .map(|i| {
            let p = wav_dir.join(format!("utt{i}.wav"));
            write_wav(&p, &synthetic_utterance(i, 22_050, 1.0), 22_050).unwrap();
            p
        })
        .collect();
    let mut args = vec!["analyze", "--out", s(&mel_dir)];
    args.extend(wavs.iter().map(|p| s(p)));
    ok(&args);
    let mels = (0..n).map(|i| mel_dir.join(format!("utt{i}.melb"))).collect();
    (wavs, mels)
}

fn csv_rows(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| headers.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

#[test]
fn analyze_silence_uses_vocoder_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("silence.wav");
    write_wav(&wav, &vec![0.0; 22_050], 22_050).unwrap();
    ok(&["analyze", "--out", s(dir.path()), s(&wav)]);
    let melb = read_melb(dir.path().join("silence.melb")).unwrap();
    assert_eq!(melb.mel.frames(), 1 + 22_050 / 300);
    assert_eq!(melb.mel.bands(), 128);
    assert_eq!(melb.hop_length, 300);
    assert_eq!(melb.sample_rate, 22_050);
    assert!(melb.mel.data().iter().all(|&v| v == 0.0));
    assert!(dir.path().join("analyze.manifest.toml").exists());
}

#[test]
fn analyze_batch_continues_past_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.wav");
    write_wav(&good, &synthetic_utterance(1, 24_000, 0.5), 24_000).unwrap();
    let bad = dir.path().join("bad.wav");
    std::fs::write(&bad, b"RIFF nonsense").unwrap();
    let out = pavoc(&["analyze", "--out", s(dir.path()), s(&bad), s(&good)]);
    assert_eq!(out.status.code(), Some(2));
    let melb = read_melb(dir.path().join("good.melb")).unwrap();
    assert_eq!(melb.sample_rate, 24_000);
}

#[test]
fn reconstruct_is_deterministic_and_silent_for_zero_mel() {
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.melb");
    write_melb(&zero, &MelFile { mel: MelSpectrogram::zeros(20, 128), sample_rate: 22_050, hop_length: 300 }).unwrap();
    ok(&["reconstruct", "--out", s(&dir.path().join("z")), s(&zero)]);
    let z = read_wav(dir.path().join("z/zero.wav")).unwrap();
    assert_eq!(z.samples.len(), 19 * 300);
    assert!(z.samples.iter().all(|&v| v == 0.0));

    let (_, mels) = corpus(dir.path(), 1);
    for d in ["a", "b"] {
        ok(&["reconstruct", "--seed", "5", "--out", s(&dir.path().join(d)), s(&mels[0])]);
    }
    ok(&["reconstruct", "--seed", "6", "--out", s(&dir.path().join("c")), s(&mels[0])]);
    let read = |d: &str| std::fs::read(dir.path().join(d).join("utt0.wav")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn generate_boundary_endpoints_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (wavs, mels) = corpus(dir.path(), 1);
    let reference = s(&wavs[0]);
    let out = |d: &str| dir.path().join(d);
    let rec_dir = out("rec");
    ok(&["reconstruct", "--seed", "3", "--reference", reference, "--out", s(&rec_dir), s(&mels[0])]);
    let common = ["--seed", "3", "--reference", reference, "--predictor", "degraded:{reference}:10"];
    let run = |d: &str, extra: &[&str]| {
        let dest = out(d);
        let mut args = vec!["generate", "--out", s(&dest)];
        args.extend_from_slice(&common);
        args.extend_from_slice(extra);
        args.push(s(&mels[0]));
        ok(&args);
        std::fs::read(dest.join("utt0.wav")).unwrap()
    };
    let gla = run("g0", &["--variant", "corrected", "--stage1-end", "0"]);
    let rec_dir = out("rec");
    assert_eq!(gla, std::fs::read(rec_dir.join("utt0.wav")).unwrap());
    let corrected_t = run("g6", &["--variant", "corrected", "--stage1-end", "6"]);
    let plain = run("plain", &["--variant", "plain"]);
    assert_eq!(corrected_t, plain);
    let mid = run("g3", &["--variant", "corrected", "--stage1-end", "3"]);
    assert_ne!(mid, plain);
}

#[test]
fn oracle_generation_recovers_reference() {
    let dir = tempfile::tempdir().unwrap();
    let (wavs, mels) = corpus(dir.path(), 1);
    let predictor = format!("oracle:{}", s(&wavs[0]));
    ok(&[
        "generate", "--variant", "plain", "--sigma", "ddim0", "--predictor", &predictor, "--reference", s(&wavs[0]),
        "--out", s(dir.path()), s(&mels[0]),
    ]);
    let rows = csv_rows(&dir.path().join("generate_metrics.csv"));
    let snr: f64 = rows[0]["snr_db"].parse().unwrap();
    assert!(snr >= 120.0, "{snr}");
}

#[test]
fn external_loopback_matches_in_process_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (wavs, mels) = corpus(dir.path(), 1);
    let reference = s(&wavs[0]);
    let external = format!("external:{LOOPBACK} --mode oracle --reference {reference}");
    let internal = format!("oracle:{reference}");
    for (d, p) in [("ext", &external), ("int", &internal)] {
        ok(&[
            "generate", "--variant", "corrected", "--stage1-end", "2", "--seed", "11", "--predictor", p,
            "--reference", reference, "--out", s(&dir.path().join(d)), s(&mels[0]),
        ]);
    }
    let a = read_wav(dir.path().join("ext/utt0.wav")).unwrap().samples;
    let b = read_wav(dir.path().join("int/utt0.wav")).unwrap().samples;
    let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    assert!(num / den < 1e-5, "{}", num / den);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (wavs, mels) = corpus(dir.path(), 1);
    let out = dir.path().join("o");
    let mel = s(&mels[0]);

    // Malformed MELB.
    let junk = dir.path().join("junk.melb");
    std::fs::write(&junk, b"MELBxx").unwrap();
    assert_eq!(code(&["generate", "--out", s(&out), s(&junk)]), 2);
    // Unknown predictor spec.
    assert_eq!(code(&["generate", "--predictor", "psychic", "--out", s(&out), mel]), 2);
    // Predictor that exits before the handshake.
    assert_eq!(code(&["generate", "--predictor", "external:true", "--out", s(&out), mel]), 3);
    // Predictor that dies mid-generation.
    let dying = format!("external:{LOOPBACK} --exit-after 2");
    assert_eq!(code(&["generate", "--predictor", &dying, "--out", s(&out), mel]), 3);
    let garbled = format!("external:{LOOPBACK} --misbehave bad-magic");
    assert_eq!(code(&["generate", "--predictor", &garbled, "--out", s(&out), mel]), 3);
    let short = format!("external:{LOOPBACK} --misbehave wrong-length");
    assert_eq!(code(&["generate", "--predictor", &short, "--out", s(&out), mel]), 3);
    let hung = format!("external:{LOOPBACK} --misbehave hang");
    assert_eq!(code(&["generate", "--predictor", &hung, "--predictor-timeout", "0.5", "--out", s(&out), mel]), 3);
    // Configuration errors.
    assert_eq!(code(&["generate", "--stage1-end", "9", "--out", s(&out), mel]), 4);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[gla]\nmomentum = 2.0\n").unwrap();
    assert_eq!(code(&["reconstruct", "--config", s(&cfg), "--out", s(&out), mel]), 4);
    assert_eq!(code(&["reconstruct", "--hop-length", "240", "--out", s(&out), mel]), 4);
    let threads = Command::new(PAVOC)
        .args(["reconstruct", "--out", s(&out), mel])
        .env("PAVOC_THREADS", "zero")
        .status()
        .unwrap();
    assert_eq!(threads.code(), Some(4));
    // Usage error from the argument parser.
    assert_eq!(code(&["generate", "--variant", "fancy", mel]), 2);
    // Reference that does not match the mel.
    let short_ref = dir.path().join("short.wav");
    write_wav(&short_ref, &vec![0.1; 1000], 22_050).unwrap();
    assert_eq!(code(&["generate", "--reference", s(&short_ref), "--out", s(&out), mel]), 2);
    let _ = wavs;
}

#[test]
fn analysis_of_reconstruction_reproduces_reported_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mels) = corpus(dir.path(), 1);
    let rec = dir.path().join("rec");
    ok(&["reconstruct", "--out", s(&rec), s(&mels[0])]);
    let reported: f64 = csv_rows(&rec.join("reconstruct_metrics.csv"))[0]["mel_consistency"].parse().unwrap();
    let again = dir.path().join("again");
    ok(&["analyze", "--out", s(&again), s(&rec.join("utt0.wav"))]);
    let original = read_melb(&mels[0]).unwrap().mel;
    let reanalyzed = read_melb(again.join("utt0.melb")).unwrap().mel;
    let num: f64 = reanalyzed.data().iter().zip(original.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let measured = num / original.frobenius_norm();
    // Float32 storage of the waveform and both mels is the only difference.
    assert!((measured - reported).abs() <= 1e-4 * reported.max(1e-3), "{measured} vs {reported}");
}

#[test]
fn sweep_rows_histogram_and_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mels) = corpus(dir.path(), 2);
    let reference = format!("{}/wav/{{stem}}.wav", s(dir.path()));
    let out = dir.path().join("sweep");
    let mut args = vec!["sweep", "--reference", &reference, "--predictor", "degraded:{reference}:10", "--seed", "4", "--out", s(&out)];
    args.extend(mels.iter().map(|p| s(p)));
    ok(&args);
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 2 * 7);
    for file in ["utt0.melb", "utt1.melb"] {
        let ends: Vec<usize> =
            rows.iter().filter(|r| r["path"].ends_with(file)).map(|r| r["stage1_end"].parse().unwrap()).collect();
        assert_eq!(ends, (0..=6).collect::<Vec<_>>());
        let optimal = rows.iter().filter(|r| r["path"].ends_with(file) && r["optimal_for"].contains("mel_consistency")).count();
        assert_eq!(optimal, 1);
    }
    let histogram = std::fs::read_to_string(out.join("sweep_histogram.txt")).unwrap();
    assert!(histogram.contains("mel_consistency"));

    // Endpoint 0 equals `reconstruct` with the same seed and reference.
    let rec = dir.path().join("rec");
    ok(&["reconstruct", "--seed", "4", "--reference", &reference, "--out", s(&rec), s(&mels[0])]);
    let rec_row = &csv_rows(&rec.join("reconstruct_metrics.csv"))[0];
    let sweep_row = rows.iter().find(|r| r["path"].ends_with("utt0.melb") && r["stage1_end"] == "0").unwrap();
    for metric in ["spectral_convergence", "lsd_db", "snr_db", "mel_consistency"] {
        assert_eq!(rec_row[metric], sweep_row[metric], "{metric}");
    }
}

#[test]
fn bench_reports_requested_variants_and_repetitions() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mels) = corpus(dir.path(), 2);
    let out = dir.path().join("bench");
    let mut args = vec!["bench", "--variants", "plain,corrected", "--repetitions", "2", "--out", s(&out)];
    args.extend(mels.iter().map(|p| s(p)));
    ok(&args);
    let rows = csv_rows(&out.join("bench.csv"));
    assert_eq!(rows.iter().map(|r| r["variant"].as_str()).collect::<Vec<_>>(), ["plain", "corrected"]);
    assert!(rows.iter().all(|r| r["repetitions"] == "2" && r["files"] == "2"));
    assert!(rows.iter().all(|r| r["rtf"].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn oracle_eval_reports_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let (wavs, _) = corpus(dir.path(), 1);
    let out = dir.path().join("oe");
    ok(&["oracle-eval", "--predictor", "degraded:10", "--out", s(&out), s(&wavs[0])]);
    let rows = csv_rows(&out.join("oracle_eval_metrics.csv"));
    assert_eq!(rows.iter().map(|r| r["variant"].as_str()).collect::<Vec<_>>(), ["oracle_spec", "oracle_phase"]);
    assert!(out.join("utt0.oracle_phase.wav").exists());
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (wavs, mels) = corpus(dir.path(), 2);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[sampler]\nstage1_end = 2\nseed = 99\n[gla]\niterations = 16\n").unwrap();
    let first = dir.path().join("first");
    let predictor = format!("degraded:{}/wav/{{stem}}.wav:10", s(dir.path()));
    let mut args = vec!["generate", "--config", s(&cfg), "--predictor", &predictor, "--out", s(&first)];
    args.extend(mels.iter().map(|p| s(p)));
    ok(&args);
    // Changing the configuration file afterwards must not affect replay.
    std::fs::write(&cfg, "[sampler]\nstage1_end = 5\n").unwrap();
    let second = dir.path().join("second");
    ok(&["replay", s(&first.join("generate.manifest.toml")), "--out", s(&second)]);
    for i in 0..2 {
        let name = format!("utt{i}.wav");
        assert_eq!(std::fs::read(first.join(&name)).unwrap(), std::fs::read(second.join(&name)).unwrap());
    }
    let manifest = std::fs::read_to_string(first.join("generate.manifest.toml")).unwrap();
    assert!(manifest.contains("seed = \"99\""));
    assert!(manifest.contains("stage1_end = 2"));
    let _ = wavs;
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mels) = corpus(dir.path(), 3);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let mut cmd = Command::new(PAVOC);
        cmd.args(["reconstruct", "--out", s(&out)]).args(mels.iter().map(|p| s(p))).env("PAVOC_THREADS", threads);
        assert!(cmd.status().unwrap().success());
        outputs.push((0..3).map(|i| std::fs::read(out.join(format!("utt{i}.wav"))).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(outputs[0], outputs[1]);
}
