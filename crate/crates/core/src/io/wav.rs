use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::{Error, Result};

pub const SUPPORTED_SAMPLE_RATES: [u32; 2] = [22_050, 24_000];

#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Audio {
    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

fn format_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

/// Reads a mono 16-bit PCM or 32-bit float WAV at a supported rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Audio> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => format_error(path, other),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(format_error(path, format!("expected mono audio, found {} channels", spec.channels)));
    }
    if !SUPPORTED_SAMPLE_RATES.contains(&spec.sample_rate) {
        return Err(format_error(path, format!("unsupported sample rate {} Hz", spec.sample_rate)));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32_768.0))
            .collect::<std::result::Result<_, _>>(),
        (SampleFormat::Float, 32) => {
            reader.into_samples::<f32>().map(|s| s.map(f64::from)).collect::<std::result::Result<_, _>>()
        }
        (format, bits) => {
            return Err(format_error(path, format!("unsupported sample format {format:?} with {bits} bits")));
        }
    }
    .map_err(|e| format_error(path, e))?;
    if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(format_error(path, format!("non-finite sample {bad}")));
    }
    Ok(Audio { samples, sample_rate: spec.sample_rate })
}

/// Writes mono 32-bit float WAV.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec { channels: 1, sample_rate, bits_per_sample: 32, sample_format: SampleFormat::Float };
    let mut writer = WavWriter::create(path, spec).map_err(|e| match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => format_error(path, other),
    })?;
    for &s in samples {
        writer.write_sample(s as f32).map_err(|e| format_error(path, e))?;
    }
    writer.finalize().map_err(|e| format_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let x = vec![0.0, 0.5, -0.25, 1.0];
        write_wav(&path, &x, 22_050).unwrap();
        let a = read_wav(&path).unwrap();
        assert_eq!(a.samples, x);
        assert_eq!(a.sample_rate, 22_050);
    }

    #[test]
    fn reads_pcm16() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.wav");
        let spec = WavSpec { channels: 1, sample_rate: 24_000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for v in [0i16, 16_384, -32_768] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        assert_eq!(read_wav(&path).unwrap().samples, vec![0.0, 0.5, -1.0]);
    }

    #[test]
    fn rejects_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        write_wav(&path, &[0.0], 16_000).unwrap();
        assert!(matches!(read_wav(&path), Err(Error::Format(_))));

        let stereo = dir.path().join("st.wav");
        let spec = WavSpec { channels: 2, sample_rate: 22_050, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(&stereo, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&stereo), Err(Error::Format(_))));

        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"not a wav").unwrap();
        assert!(matches!(read_wav(&junk), Err(Error::Format(_))));
        assert!(matches!(read_wav(dir.path().join("missing.wav")), Err(Error::Io(_))));
    }
}
