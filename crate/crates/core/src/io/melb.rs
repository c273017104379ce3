//! `MELB`: magic, u32 version, u32 frames, u32 bands, f32 sample rate,
//! u32 hop length, then frame-major f32 linear-amplitude values. All fields
//! little-endian.

use std::io::{Read, Write};
use std::path::Path;

use crate::dsp::MelSpectrogram;
use crate::{Error, Result};

pub const MELB_MAGIC: [u8; 4] = *b"MELB";
pub const MELB_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct MelFile {
    pub mel: MelSpectrogram,
    pub sample_rate: u32,
    pub hop_length: u32,
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("slice of four bytes"))
}

pub fn write_melb_to<W: Write>(mut w: W, file: &MelFile) -> Result<()> {
    let mel = &file.mel;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * mel.data().len());
    out.extend_from_slice(&MELB_MAGIC);
    out.extend_from_slice(&MELB_VERSION.to_le_bytes());
    out.extend_from_slice(&(mel.frames() as u32).to_le_bytes());
    out.extend_from_slice(&(mel.bands() as u32).to_le_bytes());
    out.extend_from_slice(&(file.sample_rate as f32).to_le_bytes());
    out.extend_from_slice(&file.hop_length.to_le_bytes());
    for &v in mel.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&out)?;
    w.flush()?;
    Ok(())
}

pub fn read_melb_from<R: Read>(mut r: R) -> Result<MelFile> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("MELB header needs {HEADER_LEN} bytes, found {}", bytes.len())));
    }
    if bytes[..4] != MELB_MAGIC {
        return Err(Error::Format(format!("bad MELB magic {:?}", &bytes[..4])));
    }
    let version = u32_at(&bytes, 4);
    if version != MELB_VERSION {
        return Err(Error::Format(format!("unsupported MELB version {version}")));
    }
    let frames = u32_at(&bytes, 8) as usize;
    let bands = u32_at(&bytes, 12) as usize;
    let sample_rate = f32::from_le_bytes(bytes[16..20].try_into().expect("four bytes"));
    let hop_length = u32_at(&bytes, 20);
    if !(sample_rate > 0.0 && sample_rate.fract() == 0.0 && sample_rate <= u32::MAX as f32) {
        return Err(Error::Format(format!("invalid MELB sample rate {sample_rate}")));
    }
    if hop_length == 0 {
        return Err(Error::Format("MELB hop length is zero".into()));
    }
    let expected = frames
        .checked_mul(bands)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("MELB dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "MELB with {frames}×{bands} values needs {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let data: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("four bytes"))))
        .collect();
    let mel = MelSpectrogram::new(frames, bands, data).map_err(|e| Error::Format(format!("MELB payload: {e}")))?;
    Ok(MelFile { mel, sample_rate: sample_rate as u32, hop_length })
}

pub fn write_melb(path: impl AsRef<Path>, file: &MelFile) -> Result<()> {
    write_melb_to(std::io::BufWriter::new(std::fs::File::create(path)?), file)
}

pub fn read_melb(path: impl AsRef<Path>) -> Result<MelFile> {
    let path = path.as_ref();
    read_melb_from(std::fs::File::open(path)?).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}
