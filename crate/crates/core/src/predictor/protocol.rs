//! Framed binary protocol between the engine and an external predictor.
//!
//! All integers are `u32` little-endian and all floats `f32` little-endian.
//!
//! ```text
//! handshake   client → "EPRD" version          server → "EPOK" version
//! request     "ERQ1" noise_level n_samples y_t[n] frames bands log_flag mel[frames·bands]
//! response    "ERS1" n_samples eps[n]
//! ```
//!
//! The mel payload is frame-major; `log_flag` is 1 when it holds
//! `log10(max(mel, 1e-5))` instead of linear amplitudes.

use std::io::{self, Read, Write};

use crate::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;
pub const HANDSHAKE: [u8; 4] = *b"EPRD";
pub const HANDSHAKE_REPLY: [u8; 4] = *b"EPOK";
pub const REQUEST: [u8; 4] = *b"ERQ1";
pub const RESPONSE: [u8; 4] = *b"ERS1";

/// Largest element count accepted in one payload (guards allocations
/// against corrupted length fields).
const MAX_ELEMENTS: u32 = 1 << 28;

#[derive(Debug, Clone, PartialEq)]
pub struct RequestFrame {
    pub noise_level: f32,
    pub y_t: Vec<f32>,
    pub frames: u32,
    pub bands: u32,
    pub log_mel: bool,
    pub mel: Vec<f32>,
}

fn read_exact_or_closed<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::PredictorUnavailable("predictor stream closed".into()),
        _ => Error::PredictorUnavailable(format!("predictor stream failed: {e}")),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_closed(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32> {
    let mut b = [0u8; 4];
    read_exact_or_closed(r, &mut b)?;
    Ok(f32::from_le_bytes(b))
}

fn read_len<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let n = read_u32(r)?;
    if n > MAX_ELEMENTS {
        return Err(Error::Protocol(format!("{what} length {n} exceeds limit")));
    }
    Ok(n)
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    read_exact_or_closed(r, &mut bytes)?;
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

fn read_magic<R: Read>(r: &mut R) -> Result<[u8; 4]> {
    let mut m = [0u8; 4];
    read_exact_or_closed(r, &mut m)?;
    Ok(m)
}

fn expect_magic<R: Read>(r: &mut R, expected: [u8; 4]) -> Result<()> {
    let m = read_magic(r)?;
    if m != expected {
        return Err(Error::Protocol(format!(
            "expected magic {:?}, got {:?}",
            String::from_utf8_lossy(&expected),
            String::from_utf8_lossy(&m)
        )));
    }
    Ok(())
}

fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_handshake(version: u32) -> Vec<u8> {
    let mut out = HANDSHAKE.to_vec();
    out.extend_from_slice(&version.to_le_bytes());
    out
}

pub fn encode_handshake_reply(version: u32) -> Vec<u8> {
    let mut out = HANDSHAKE_REPLY.to_vec();
    out.extend_from_slice(&version.to_le_bytes());
    out
}

pub fn encode_request(frame: &RequestFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + 4 * (frame.y_t.len() + frame.mel.len()));
    out.extend_from_slice(&REQUEST);
    out.extend_from_slice(&frame.noise_level.to_le_bytes());
    out.extend_from_slice(&(frame.y_t.len() as u32).to_le_bytes());
    put_f32s(&mut out, &frame.y_t);
    out.extend_from_slice(&frame.frames.to_le_bytes());
    out.extend_from_slice(&frame.bands.to_le_bytes());
    out.extend_from_slice(&u32::from(frame.log_mel).to_le_bytes());
    put_f32s(&mut out, &frame.mel);
    out
}

pub fn encode_response(eps: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * eps.len());
    out.extend_from_slice(&RESPONSE);
    out.extend_from_slice(&(eps.len() as u32).to_le_bytes());
    put_f32s(&mut out, eps);
    out
}

/// Server side: reads `"EPRD" version`.
pub fn read_handshake<R: Read>(r: &mut R) -> Result<u32> {
    expect_magic(r, HANDSHAKE)?;
    read_u32(r)
}

/// Client side: reads `"EPOK" version`.
pub fn read_handshake_reply<R: Read>(r: &mut R) -> Result<u32> {
    expect_magic(r, HANDSHAKE_REPLY)?;
    read_u32(r)
}

/// Server side: reads one request, or `None` if the stream closed cleanly
/// at a frame boundary.
pub fn read_request<R: Read>(r: &mut R) -> Result<Option<RequestFrame>> {
    let mut magic = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match r.read(&mut magic[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::Protocol("truncated frame magic".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    if magic != REQUEST {
        return Err(Error::Protocol(format!("unexpected request magic {:?}", String::from_utf8_lossy(&magic))));
    }
    let noise_level = read_f32(r)?;
    let n = read_len(r, "y_t")? as usize;
    let y_t = read_f32s(r, n)?;
    let frames = read_len(r, "frames")?;
    let bands = read_len(r, "bands")?;
    let log_mel = match read_u32(r)? {
        0 => false,
        1 => true,
        other => return Err(Error::Protocol(format!("log flag must be 0 or 1, got {other}"))),
    };
    let count = frames as u64 * bands as u64;
    if count > MAX_ELEMENTS as u64 {
        return Err(Error::Protocol(format!("mel payload {frames}×{bands} exceeds limit")));
    }
    let mel = read_f32s(r, count as usize)?;
    Ok(Some(RequestFrame { noise_level, y_t, frames, bands, log_mel, mel }))
}

/// Client side: reads `"ERS1" n eps[n]`.
pub fn read_response<R: Read>(r: &mut R) -> Result<Vec<f32>> {
    expect_magic(r, RESPONSE)?;
    let n = read_len(r, "response")? as usize;
    read_f32s(r, n)
}

pub fn write_all<W: Write>(w: &mut W, bytes: &[u8]) -> Result<()> {
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::PredictorUnavailable(format!("cannot write to predictor: {e}")))
}
