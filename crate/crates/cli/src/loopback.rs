//! A reference predictor server speaking the wire protocol, used to test
//! the external-predictor client end to end without any other language
//! runtime. The `pavoc-loopback-predictor` binary serves it over stdio.

use std::io::{Read, Write};

use pavoc::diffusion::NoiseSchedule;
use pavoc::predictor::protocol::{self, RequestFrame, PROTOCOL_VERSION};
use pavoc::{Error, Result};

#[derive(Debug, Clone)]
pub enum LoopbackMode {
    /// All-zero noise estimates.
    Zero,
    /// `(y_t − sqrt(ᾱ_t)·y0) / sqrt(1 − ᾱ_t)` for a fixed reference.
    Oracle { y0: Vec<f64>, schedule: NoiseSchedule },
}

/// Deliberate failures for exercising client error paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Misbehavior {
    #[default]
    None,
    /// Reply with an unknown frame magic.
    BadMagic,
    /// Reply with one sample fewer than requested.
    WrongLength,
    /// Read the request and never answer.
    Hang,
}

#[derive(Debug, Clone)]
pub struct LoopbackServer {
    pub mode: LoopbackMode,
    /// Exit, without answering, upon receiving request number `n + 1`.
    pub exit_after: Option<usize>,
    pub misbehavior: Misbehavior,
}

impl LoopbackServer {
    pub fn new(mode: LoopbackMode) -> Self {
        Self { mode, exit_after: None, misbehavior: Misbehavior::None }
    }

    /// Noise estimate for one request, in float64 from the float32 payload.
    pub fn respond(&self, request: &RequestFrame) -> Result<Vec<f32>> {
        match &self.mode {
            LoopbackMode::Zero => Ok(vec![0.0; request.y_t.len()]),
            LoopbackMode::Oracle { y0, schedule } => {
                if y0.len() != request.y_t.len() {
                    return Err(Error::InvalidArgument(format!(
                        "reference has {} samples, request has {}",
                        y0.len(),
                        request.y_t.len()
                    )));
                }
                // The level arrives as float32; match it against the
                // float32-rounded levels of the schedule.
                let level = request.noise_level as f64;
                let t = (1..=schedule.steps())
                    .min_by(|&a, &b| {
                        let da = (schedule.noise_level(a) - level).abs();
                        let db = (schedule.noise_level(b) - level).abs();
                        da.total_cmp(&db)
                    })
                    .filter(|&t| (schedule.noise_level(t) - level).abs() <= 1e-6)
                    .ok_or_else(|| Error::InvalidArgument(format!("noise level {level} matches no step")))?;
                let ab = schedule.alpha_bar(t);
                let (a, s) = (ab.sqrt(), (1.0 - ab).sqrt());
                Ok(request.y_t.iter().zip(y0).map(|(&y, &x)| ((y as f64 - a * x) / s) as f32).collect())
            }
        }
    }

    /// Serves until the client closes the stream. Returns the number of
    /// requests answered, or an error for protocol violations.
    pub fn serve<R: Read, W: Write>(&self, mut reader: R, mut writer: W) -> Result<usize> {
        let version = protocol::read_handshake(&mut reader)?;
        protocol::write_all(&mut writer, &protocol::encode_handshake_reply(PROTOCOL_VERSION))?;
        if version != PROTOCOL_VERSION {
            return Err(Error::Protocol(format!("client speaks protocol version {version}")));
        }
        let mut answered = 0;
        while let Some(request) = protocol::read_request(&mut reader)? {
            if self.exit_after == Some(answered) {
                return Ok(answered);
            }
            let eps = self.respond(&request)?;
            let bytes = match self.misbehavior {
                Misbehavior::None => protocol::encode_response(&eps),
                Misbehavior::BadMagic => {
                    let mut b = protocol::encode_response(&eps);
                    b[..4].copy_from_slice(b"NOPE");
                    b
                }
                Misbehavior::WrongLength => protocol::encode_response(&eps[..eps.len().saturating_sub(1)]),
                Misbehavior::Hang => loop {
                    std::thread::park();
                },
            };
            protocol::write_all(&mut writer, &bytes)?;
            answered += 1;
        }
        Ok(answered)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pavoc::dsp::MelSpectrogram;
    use pavoc::predictor::{oracle_predict, ExternalPredictor, NoisePredictor, PredictorRequest};
    use std::time::Duration;

    fn connect(server: LoopbackServer) -> ExternalPredictor {
        let (client_read, server_write) = std::io::pipe().unwrap();
        let (server_read, client_write) = std::io::pipe().unwrap();
        std::thread::spawn(move || server.serve(server_read, server_write));
        ExternalPredictor::connect(client_read, client_write, false, Duration::from_secs(5)).unwrap()
    }

    #[test]
    fn oracle_matches_in_process_oracle() {
        let schedule = NoiseSchedule::geometric_six();
        let y0: Vec<f64> = (0..500).map(|n| (0.03 * n as f64).sin() * 0.4).collect();
        let mut client = connect(LoopbackServer::new(LoopbackMode::Oracle { y0: y0.clone(), schedule: schedule.clone() }));
        let mel = MelSpectrogram::zeros(3, 4);
        for t in 1..=6 {
            let y_t: Vec<f64> = y0.iter().enumerate().map(|(i, v)| v * 0.9 + 0.1 * ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
            let req = PredictorRequest { y_t: &y_t, mel: &mel, noise_level: schedule.noise_level(t) };
            let remote = client.predict(&req).unwrap();
            // Transport rounds y_t to float32; compare against the oracle of the rounded input.
            let rounded: Vec<f64> = y_t.iter().map(|&v| v as f32 as f64).collect();
            let local = oracle_predict(&PredictorRequest { y_t: &rounded, ..req }, &y0, &schedule).unwrap();
            let num: f64 = remote.iter().zip(&local).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = local.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den < 1e-6, "t={t}: {}", num / den);
        }
    }

    #[test]
    fn misbehaviors_map_to_client_errors() {
        let mel = MelSpectrogram::zeros(1, 1);
        let y = vec![0.5; 8];
        let req = PredictorRequest { y_t: &y, mel: &mel, noise_level: 0.5 };
        let cases = [
            (Misbehavior::BadMagic, None),
            (Misbehavior::WrongLength, None),
            (Misbehavior::None, Some(0)),
        ];
        for (misbehavior, exit_after) in cases {
            let mut client = connect(LoopbackServer { mode: LoopbackMode::Zero, exit_after, misbehavior });
            let err = client.predict(&req).unwrap_err();
            assert!(err.is_predictor_failure(), "{misbehavior:?}: {err}");
        }
        let mut ok = connect(LoopbackServer::new(LoopbackMode::Zero));
        assert_eq!(ok.predict(&req).unwrap(), vec![0.0; 8]);
    }
}
