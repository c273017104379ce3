use std::io::{Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::protocol::{self, RequestFrame, PROTOCOL_VERSION};
use super::{check_output, NoisePredictor, PredictorRequest};
use crate::dsp::log_compress;
use crate::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

enum Incoming {
    Handshake(u32),
    Response(Vec<f32>),
}

/// Client for a predictor running in another process (or any byte stream
/// pair) speaking [`protocol`]. One request is in flight at a time.
pub struct ExternalPredictor {
    writer: Option<Box<dyn Write + Send>>,
    incoming: Receiver<Result<Incoming>>,
    reader: Option<JoinHandle<()>>,
    child: Option<Child>,
    timeout: Duration,
    log_mel: bool,
    broken: Option<String>,
}

impl std::fmt::Debug for ExternalPredictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalPredictor")
            .field("pid", &self.child.as_ref().map(Child::id))
            .field("timeout", &self.timeout)
            .field("log_mel", &self.log_mel)
            .finish()
    }
}

impl ExternalPredictor {
    /// Runs `command_line` through `sh -c exec …` and completes the handshake.
    pub fn spawn_shell(command_line: &str, log_mel: bool, timeout: Duration) -> Result<Self> {
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(format!("exec {command_line}"));
        Self::spawn(cmd, log_mel, timeout)
    }

    pub fn spawn(mut command: Command, log_mel: bool, timeout: Duration) -> Result<Self> {
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::PredictorUnavailable(format!("cannot start predictor: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut predictor = Self::with_streams(stdout, stdin, log_mel, timeout);
        predictor.child = Some(child);
        predictor.handshake()?;
        Ok(predictor)
    }

    /// Wraps an already-connected stream pair and completes the handshake.
    pub fn connect<R, W>(reader: R, writer: W, log_mel: bool, timeout: Duration) -> Result<Self>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let mut predictor = Self::with_streams(reader, writer, log_mel, timeout);
        predictor.handshake()?;
        Ok(predictor)
    }

    fn with_streams<R, W>(mut reader: R, writer: W, log_mel: bool, timeout: Duration) -> Self
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        let handle = thread::spawn(move || {
            let first = protocol::read_handshake_reply(&mut reader).map(Incoming::Handshake);
            let ok = first.is_ok();
            if tx.send(first).is_err() || !ok {
                return;
            }
            loop {
                let msg = protocol::read_response(&mut reader).map(Incoming::Response);
                let stop = msg.is_err();
                if tx.send(msg).is_err() || stop {
                    return;
                }
            }
        });
        Self {
            writer: Some(Box::new(writer)),
            incoming: rx,
            reader: Some(handle),
            child: None,
            timeout,
            log_mel,
            broken: None,
        }
    }

    fn send(&mut self, bytes: &[u8]) -> Result<()> {
        let writer = self.writer.as_mut().ok_or_else(|| Error::PredictorUnavailable("predictor closed".into()))?;
        protocol::write_all(writer, bytes)
    }

    fn receive(&mut self) -> Result<Incoming> {
        match self.incoming.recv_timeout(self.timeout) {
            Ok(msg) => msg,
            Err(RecvTimeoutError::Timeout) => Err(Error::PredictorUnavailable(format!(
                "no reply within {:?}",
                self.timeout
            ))),
            Err(RecvTimeoutError::Disconnected) => Err(Error::PredictorUnavailable("predictor stream closed".into())),
        }
    }

    fn handshake(&mut self) -> Result<()> {
        self.send(&protocol::encode_handshake(PROTOCOL_VERSION))?;
        match self.receive()? {
            Incoming::Handshake(PROTOCOL_VERSION) => Ok(()),
            Incoming::Handshake(v) => Err(Error::Protocol(format!("predictor speaks protocol version {v}"))),
            Incoming::Response(_) => Err(Error::Protocol("response received before handshake".into())),
        }
    }

    fn exchange(&mut self, request: &PredictorRequest<'_>) -> Result<Vec<f64>> {
        let mel: Vec<f32> = if self.log_mel {
            log_compress(request.mel).into_iter().map(|v| v as f32).collect()
        } else {
            request.mel.data().iter().map(|v| *v as f32).collect()
        };
        let frame = RequestFrame {
            noise_level: request.noise_level as f32,
            y_t: request.y_t.iter().map(|v| *v as f32).collect(),
            frames: request.mel.frames() as u32,
            bands: request.mel.bands() as u32,
            log_mel: self.log_mel,
            mel,
        };
        self.send(&protocol::encode_request(&frame))?;
        match self.receive()? {
            Incoming::Response(eps) => Ok(eps.into_iter().map(f64::from).collect()),
            Incoming::Handshake(_) => Err(Error::Protocol("unexpected handshake reply".into())),
        }
    }
}

impl NoisePredictor for ExternalPredictor {
    fn predict(&mut self, request: &PredictorRequest<'_>) -> Result<Vec<f64>> {
        if let Some(reason) = &self.broken {
            return Err(Error::PredictorUnavailable(reason.clone()));
        }
        request.validate()?;
        let result = self.exchange(request).and_then(|eps| {
            check_output(request, &eps)?;
            Ok(eps)
        });
        if let Err(e) = &result {
            // The stream position is unknown after any failure.
            self.broken = Some(e.to_string());
        }
        result
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        self.writer.take();
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
        if let Some(handle) = self.reader.take() {
            if handle.is_finished() {
                let _ = handle.join();
            }
        }
    }
}
