//! Client for a segmentation model running in a subprocess.
//!
//! One process per session. Rolling back re-opens the session on the same
//! process and replays the kept prompts.

use std::time::Duration;

use super::wire::{decode_mask_b64, BackendReply, BackendRequest};
use super::{BackendError, BackendSample, PromptHistory, SegBackend, SegSession};
use crate::mask::Mask;
use crate::process::{LineError, LineProcess};
use crate::protocol::Action;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ExternalBackend {
    pub argv: Vec<String>,
    pub timeout: Duration,
}

impl ExternalBackend {
    pub fn new(argv: Vec<String>) -> Self {
        Self {
            argv,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl SegBackend for ExternalBackend {
    fn name(&self) -> String {
        format!("cmd:{}", self.argv.join(" "))
    }

    fn open(&self, sample: &BackendSample, seed: u64) -> Result<Box<dyn SegSession>, BackendError> {
        let process = LineProcess::spawn(&self.argv, self.timeout).map_err(|e| match e {
            LineError::Spawn { .. } => BackendError::Spawn(e.to_string()),
            other => line_error(other),
        })?;
        let mut session = ExternalSession {
            process,
            sample: sample.clone(),
            seed,
            history: PromptHistory::default(),
            prediction: Mask::new(sample.width, sample.height)?,
        };
        session.handshake()?;
        Ok(Box::new(session))
    }
}

fn line_error(e: LineError) -> BackendError {
    match e {
        LineError::Timeout(d) => BackendError::Timeout(d),
        LineError::Closed(msg) => BackendError::BrokenPipe(msg),
        LineError::Spawn { .. } => BackendError::Spawn(e.to_string()),
    }
}

pub struct ExternalSession {
    process: LineProcess,
    sample: BackendSample,
    seed: u64,
    history: PromptHistory,
    prediction: Mask,
}

impl ExternalSession {
    fn handshake(&mut self) -> Result<(), BackendError> {
        let open = BackendRequest::Open {
            sample_id: self.sample.id.clone(),
            width: self.sample.width,
            height: self.sample.height,
            image_path: self
                .sample
                .image_path
                .as_ref()
                .map(|p| p.display().to_string()),
            seed: self.seed,
        };
        let reply = self.process.request(&open.to_line()).map_err(|e| match e {
            LineError::Timeout(d) => BackendError::Timeout(d),
            other => BackendError::Handshake(other.to_string()),
        })?;
        match serde_json::from_str::<BackendReply>(&reply) {
            Ok(BackendReply::Ack) => Ok(()),
            Ok(BackendReply::Error { message }) => Err(BackendError::Handshake(message)),
            Ok(other) => Err(BackendError::Handshake(format!("expected ack, got {other:?}"))),
            Err(e) => Err(BackendError::Handshake(format!("unreadable ack: {e}"))),
        }
    }

    /// Sends one prompt and decodes the returned mask.
    pub fn roundtrip(&mut self, action: &Action) -> Result<Mask, BackendError> {
        let reply = self
            .process
            .request(&BackendRequest::prompt(action).to_line())
            .map_err(line_error)?;
        let reply: BackendReply = serde_json::from_str(&reply)
            .map_err(|e| BackendError::MalformedReply(format!("{e}: {reply:.80}")))?;
        match reply {
            BackendReply::Mask {
                width,
                height,
                data_b64,
            } => {
                let expected = (self.sample.width, self.sample.height);
                if (width, height) != expected {
                    return Err(BackendError::DimensionMismatch {
                        expected,
                        got: (width, height),
                    });
                }
                decode_mask_b64(width, height, &data_b64).map_err(BackendError::Decode)
            }
            BackendReply::Error { message } => Err(BackendError::Remote(message)),
            BackendReply::Ack => Err(BackendError::MalformedReply("expected a mask, got ack".into())),
        }
    }
}

impl SegSession for ExternalSession {
    fn apply(&mut self, action: &Action) -> Result<Mask, BackendError> {
        self.history
            .check_next(action, self.sample.width, self.sample.height)?;
        let mask = self.roundtrip(action)?;
        self.prediction = mask.clone();
        self.history.push(*action);
        Ok(mask)
    }

    fn prediction(&self) -> &Mask {
        &self.prediction
    }

    fn history(&self) -> &PromptHistory {
        &self.history
    }

    fn rollback(&mut self, keep: usize) -> Result<(), BackendError> {
        if keep >= self.history.len() {
            return Ok(());
        }
        let replay = self.history.as_slice()[..keep].to_vec();
        self.process
            .send(&BackendRequest::Close.to_line())
            .map_err(line_error)?;
        self.handshake()?;
        self.history.truncate(0);
        self.prediction = Mask::new(self.sample.width, self.sample.height)?;
        for a in &replay {
            self.apply(a)?;
        }
        Ok(())
    }
}

impl Drop for ExternalSession {
    fn drop(&mut self) {
        let _ = self.process.send(&BackendRequest::Close.to_line());
    }
}
