//! Interactive segmentation backends.
//!
//! A backend turns the running prompt history of a session into a mask.
//! [`OracleBackend`] is a rule-based, ground-truth-aware stand-in that needs
//! no model weights; [`ExternalBackend`] drives a real model living in a
//! subprocess over line-delimited JSON.

use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::mask::{Mask, MaskError, PixelCoord};
use crate::protocol::Action;

pub mod external;
pub mod oracle;
pub mod wire;

pub use external::ExternalBackend;
pub use oracle::{OracleBackend, OracleParams, OracleSession};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("stop_action is not a segmentation prompt")]
    StopPrompt,
    #[error("a box prompt is only allowed as the first prompt of a session")]
    BoxNotFirst,
    #[error("prompt coordinate ({x}, {y}) is outside the {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("sample {0} has no ground-truth mask")]
    MissingGroundTruth(String),
    #[error("failed to start backend process: {0}")]
    Spawn(String),
    #[error("backend handshake failed: {0}")]
    Handshake(String),
    #[error("backend did not reply within {0:?}")]
    Timeout(Duration),
    #[error("backend pipe closed: {0}")]
    BrokenPipe(String),
    #[error("malformed backend reply: {0}")]
    MalformedReply(String),
    #[error("backend mask is {got:?}, expected {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("cannot decode backend mask payload: {0}")]
    Decode(String),
    #[error("backend reported an error: {0}")]
    Remote(String),
    #[error(transparent)]
    Mask(#[from] MaskError),
}

/// What a backend needs to know about a sample.
#[derive(Debug, Clone)]
pub struct BackendSample {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub gt: Option<Mask>,
    pub image_path: Option<PathBuf>,
}

impl BackendSample {
    pub fn from_gt(id: impl Into<String>, gt: Mask) -> Self {
        Self {
            id: id.into(),
            width: gt.width(),
            height: gt.height(),
            gt: Some(gt),
            image_path: None,
        }
    }
}

/// Prompts applied so far in a session: box or point actions only, with at
/// most one box and only in first position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptHistory {
    prompts: Vec<Action>,
}

impl PromptHistory {
    pub fn as_slice(&self) -> &[Action] {
        &self.prompts
    }

    pub fn len(&self) -> usize {
        self.prompts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty()
    }

    /// Checks that `a` may legally be appended for an image of the given size.
    pub fn check_next(&self, a: &Action, width: usize, height: usize) -> Result<(), BackendError> {
        let in_bounds = |x: u32, y: u32| {
            if (x as usize) < width && (y as usize) < height {
                Ok(())
            } else {
                Err(BackendError::OutOfBounds {
                    x: x as usize,
                    y: y as usize,
                    width,
                    height,
                })
            }
        };
        match *a {
            Action::Stop => Err(BackendError::StopPrompt),
            Action::AddBox { bbox: [x1, y1, x2, y2] } => {
                if !self.prompts.is_empty() {
                    return Err(BackendError::BoxNotFirst);
                }
                in_bounds(x1, y1)?;
                in_bounds(x2, y2)
            }
            Action::AddPoint { point: [x, y], .. } => in_bounds(x, y),
        }
    }

    pub(crate) fn push(&mut self, a: Action) {
        debug_assert!(a.is_tool());
        debug_assert!(!a.is_box() || self.prompts.is_empty());
        self.prompts.push(a);
    }

    pub(crate) fn truncate(&mut self, len: usize) {
        self.prompts.truncate(len);
    }
}

/// One live interaction with a backend. Single owner; not shared between
/// threads while in use.
pub trait SegSession: Send {
    /// Applies a prompt and returns the new prediction.
    fn apply(&mut self, action: &Action) -> Result<Mask, BackendError>;

    fn prediction(&self) -> &Mask;

    fn history(&self) -> &PromptHistory;

    /// Drops every prompt after the first `keep`, restoring the prediction
    /// those prompts produced.
    fn rollback(&mut self, keep: usize) -> Result<(), BackendError>;
}

/// Opens sessions. Implementations are shareable across worker threads.
pub trait SegBackend: Send + Sync {
    fn name(&self) -> String;

    fn open(&self, sample: &BackendSample, seed: u64) -> Result<Box<dyn SegSession>, BackendError>;
}

pub(crate) fn pixel(x: u32, y: u32) -> PixelCoord {
    PixelCoord::new(x as usize, y as usize)
}
