//! The episode state machine: one reply in, one observation out.
//!
//! A tool action is forwarded to the backend and its mask becomes the new
//! observation. `stop_action` ends the episode and the last observation is
//! carried forward unchanged. The turn budget counts tool actions only: after
//! `max_turns` of them the policy may still stop, but any further tool call
//! ends the episode as budget-exhausted without reaching the backend.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::action::Action;
use super::coords::denormalize_action;
use super::toolcall::{parse_tool_call, CoordLimits};
use crate::backend::SegSession;
use crate::mask::{dice, iou, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stopped,
    BudgetExhausted,
    ParseFailure,
    BackendError,
    PolicyError,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Stopped => "stopped",
            Termination::BudgetExhausted => "budget_exhausted",
            Termination::ParseFailure => "parse_failure",
            Termination::BackendError => "backend_error",
            Termination::PolicyError => "policy_error",
        }
    }
}

/// Coordinate space of the coordinates a policy writes in its tool calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoordMode {
    Pixel,
    #[default]
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub max_turns: usize,
    pub target: String,
    pub width: usize,
    pub height: usize,
    pub coord_mode: CoordMode,
}

impl EpisodeConfig {
    pub const DEFAULT_MAX_TURNS: usize = 5;

    pub fn new(target: impl Into<String>, width: usize, height: usize) -> Self {
        Self {
            max_turns: Self::DEFAULT_MAX_TURNS,
            target: target.into(),
            width,
            height,
            coord_mode: CoordMode::Normalized,
        }
    }

    fn limits(&self) -> CoordLimits {
        match self.coord_mode {
            CoordMode::Pixel => CoordLimits::pixels(self.width, self.height),
            CoordMode::Normalized => CoordLimits::normalized(),
        }
    }
}

/// An executed action (pixel coordinates) and the mask it left behind.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub action: Action,
    pub mask: Mask,
    pub iou: f64,
    pub dice: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EpisodeError {
    #[error("episode already finished ({})", .0.as_str())]
    Finished(Termination),
    #[error("config max_turns must be at least 1")]
    ZeroTurns,
    #[error("ground truth is {got:?} but the episode is {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
}

#[derive(Debug, Clone)]
pub struct EpisodeState {
    config: EpisodeConfig,
    gt: Mask,
    initial: Observation,
    history: Vec<Observation>,
    turn: usize,
    termination: Option<Termination>,
    failure: Option<String>,
}

impl EpisodeState {
    pub fn new(config: EpisodeConfig, gt: Mask) -> Result<Self, EpisodeError> {
        if config.max_turns == 0 {
            return Err(EpisodeError::ZeroTurns);
        }
        if gt.dims() != (config.width, config.height) {
            return Err(EpisodeError::DimensionMismatch {
                expected: (config.width, config.height),
                got: gt.dims(),
            });
        }
        let empty = Mask::new(gt.width(), gt.height()).expect("gt has nonzero area");
        let initial = Observation {
            action: Action::Stop,
            iou: iou(&empty, &gt).unwrap(),
            dice: dice(&empty, &gt).unwrap(),
            mask: empty,
        };
        Ok(Self {
            config,
            gt,
            initial,
            history: Vec::new(),
            turn: 0,
            termination: None,
            failure: None,
        })
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn ground_truth(&self) -> &Mask {
        &self.gt
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }

    /// Number of tool actions executed so far.
    pub fn turn(&self) -> usize {
        self.turn
    }

    pub fn is_done(&self) -> bool {
        self.termination.is_some()
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    /// Why the episode ended abnormally, if it did.
    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref()
    }

    /// The latest observation; an empty mask before the first action.
    pub fn current(&self) -> &Observation {
        self.history.last().unwrap_or(&self.initial)
    }

    /// Ends the episode for a reason outside the reply itself.
    pub fn abort(&mut self, cause: Termination, reason: impl Into<String>) {
        if self.termination.is_none() {
            self.termination = Some(cause);
            self.failure = Some(reason.into());
        }
    }

    /// Consumes one policy reply.
    pub fn step(&mut self, reply: &str, session: &mut dyn SegSession) -> Result<(), EpisodeError> {
        if let Some(t) = self.termination {
            return Err(EpisodeError::Finished(t));
        }
        let action = match parse_tool_call(reply, self.config.limits()) {
            Ok(a) => a,
            Err(e) => {
                self.abort(Termination::ParseFailure, e.to_string());
                return Ok(());
            }
        };
        if action == Action::Stop {
            let carried = Observation {
                action,
                ..self.current().clone()
            };
            self.history.push(carried);
            self.termination = Some(Termination::Stopped);
            return Ok(());
        }
        if self.turn >= self.config.max_turns {
            self.abort(
                Termination::BudgetExhausted,
                format!("tool call after {} turns", self.config.max_turns),
            );
            return Ok(());
        }
        let pixel_action = match self.config.coord_mode {
            CoordMode::Pixel => action,
            CoordMode::Normalized => {
                denormalize_action(&action, self.config.width, self.config.height)
                    .expect("parser bounds normalized coordinates")
            }
        };
        match session.apply(&pixel_action) {
            Ok(mask) => {
                if mask.dims() != self.gt.dims() {
                    self.abort(Termination::BackendError, "backend mask has wrong dimensions");
                    return Ok(());
                }
                self.history.push(Observation {
                    action: pixel_action,
                    iou: iou(&mask, &self.gt).unwrap(),
                    dice: dice(&mask, &self.gt).unwrap(),
                    mask,
                });
                self.turn += 1;
            }
            Err(e) => self.abort(Termination::BackendError, e.to_string()),
        }
        Ok(())
    }
}
