//! A policy living in a subprocess, spoken to in line-delimited JSON.
//!
//! The harness sends `start` and waits for `{"type":"ready"}`, then sends one
//! `turn` message per decision and reads one reply line: either the raw reply
//! text or a JSON string literal holding it (for replies with newlines). An
//! `end` message closes the episode.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Policy, PolicyError, PolicyFactory, TurnContext};
use crate::dataset::{to_json_string, LoadedSample};
use crate::process::{LineError, LineProcess};
use crate::protocol::{render_followup_turn, render_initial_turn, render_system_prompt, CoordMode, EpisodeConfig, Termination};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PolicyMessage {
    Start {
        sample_id: String,
        target: String,
        width: usize,
        height: usize,
        max_turns: usize,
        coord_mode: String,
        seed: u64,
    },
    Turn {
        turn: usize,
        system: String,
        prompt: String,
        iou: f64,
        dice: f64,
        mask_path: Option<String>,
    },
    End {
        termination: Termination,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PolicyHello {
    Ready,
}

#[derive(Debug, Clone)]
pub struct ExternalPolicyFactory {
    pub argv: Vec<String>,
    pub timeout: Duration,
}

impl ExternalPolicyFactory {
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

fn line_error(e: LineError) -> PolicyError {
    match e {
        LineError::Spawn { .. } => PolicyError::Spawn(e.to_string()),
        LineError::Timeout(d) => PolicyError::Timeout(d),
        LineError::Closed(m) => PolicyError::Closed(m),
    }
}

impl PolicyFactory for ExternalPolicyFactory {
    fn name(&self) -> String {
        format!("cmd:{}", self.argv.join(" "))
    }

    fn start(
        &self,
        sample: &LoadedSample,
        config: &EpisodeConfig,
        seed: u64,
    ) -> Result<Box<dyn Policy>, PolicyError> {
        let mut process = LineProcess::spawn(&self.argv, self.timeout).map_err(line_error)?;
        let start = PolicyMessage::Start {
            sample_id: sample.id().to_owned(),
            target: config.target.clone(),
            width: config.width,
            height: config.height,
            max_turns: config.max_turns,
            coord_mode: match config.coord_mode {
                CoordMode::Pixel => "pixel",
                CoordMode::Normalized => "normalized",
            }
            .to_owned(),
            seed,
        };
        let reply = process.request(&to_json_string(&start)).map_err(line_error)?;
        match serde_json::from_str::<PolicyHello>(&reply) {
            Ok(PolicyHello::Ready) => Ok(Box::new(ExternalPolicy { process })),
            Err(e) => Err(PolicyError::Handshake(format!("expected ready, got {reply:?}: {e}"))),
        }
    }
}

pub struct ExternalPolicy {
    process: LineProcess,
}

/// Decodes a reply line: a JSON string literal is unwrapped, anything else is
/// taken verbatim.
pub fn decode_reply(line: &str) -> String {
    if line.trim_start().starts_with('"') {
        if let Ok(s) = serde_json::from_str::<String>(line) {
            return s;
        }
    }
    line.to_owned()
}

impl Policy for ExternalPolicy {
    fn reply(&mut self, ctx: &TurnContext<'_>) -> Result<String, PolicyError> {
        let prompt = if ctx.history.is_empty() {
            render_initial_turn(&ctx.config.target)
        } else {
            render_followup_turn()
        };
        let msg = PolicyMessage::Turn {
            turn: ctx.turn,
            system: render_system_prompt(),
            prompt,
            iou: ctx.current.iou,
            dice: ctx.current.dice,
            mask_path: ctx.mask_path.map(str::to_owned),
        };
        let line = self.process.request(&to_json_string(&msg)).map_err(line_error)?;
        Ok(decode_reply(&line))
    }

    fn finish(&mut self, termination: Termination) {
        let _ = self
            .process
            .send(&to_json_string(&PolicyMessage::End { termination }));
    }
}
