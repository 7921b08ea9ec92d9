//! Trajectory JSONL. Actions are stored in `[0, 1000]` normalized
//! coordinates next to the image size needed to map them back to pixels.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{to_json_line, DatasetError};
use crate::protocol::toolcall::{action_from_json, tool_call_json, CoordLimits};
use crate::protocol::{denormalize_action, normalize_action, Termination};
use crate::trajectory::{Paradigm, Trajectory, TrajectoryStep};

#[derive(Debug, Serialize, Deserialize)]
struct StepRecord {
    turn: usize,
    action: Value,
    iou_after: f64,
    dice_after: f64,
    retries_used: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRecord {
    id: String,
    paradigm: Option<Paradigm>,
    seed: u64,
    width: usize,
    height: usize,
    steps: Vec<StepRecord>,
    final_iou: f64,
    final_dice: f64,
    accepted: bool,
    termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modality: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn invalid(t: &Trajectory, reason: impl ToString) -> DatasetError {
    DatasetError::InvalidTrajectory {
        id: t.id.clone(),
        reason: reason.to_string(),
    }
}

impl TrajectoryRecord {
    fn from_trajectory(t: &Trajectory) -> Result<Self, DatasetError> {
        let steps = t
            .steps
            .iter()
            .map(|s| {
                let action = normalize_action(&s.action, t.width, t.height).map_err(|e| invalid(t, e))?;
                Ok(StepRecord {
                    turn: s.turn,
                    action: serde_json::from_str(&tool_call_json(&action)).expect("canonical JSON"),
                    iou_after: s.iou_after,
                    dice_after: s.dice_after,
                    retries_used: s.retries_used,
                })
            })
            .collect::<Result<_, DatasetError>>()?;
        Ok(Self {
            id: t.id.clone(),
            paradigm: t.paradigm,
            seed: t.seed,
            width: t.width,
            height: t.height,
            steps,
            final_iou: t.final_iou,
            final_dice: t.final_dice,
            accepted: t.accepted,
            termination: t.termination,
            policy: t.policy.clone(),
            modality: t.modality.clone(),
            dataset: t.dataset.clone(),
            error: t.error.clone(),
        })
    }

    fn into_trajectory(self) -> Result<Trajectory, String> {
        if self.width == 0 || self.height == 0 {
            return Err("width and height must be positive".into());
        }
        let steps = self
            .steps
            .into_iter()
            .map(|s| {
                let normalized =
                    action_from_json(&s.action, CoordLimits::normalized()).map_err(|e| e.to_string())?;
                let action = denormalize_action(&normalized, self.width, self.height)
                    .map_err(|e| e.to_string())?;
                Ok(TrajectoryStep {
                    turn: s.turn,
                    action,
                    iou_after: s.iou_after,
                    dice_after: s.dice_after,
                    retries_used: s.retries_used,
                })
            })
            .collect::<Result<_, String>>()?;
        Ok(Trajectory {
            id: self.id,
            paradigm: self.paradigm,
            seed: self.seed,
            width: self.width,
            height: self.height,
            steps,
            final_iou: self.final_iou,
            final_dice: self.final_dice,
            accepted: self.accepted,
            termination: self.termination,
            policy: self.policy,
            modality: self.modality,
            dataset: self.dataset,
            error: self.error,
        })
    }
}

/// One JSONL line for `t`, newline included.
pub fn trajectory_line(t: &Trajectory) -> Result<String, DatasetError> {
    Ok(to_json_line(&TrajectoryRecord::from_trajectory(t)?))
}

/// The JSONL record for `t` as a JSON value, for embedding in reports.
pub fn trajectory_json(t: &Trajectory) -> Result<Value, DatasetError> {
    Ok(serde_json::to_value(TrajectoryRecord::from_trajectory(t)?).expect("record serializes"))
}

pub fn trajectories_to_string(trajs: &[Trajectory]) -> Result<String, DatasetError> {
    trajs.iter().map(trajectory_line).collect()
}

pub fn write_trajectories(trajs: &[Trajectory], path: &Path) -> Result<(), DatasetError> {
    let body = trajectories_to_string(trajs)?;
    let mut f = fs::File::create(path).map_err(|e| DatasetError::io(path, e))?;
    f.write_all(body.as_bytes())
        .map_err(|e| DatasetError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadMode {
    /// Fail on the first malformed line.
    #[default]
    Abort,
    /// Skip malformed lines and report them.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDiagnostic {
    pub line: usize,
    pub message: String,
}

pub fn parse_trajectory_line(line: &str) -> Result<Trajectory, String> {
    let rec: TrajectoryRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    rec.into_trajectory()
}

pub fn parse_trajectories(
    text: &str,
    mode: ReadMode,
    path: &Path,
) -> Result<(Vec<Trajectory>, Vec<LineDiagnostic>), DatasetError> {
    let mut out = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_trajectory_line(line) {
            Ok(t) => out.push(t),
            Err(message) => match mode {
                ReadMode::Abort => {
                    return Err(DatasetError::Line {
                        path: path.to_path_buf(),
                        line: i + 1,
                        reason: message,
                    })
                }
                ReadMode::Skip => diagnostics.push(LineDiagnostic {
                    line: i + 1,
                    message,
                }),
            },
        }
    }
    Ok((out, diagnostics))
}

pub fn read_trajectories(
    path: &Path,
    mode: ReadMode,
) -> Result<(Vec<Trajectory>, Vec<LineDiagnostic>), DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    parse_trajectories(&text, mode, path)
}
