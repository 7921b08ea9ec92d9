//! Trajectory records shared by the synthesizer, the policy harness and the
//! reward engine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::protocol::{Action, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    BoxToPoint,
    SequentialClick,
}

impl Paradigm {
    pub fn as_str(self) -> &'static str {
        match self {
            Paradigm::BoxToPoint => "box_to_point",
            Paradigm::SequentialClick => "sequential_click",
        }
    }

    /// Paradigm implied by an opening action, if any.
    pub fn of_first_action(a: &Action) -> Option<Self> {
        match a {
            Action::AddBox { .. } => Some(Paradigm::BoxToPoint),
            Action::AddPoint { .. } => Some(Paradigm::SequentialClick),
            Action::Stop => None,
        }
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Paradigm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "box_to_point" => Ok(Paradigm::BoxToPoint),
            "sequential_click" => Ok(Paradigm::SequentialClick),
            other => Err(format!("unknown paradigm {other:?}")),
        }
    }
}

/// One recorded action. Coordinates are in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub turn: usize,
    pub action: Action,
    pub iou_after: f64,
    pub dice_after: f64,
    pub retries_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    pub paradigm: Option<Paradigm>,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub steps: Vec<TrajectoryStep>,
    pub final_iou: f64,
    pub final_dice: f64,
    pub accepted: bool,
    pub termination: Termination,
    /// Name of the policy that produced an evaluation episode.
    pub policy: Option<String>,
    pub modality: Option<String>,
    pub dataset: Option<String>,
    pub error: Option<String>,
}

impl Trajectory {
    pub fn tool_steps(&self) -> impl Iterator<Item = &TrajectoryStep> {
        self.steps.iter().filter(|s| s.action.is_tool())
    }

    /// Number of tool-invoking actions (stop excluded).
    pub fn tool_action_count(&self) -> usize {
        self.tool_steps().count()
    }

    /// IoU after each tool action, in order.
    pub fn iou_series(&self) -> Vec<f64> {
        self.tool_steps().map(|s| s.iou_after).collect()
    }

    pub fn box_count(&self) -> usize {
        self.steps.iter().filter(|s| s.action.is_box()).count()
    }

    /// Value of a grouping key: `id`, `paradigm`, `policy`, `modality` or
    /// `dataset`. Missing values map to `"unknown"`.
    pub fn group_value(&self, key: &str) -> Option<String> {
        let v = match key {
            "id" => Some(self.id.clone()),
            "paradigm" => self.paradigm.map(|p| p.to_string()),
            "policy" => self.policy.clone(),
            "modality" => self.modality.clone(),
            "dataset" => self.dataset.clone(),
            _ => return None,
        };
        Some(v.unwrap_or_else(|| "unknown".to_owned()))
    }
}

pub const GROUP_KEYS: [&str; 5] = ["id", "paradigm", "policy", "modality", "dataset"];
