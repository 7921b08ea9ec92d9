//! Trajectory rewards and group-relative advantages. Everything here is a
//! pure function of recorded metrics, action counts and termination.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::Termination;
use crate::trajectory::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("{ratios} ratios but {advantages} advantages")]
    LengthMismatch { ratios: usize, advantages: usize },
    #[error("ratio {index} is {value}; ratios must be positive")]
    NonPositiveRatio { index: usize, value: f64 },
    #[error("epsilon {0} outside (0, 1)")]
    Epsilon(f64),
    #[error("group is empty")]
    EmptyGroup,
    #[error("invalid weight {field}: {reason}")]
    InvalidWeight { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub w_iou: f64,
    pub w_dice: f64,
    pub w1: f64,
    pub w2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_iou: 0.5,
            w_dice: 0.5,
            w1: 0.2,
            w2: 0.8,
            lambda1: 0.1,
            lambda2: 1.0,
            lambda3: 0.01,
            clip_lo: 0.0,
            clip_hi: 1.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), RewardError> {
        let fields = [
            ("w_iou", self.w_iou),
            ("w_dice", self.w_dice),
            ("w1", self.w1),
            ("w2", self.w2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("clip_lo", self.clip_lo),
            ("clip_hi", self.clip_hi),
        ];
        for (field, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(RewardError::InvalidWeight {
                    field,
                    reason: format!("{v} is not a finite nonnegative number"),
                });
            }
        }
        if self.clip_lo > self.clip_hi {
            return Err(RewardError::InvalidWeight {
                field: "clip_lo",
                reason: "exceeds clip_hi".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_fmt: f64,
    pub r_qual: f64,
    pub r_imp: f64,
    pub r_over: f64,
    pub r_cost: f64,
    pub r_total: f64,
}

/// The scoring-relevant summary of an episode or synthesized trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardInputs {
    /// IoU after each tool action.
    pub iou_series: Vec<f64>,
    pub final_iou: f64,
    pub final_dice: f64,
    pub tool_actions: usize,
    pub stopped: bool,
}

impl RewardInputs {
    pub fn from_trajectory(t: &Trajectory) -> Self {
        Self {
            iou_series: t.iou_series(),
            final_iou: t.final_iou,
            final_dice: t.final_dice,
            tool_actions: t.tool_action_count(),
            stopped: t.termination == Termination::Stopped,
        }
    }
}

/// Half a point for using a tool at all, half for finishing with a stop.
pub fn format_reward(tool_actions: usize, stopped: bool) -> f64 {
    0.5 * (tool_actions > 0) as u8 as f64 + 0.5 * stopped as u8 as f64
}

pub fn quality_reward(iou_final: f64, dice_final: f64, w: &RewardWeights) -> f64 {
    w.w_iou * iou_final + w.w_dice * dice_final
}

/// Sum of positive IoU increments.
pub fn improvement_bonus(iou_series: &[f64]) -> f64 {
    iou_series.windows(2).map(|p| (p[1] - p[0]).max(0.0)).sum()
}

/// Peak IoU minus final IoU.
pub fn overshoot_penalty(iou_series: &[f64]) -> f64 {
    match iou_series.last() {
        Some(&last) => iou_series.iter().copied().fold(f64::NEG_INFINITY, f64::max) - last,
        None => 0.0,
    }
}

/// Stop is free; every tool action costs one unit.
pub fn tool_cost(tool_actions: usize) -> f64 {
    tool_actions as f64
}

pub fn total_reward(inputs: &RewardInputs, w: &RewardWeights) -> RewardBreakdown {
    let r_fmt = format_reward(inputs.tool_actions, inputs.stopped);
    let r_qual = quality_reward(inputs.final_iou, inputs.final_dice, w);
    let r_imp = improvement_bonus(&inputs.iou_series);
    let r_over = overshoot_penalty(&inputs.iou_series);
    let r_cost = tool_cost(inputs.tool_actions);
    let inner = r_qual + w.lambda1 * r_imp - w.lambda2 * r_over - w.lambda3 * r_cost;
    let r_total = w.w1 * r_fmt + w.w2 * inner.clamp(w.clip_lo, w.clip_hi);
    RewardBreakdown {
        r_fmt,
        r_qual,
        r_imp,
        r_over,
        r_cost,
        r_total,
    }
}

pub fn score_trajectory(t: &Trajectory, w: &RewardWeights) -> RewardBreakdown {
    total_reward(&RewardInputs::from_trajectory(t), w)
}

/// Rewards standardized within the group (population std). Groups whose std
/// is below 1e-9 get all-zero advantages.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, RewardError> {
    if rewards.is_empty() {
        return Err(RewardError::EmptyGroup);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-9 {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl RolloutGroup {
    pub fn new(rewards: Vec<f64>) -> Result<Self, RewardError> {
        let advantages = group_advantages(&rewards)?;
        Ok(Self { rewards, advantages })
    }
}

/// Mean clipped surrogate objective over a group.
pub fn grpo_surrogate(ratios: &[f64], advantages: &[f64], epsilon: f64) -> Result<f64, RewardError> {
    if ratios.len() != advantages.len() {
        return Err(RewardError::LengthMismatch {
            ratios: ratios.len(),
            advantages: advantages.len(),
        });
    }
    if ratios.is_empty() {
        return Err(RewardError::EmptyGroup);
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(RewardError::Epsilon(epsilon));
    }
    let mut sum = 0.0;
    for (index, (&r, &a)) in ratios.iter().zip(advantages).enumerate() {
        if !(r > 0.0) {
            return Err(RewardError::NonPositiveRatio { index, value: r });
        }
        sum += surrogate_term(r, a, epsilon);
    }
    Ok(sum / ratios.len() as f64)
}

fn surrogate_term(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}
