//! Chat-format supervision samples built from accepted trajectories.

use serde::{Deserialize, Serialize};

use super::{DatasetError, SampleRecord};
use crate::protocol::{
    normalize_action, render_followup_turn, render_initial_turn, render_system_prompt,
    serialize_tool_call, Action,
};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

/// One conversation. `images[i]` belongs to the i-th `<image>` placeholder
/// in user messages, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftSample {
    pub id: String,
    pub messages: Vec<ChatMessage>,
    pub images: Vec<String>,
}

/// Relative path of the mask shown after tool action `turn`.
pub fn mask_ref(t: &Trajectory, turn: usize) -> String {
    let paradigm = t.paradigm.map(|p| p.as_str()).unwrap_or("none");
    format!("masks/{}/{}-{:016x}/turn_{}.png", t.id, paradigm, t.seed, turn)
}

pub fn to_sft_sample(t: &Trajectory, record: &SampleRecord) -> Result<SftSample, DatasetError> {
    let invalid = |reason: String| DatasetError::InvalidTrajectory {
        id: t.id.clone(),
        reason,
    };
    if !t.accepted {
        return Err(invalid("trajectory was rejected by the IoU filter".into()));
    }
    if t.steps.is_empty() || t.steps.iter().any(|s| !s.action.is_tool()) {
        return Err(invalid("expected one or more tool actions and no stop".into()));
    }

    let image = record
        .image_path
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| format!("{}/image", record.id));
    let mut messages = vec![
        ChatMessage::new(Role::System, render_system_prompt()),
        ChatMessage::new(Role::User, render_initial_turn(&record.target)),
    ];
    let mut images = vec![image];
    for s in &t.steps {
        let a = normalize_action(&s.action, t.width, t.height).map_err(|e| invalid(e.to_string()))?;
        messages.push(ChatMessage::new(Role::Assistant, serialize_tool_call(&a)));
        messages.push(ChatMessage::new(Role::User, render_followup_turn()));
        images.push(mask_ref(t, s.turn));
    }
    messages.push(ChatMessage::new(Role::Assistant, serialize_tool_call(&Action::Stop)));
    Ok(SftSample {
        id: t.id.clone(),
        messages,
        images,
    })
}
