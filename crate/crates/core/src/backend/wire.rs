//! Line-delimited JSON messages exchanged with an external backend, and the
//! bit-packed mask payload they carry.
//!
//! Masks travel as base64 of row-major bits, least significant bit first
//! within each byte, every row padded to a whole byte.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::mask::Mask;
use crate::protocol::toolcall::{action_from_json, tool_call_json, CoordLimits, ToolCallError};
use crate::protocol::Action;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BackendRequest {
    Open {
        sample_id: String,
        width: usize,
        height: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        image_path: Option<String>,
        #[serde(default)]
        seed: u64,
    },
    Prompt {
        action: Value,
    },
    Close,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BackendReply {
    Ack,
    Mask {
        width: usize,
        height: usize,
        data_b64: String,
    },
    Error {
        message: String,
    },
}

impl BackendRequest {
    /// A prompt message carrying `action` in raw pixel coordinates.
    pub fn prompt(action: &Action) -> Self {
        let action = serde_json::from_str(&tool_call_json(action))
            .expect("canonical tool call JSON is valid");
        BackendRequest::Prompt { action }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("wire messages always serialize")
    }
}

impl BackendReply {
    pub fn mask(m: &Mask) -> Self {
        BackendReply::Mask {
            width: m.width(),
            height: m.height(),
            data_b64: encode_mask_b64(m),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("wire messages always serialize")
    }
}

/// Decodes a prompt's action for an image of the given size.
pub fn prompt_action(value: &Value, width: usize, height: usize) -> Result<Action, ToolCallError> {
    action_from_json(value, CoordLimits::pixels(width, height))
}

pub fn pack_mask(m: &Mask) -> Vec<u8> {
    let stride = m.width().div_ceil(8);
    let mut out = vec![0u8; stride * m.height()];
    for p in m.foreground() {
        out[p.y * stride + p.x / 8] |= 1 << (p.x % 8);
    }
    out
}

pub fn unpack_mask(width: usize, height: usize, bytes: &[u8]) -> Result<Mask, String> {
    let stride = width.div_ceil(8);
    if bytes.len() != stride * height {
        return Err(format!(
            "expected {} bytes for {width}x{height}, got {}",
            stride * height,
            bytes.len()
        ));
    }
    Mask::from_fn(width, height, |x, y| bytes[y * stride + x / 8] >> (x % 8) & 1 == 1)
        .map_err(|e| e.to_string())
}

pub fn encode_mask_b64(m: &Mask) -> String {
    STANDARD.encode(pack_mask(m))
}

pub fn decode_mask_b64(width: usize, height: usize, data: &str) -> Result<Mask, String> {
    let bytes = STANDARD.decode(data).map_err(|e| e.to_string())?;
    unpack_mask(width, height, &bytes)
}
