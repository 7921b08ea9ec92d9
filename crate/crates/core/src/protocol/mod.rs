//! The tool-calling protocol between a policy and the environment.

pub mod action;
pub mod coords;
pub mod episode;
pub mod prompts;
pub mod toolcall;

pub use action::{Action, Polarity};
pub use coords::{denormalize_action, denormalize_coord, normalize_action, normalize_coord, CoordError};
pub use episode::{CoordMode, EpisodeConfig, EpisodeError, EpisodeState, Observation, Termination};
pub use prompts::{render_followup_turn, render_initial_turn, render_system_prompt, TOOLS_JSON};
pub use toolcall::{parse_tool_call, serialize_tool_call, CoordLimits, ToolCallError};
