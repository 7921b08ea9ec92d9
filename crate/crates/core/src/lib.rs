//! Deterministic interactive-segmentation environment: binary-mask
//! mathematics, segmentation backends, expert trajectory synthesis, process
//! rewards with group-relative advantages, and the tool-call protocol that
//! connects a policy to all of it.

pub mod backend;
pub mod dataset;
pub mod doubles;
pub mod fixtures;
pub mod harness;
pub mod mask;
pub mod process;
pub mod protocol;
pub mod reward;
pub mod rng;
pub mod synth;
pub mod trajectory;
