//! Persistence: sample manifests, PNG masks, trajectory JSONL, SFT chat
//! samples and the fixed-precision JSON writer they share.

use std::path::PathBuf;

use thiserror::Error;

pub mod json;
pub mod png;
pub mod sample;
pub mod sft;
pub mod trajectories;

pub use json::{to_json_line, to_json_string};
pub use png::{load_mask, store_mask};
pub use sample::{load_manifest, load_samples, write_manifest, LoadedSample, SampleRecord};
pub use sft::{to_sft_sample, ChatMessage, Role, SftSample};
pub use trajectories::{read_trajectories, trajectory_json, write_trajectories, LineDiagnostic, ReadMode};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: cannot decode PNG: {reason}")]
    Png { path: PathBuf, reason: String },
    #[error("{path}: expected an 8-bit single-channel PNG, found {color}")]
    NotGrayscale { path: PathBuf, color: String },
    #[error("{path}: image has zero area")]
    ZeroArea { path: PathBuf },
    #[error("sample {0}: ground-truth mask is empty")]
    EmptyMask(String),
    #[error("sample {id}: mask is {mask:?} but image is {image:?}")]
    DimensionMismatch {
        id: String,
        mask: (usize, usize),
        image: (usize, usize),
    },
    #[error("{path}:{line}: {reason}")]
    Line {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("trajectory {id}: {reason}")]
    InvalidTrajectory { id: String, reason: String },
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}
