//! Multi-turn episodes: a policy produces replies, the episode state machine
//! executes them against a backend session, and the outcome is recorded as a
//! trajectory.

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::backend::SegBackend;
use crate::dataset::{store_mask, DatasetError, LoadedSample};
use crate::mask::Mask;
use crate::protocol::{
    normalize_action, serialize_tool_call, Action, CoordMode, EpisodeConfig, EpisodeState, Observation,
    Termination,
};
use crate::rng::derive_seed;
use crate::trajectory::{Paradigm, Trajectory, TrajectoryStep};

pub mod external;
pub mod scripted;
pub mod stats;

pub use external::{ExternalPolicy, ExternalPolicyFactory};
pub use scripted::{GreedyHybrid, ScriptedKind, ScriptedPolicyFactory};
pub use stats::{aggregate_metrics, turn_stats, GroupMetrics, TurnRow, TurnStats};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy needs ground truth for sample {0}")]
    MissingGroundTruth(String),
    #[error("cannot start policy: {0}")]
    Spawn(String),
    #[error("policy handshake failed: {0}")]
    Handshake(String),
    #[error("policy did not reply within {0:?}")]
    Timeout(std::time::Duration),
    #[error("policy pipe closed: {0}")]
    Closed(String),
    #[error("policy failed: {0}")]
    Internal(String),
}

/// What a policy sees before each reply.
#[derive(Debug, Clone, Copy)]
pub struct TurnContext<'a> {
    pub config: &'a EpisodeConfig,
    /// Tool actions executed so far.
    pub turn: usize,
    pub history: &'a [Observation],
    pub current: &'a Observation,
    /// Where the current mask was written, when masks are being persisted.
    pub mask_path: Option<&'a str>,
}

impl TurnContext<'_> {
    /// Executed tool actions, in order, in pixel coordinates.
    pub fn executed(&self) -> impl Iterator<Item = &Action> {
        self.history.iter().map(|o| &o.action).filter(|a| a.is_tool())
    }

    /// The reply text for `a` in this episode's coordinate mode, together with
    /// the pixel action the episode will actually execute for it.
    pub fn encode(&self, a: &Action) -> (String, Action) {
        match self.config.coord_mode {
            CoordMode::Pixel => (serialize_tool_call(a), *a),
            CoordMode::Normalized => {
                let (w, h) = (self.config.width, self.config.height);
                let n = normalize_action(a, w, h).expect("pixel action inside the image");
                let back = crate::protocol::denormalize_action(&n, w, h).expect("normalized range");
                (serialize_tool_call(&n), back)
            }
        }
    }
}

/// One policy instance plays one episode.
pub trait Policy: Send {
    fn reply(&mut self, ctx: &TurnContext<'_>) -> Result<String, PolicyError>;

    /// Called once when the episode ends. Errors are ignored.
    fn finish(&mut self, _termination: Termination) {}
}

pub trait PolicyFactory: Send + Sync {
    fn name(&self) -> String;

    fn start(
        &self,
        sample: &LoadedSample,
        config: &EpisodeConfig,
        seed: u64,
    ) -> Result<Box<dyn Policy>, PolicyError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub max_turns: usize,
    pub coord_mode: CoordMode,
    /// Final IoU at or above which an episode is marked accepted.
    pub accept_iou: f64,
    /// Directory for per-turn mask PNGs handed to policies.
    pub mask_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_turns: EpisodeConfig::DEFAULT_MAX_TURNS,
            coord_mode: CoordMode::Normalized,
            accept_iou: 0.7,
            mask_dir: None,
        }
    }
}

impl RunOptions {
    pub fn episode_config(&self, sample: &LoadedSample) -> EpisodeConfig {
        let mut cfg = EpisodeConfig::new(&sample.record.target, sample.gt.width(), sample.gt.height());
        cfg.max_turns = self.max_turns;
        cfg.coord_mode = self.coord_mode;
        cfg
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Episode(#[from] crate::protocol::EpisodeError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

fn write_mask(dir: &Option<PathBuf>, id: &str, turn: usize, m: &Mask) -> Result<Option<String>, DatasetError> {
    let Some(dir) = dir else { return Ok(None) };
    let path = dir.join(id).join(format!("turn_{turn}.png"));
    store_mask(m, &path)?;
    Ok(Some(path.display().to_string()))
}

/// Plays one episode. Backend, policy and parse failures end the episode and
/// are recorded in the trajectory rather than returned.
pub fn run_episode(
    factory: &dyn PolicyFactory,
    backend: &dyn SegBackend,
    sample: &LoadedSample,
    opts: &RunOptions,
    seed: u64,
) -> Result<Trajectory, HarnessError> {
    let config = opts.episode_config(sample);
    let mut state = EpisodeState::new(config.clone(), sample.gt.clone())?;
    let mut policy = None;
    match backend.open(&sample.backend_sample(), seed) {
        Err(e) => state.abort(Termination::BackendError, e.to_string()),
        Ok(mut session) => match factory.start(sample, &config, seed) {
            Err(e) => state.abort(Termination::PolicyError, e.to_string()),
            Ok(p) => {
                let policy = policy.insert(p);
                let mut mask_path = None;
                while !state.is_done() {
                    let ctx = TurnContext {
                        config: &config,
                        turn: state.turn(),
                        history: state.history(),
                        current: state.current(),
                        mask_path: mask_path.as_deref(),
                    };
                    match policy.reply(&ctx) {
                        Ok(reply) => {
                            let before = state.turn();
                            state.step(&reply, session.as_mut())?;
                            if state.turn() > before {
                                mask_path = write_mask(&opts.mask_dir, sample.id(), before, &state.current().mask)?;
                            }
                        }
                        Err(e) => state.abort(Termination::PolicyError, e.to_string()),
                    }
                }
            }
        },
    }
    let termination = state.termination().expect("loop runs to termination");
    if let Some(p) = policy.as_mut() {
        p.finish(termination);
    }
    Ok(record(&state, sample, factory.name(), seed, opts.accept_iou))
}

fn record(state: &EpisodeState, sample: &LoadedSample, policy: String, seed: u64, accept_iou: f64) -> Trajectory {
    let steps: Vec<TrajectoryStep> = state
        .history()
        .iter()
        .enumerate()
        .map(|(turn, o)| TrajectoryStep {
            turn,
            action: o.action,
            iou_after: o.iou,
            dice_after: o.dice,
            retries_used: 0,
        })
        .collect();
    let current = state.current();
    let tag = |s: &str| (!s.is_empty()).then(|| s.to_owned());
    Trajectory {
        id: sample.id().to_owned(),
        paradigm: steps.first().and_then(|s| Paradigm::of_first_action(&s.action)),
        seed,
        width: sample.gt.width(),
        height: sample.gt.height(),
        steps,
        final_iou: current.iou,
        final_dice: current.dice,
        accepted: current.iou >= accept_iou,
        termination: state.termination().expect("finished"),
        policy: Some(policy),
        modality: tag(&sample.record.modality),
        dataset: tag(&sample.record.dataset),
        error: state.failure().map(str::to_owned),
    }
}

/// Runs every sample on a pool of `jobs` threads. Episode seeds derive from
/// `base_seed` and the sample id; output follows input order.
pub fn run_batch(
    factory: &dyn PolicyFactory,
    backend: &dyn SegBackend,
    samples: &[LoadedSample],
    opts: &RunOptions,
    base_seed: u64,
    jobs: usize,
) -> Result<Vec<Trajectory>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    pool.install(|| {
        samples
            .par_iter()
            .map(|s| run_episode(factory, backend, s, opts, derive_seed(base_seed, s.id())))
            .collect()
    })
}
