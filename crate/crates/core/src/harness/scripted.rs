//! Ground-truth-informed baseline policies.

use super::{Policy, PolicyError, PolicyFactory, TurnContext};
use crate::backend::oracle::{OracleParams, OracleSession};
use crate::backend::SegSession;
use crate::dataset::LoadedSample;
use crate::mask::{bounding_box, centroid, error_decompose, iou, Mask};
use crate::protocol::{serialize_tool_call, Action, EpisodeConfig, Polarity};
use crate::rng::{rng_for, SimRng};
use crate::synth::{select_corrective_click, SynthParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScriptedKind {
    /// Click the mask centre, then stop.
    SinglePoint,
    /// Draw the tight bounding box, then stop.
    SingleBox,
    /// Tight box, then corrective clicks while one clears `tau`.
    GreedyHybrid(SynthParams),
}

#[derive(Debug, Clone)]
pub struct ScriptedPolicyFactory {
    pub kind: ScriptedKind,
    /// Model the greedy policy assumes when looking ahead.
    pub oracle: OracleParams,
}

impl ScriptedPolicyFactory {
    pub fn new(kind: ScriptedKind) -> Self {
        Self {
            kind,
            oracle: OracleParams::default(),
        }
    }
}

impl PolicyFactory for ScriptedPolicyFactory {
    fn name(&self) -> String {
        match self.kind {
            ScriptedKind::SinglePoint => "point",
            ScriptedKind::SingleBox => "box",
            ScriptedKind::GreedyHybrid(_) => "hybrid",
        }
        .to_owned()
    }

    fn start(
        &self,
        sample: &LoadedSample,
        _config: &EpisodeConfig,
        seed: u64,
    ) -> Result<Box<dyn Policy>, PolicyError> {
        let gt = &sample.gt;
        if gt.is_empty() {
            return Err(PolicyError::MissingGroundTruth(sample.id().to_owned()));
        }
        let internal = |e: crate::mask::MaskError| PolicyError::Internal(e.to_string());
        Ok(match self.kind {
            ScriptedKind::SinglePoint => {
                let c = centroid(gt).map_err(internal)?;
                let c = gt.nearest_foreground(c).expect("nonempty");
                Box::new(OneShot(Action::from_click(c, Polarity::Positive)))
            }
            ScriptedKind::SingleBox => Box::new(OneShot(Action::from_box(bounding_box(gt).map_err(internal)?))),
            ScriptedKind::GreedyHybrid(params) => {
                let model = OracleSession::open(&sample.backend_sample(), seed, self.oracle)
                    .map_err(|e| PolicyError::Internal(e.to_string()))?;
                Box::new(GreedyHybrid {
                    gt: gt.clone(),
                    params,
                    model,
                    rng: rng_for(seed, "greedy"),
                })
            }
        })
    }
}

struct OneShot(Action);

impl Policy for OneShot {
    fn reply(&mut self, ctx: &TurnContext<'_>) -> Result<String, PolicyError> {
        Ok(if ctx.turn == 0 {
            ctx.encode(&self.0).0
        } else {
            serialize_tool_call(&Action::Stop)
        })
    }
}

/// Greedy expert: keeps a private oracle in lockstep with the episode and
/// only emits a click that the oracle says gains at least `tau`.
pub struct GreedyHybrid {
    gt: Mask,
    params: SynthParams,
    model: OracleSession,
    rng: SimRng,
}

impl GreedyHybrid {
    fn sync(&mut self, ctx: &TurnContext<'_>) -> Result<(), PolicyError> {
        let done = self.model.history().len();
        for a in ctx.executed().skip(done) {
            self.model
                .apply(a)
                .map_err(|e| PolicyError::Internal(e.to_string()))?;
        }
        Ok(())
    }

    fn next_click(&mut self, ctx: &TurnContext<'_>) -> Result<Option<String>, PolicyError> {
        let internal = |e: &dyn std::fmt::Display| PolicyError::Internal(e.to_string());
        let pred = self.model.prediction();
        let err = error_decompose(pred, &self.gt).map_err(|e| internal(&e))?;
        if err.is_empty() {
            return Ok(None);
        }
        let base = iou(pred, &self.gt).map_err(|e| internal(&e))?;
        for trial in 0..self.params.max_retries {
            let (p, polarity) =
                select_corrective_click(&err, trial, self.params.click_jitter_sigma, &mut self.rng)
                    .map_err(|e| internal(&e))?;
            let (reply, executed) = ctx.encode(&Action::from_click(p, polarity));
            let mut probe = self.model.clone();
            let Ok(after) = probe.apply(&executed) else { continue };
            if iou(&after, &self.gt).map_err(|e| internal(&e))? - base >= self.params.tau {
                return Ok(Some(reply));
            }
        }
        Ok(None)
    }
}

impl Policy for GreedyHybrid {
    fn reply(&mut self, ctx: &TurnContext<'_>) -> Result<String, PolicyError> {
        let stop = serialize_tool_call(&Action::Stop);
        if ctx.turn == 0 {
            let b = bounding_box(&self.gt).map_err(|e| PolicyError::Internal(e.to_string()))?;
            return Ok(ctx.encode(&Action::from_box(b)).0);
        }
        if ctx.turn >= ctx.config.max_turns {
            return Ok(stop);
        }
        self.sync(ctx)?;
        Ok(self.next_click(ctx)?.unwrap_or(stop))
    }
}
