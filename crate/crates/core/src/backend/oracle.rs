//! A deterministic, ground-truth-aware segmentation backend.
//!
//! It behaves like a competent but imperfect interactive model: a box yields
//! an eroded copy of the in-box ground truth plus one spurious blob, clicks
//! inside error components fix the whole component, and clicks elsewhere do
//! local damage. Error regions are recomputed against the live ground truth
//! at every prompt.

use rand::Rng;

use super::{pixel, BackendError, BackendSample, PromptHistory, SegBackend, SegSession};
use crate::mask::{self, connected_components, Mask, PixelBox, PixelCoord};
use crate::protocol::{Action, Polarity};
use crate::rng::{rng_for, SimRng};

/// Radii in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleParams {
    /// Boundary erosion applied to box and first-click predictions.
    pub erode_radius: u32,
    /// Radius of the spurious blob injected by a box.
    pub blob_radius: u32,
    /// Radius of the damage done by an off-target click.
    pub click_radius: u32,
    /// Rejection-sampling budget for the blob centre.
    pub max_blob_draws: u32,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            erode_radius: 3,
            blob_radius: 5,
            click_radius: 5,
            max_blob_draws: 64,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OracleBackend {
    pub params: OracleParams,
}

impl OracleBackend {
    pub fn new(params: OracleParams) -> Self {
        Self { params }
    }
}

impl SegBackend for OracleBackend {
    fn name(&self) -> String {
        "oracle".to_owned()
    }

    fn open(&self, sample: &BackendSample, seed: u64) -> Result<Box<dyn SegSession>, BackendError> {
        Ok(Box::new(OracleSession::open(sample, seed, self.params)?))
    }
}

#[derive(Debug, Clone)]
pub struct OracleSession {
    sample_id: String,
    gt: Mask,
    params: OracleParams,
    seed: u64,
    history: PromptHistory,
    prediction: Mask,
}

impl OracleSession {
    pub fn open(sample: &BackendSample, seed: u64, params: OracleParams) -> Result<Self, BackendError> {
        let gt = sample
            .gt
            .clone()
            .ok_or_else(|| BackendError::MissingGroundTruth(sample.id.clone()))?;
        let prediction = Mask::new(gt.width(), gt.height())?;
        Ok(Self {
            sample_id: sample.id.clone(),
            gt,
            params,
            seed,
            history: PromptHistory::default(),
            prediction,
        })
    }

    pub fn ground_truth(&self) -> &Mask {
        &self.gt
    }

    fn session_rng(&self) -> SimRng {
        rng_for(self.seed, &self.sample_id)
    }

    fn predict(&self, action: &Action) -> Result<Mask, BackendError> {
        let (w, h) = self.gt.dims();
        if let Some(b) = action.pixel_box() {
            return self.predict_box(b);
        }
        let (p, polarity) = action.pixel_point().ok_or(BackendError::StopPrompt)?;
        let p = pixel(p.x as u32, p.y as u32);
        let r_c = self.params.click_radius;
        let pred = &self.prediction;

        if self.history.is_empty() {
            return Ok(match polarity {
                Polarity::Positive if self.gt.contains(p) => {
                    let cs = connected_components(&self.gt);
                    mask::erode(&cs.component_mask(cs.label_at(p)), self.params.erode_radius)
                }
                Polarity::Positive => mask::disc(p, r_c, w, h)?,
                Polarity::Negative => Mask::new(w, h)?,
            });
        }

        Ok(match polarity {
            Polarity::Positive => {
                let fn_mask = self.gt.difference(pred)?;
                if fn_mask.contains(p) {
                    let cs = connected_components(&fn_mask);
                    pred.union(&cs.component_mask(cs.label_at(p)))?
                } else if self.gt.contains(p) {
                    pred.clone()
                } else {
                    pred.union(&mask::disc(p, r_c, w, h)?)?
                }
            }
            Polarity::Negative => {
                let fp_mask = pred.difference(&self.gt)?;
                if fp_mask.contains(p) {
                    let cs = connected_components(&fp_mask);
                    pred.difference(&cs.component_mask(cs.label_at(p)))?
                } else if pred.contains(p) && self.gt.contains(p) {
                    pred.difference(&mask::disc(p, r_c, w, h)?)?
                } else {
                    pred.clone()
                }
            }
        })
    }

    fn predict_box(&self, b: PixelBox) -> Result<Mask, BackendError> {
        let (w, h) = self.gt.dims();
        let inside = mask::clip_to_box(&self.gt, b);
        let core = mask::erode(&inside, self.params.erode_radius);
        let mut rng = self.session_rng();
        let mut centre = None;
        for _ in 0..self.params.max_blob_draws {
            let q = PixelCoord::new(rng.gen_range(b.x1..=b.x2), rng.gen_range(b.y1..=b.y2));
            if !self.gt.contains(q) {
                centre = Some(q);
                break;
            }
        }
        Ok(match centre {
            Some(q) => {
                let blob = mask::clip_to_box(&mask::disc(q, self.params.blob_radius, w, h)?, b)
                    .difference(&self.gt)?;
                core.union(&blob)?
            }
            None => core,
        })
    }
}

impl SegSession for OracleSession {
    fn apply(&mut self, action: &Action) -> Result<Mask, BackendError> {
        self.history
            .check_next(action, self.gt.width(), self.gt.height())?;
        self.prediction = self.predict(action)?;
        self.history.push(*action);
        Ok(self.prediction.clone())
    }

    fn prediction(&self) -> &Mask {
        &self.prediction
    }

    fn history(&self) -> &PromptHistory {
        &self.history
    }

    fn rollback(&mut self, keep: usize) -> Result<(), BackendError> {
        if keep >= self.history.len() {
            return Ok(());
        }
        let replay = self.history.as_slice()[..keep].to_vec();
        self.history.truncate(0);
        self.prediction = Mask::new(self.gt.width(), self.gt.height())?;
        for a in &replay {
            self.apply(a)?;
        }
        Ok(())
    }
}
