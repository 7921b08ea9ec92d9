//! Expert trajectory synthesis: box or centroid initialization followed by
//! error-driven corrective clicks, each kept only if it raises IoU by at
//! least `tau`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, SegBackend, SegSession};
use crate::dataset::LoadedSample;
use crate::mask::{
    self, bounding_box, centroid, connected_components, error_decompose, interior_peak, ErrorDecomposition,
    Mask, MaskError, PixelBox, PixelCoord,
};
use crate::protocol::{Action, Polarity, Termination};
use crate::rng::{derive_seed, jitter_point, rng_for, uniform_offset, SimRng};
use crate::trajectory::{Paradigm, Trajectory, TrajectoryStep};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameter {field}: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("ground-truth mask is empty")]
    EmptyGroundTruth,
    #[error("prediction and ground truth already agree")]
    NoError,
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Which paradigm(s) to synthesize per sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParadigmChoice {
    #[serde(alias = "box")]
    BoxToPoint,
    #[serde(alias = "click")]
    SequentialClick,
    /// One paradigm per sample, chosen by a fair coin from the sample seed.
    #[default]
    Hybrid,
    /// One trajectory of each paradigm per sample.
    Both,
}

impl FromStr for ParadigmChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "box" | "box_to_point" => Ok(Self::BoxToPoint),
            "click" | "sequential_click" => Ok(Self::SequentialClick),
            "hybrid" => Ok(Self::Hybrid),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown paradigm {other:?} (expected box, click, both or hybrid)")),
        }
    }
}

impl fmt::Display for ParadigmChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BoxToPoint => "box",
            Self::SequentialClick => "click",
            Self::Hybrid => "hybrid",
            Self::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub tau: f64,
    pub max_clicks: usize,
    pub max_retries: usize,
    pub box_jitter_halfwidth: u32,
    pub click_jitter_sigma: f64,
    pub filter_min_iou: f64,
    pub paradigm: ParadigmChoice,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            tau: 0.04,
            max_clicks: 5,
            max_retries: 5,
            box_jitter_halfwidth: 5,
            click_jitter_sigma: 2.0,
            filter_min_iou: 0.7,
            paradigm: ParadigmChoice::Hybrid,
        }
    }
}

impl SynthParams {
    pub fn zero_jitter(mut self) -> Self {
        self.box_jitter_halfwidth = 0;
        self.click_jitter_sigma = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |field, reason: &str| {
            Err(SynthError::InvalidParam {
                field,
                reason: reason.to_owned(),
            })
        };
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau", "must lie in (0, 1)");
        }
        if self.max_clicks == 0 {
            return bad("max_clicks", "must be at least 1");
        }
        if self.max_retries == 0 {
            return bad("max_retries", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.filter_min_iou) {
            return bad("filter_min_iou", "must lie in [0, 1]");
        }
        if !(self.click_jitter_sigma.is_finite() && self.click_jitter_sigma >= 0.0) {
            return bad("click_jitter_sigma", "must be finite and nonnegative");
        }
        Ok(())
    }

    pub fn accepts(&self, final_iou: f64) -> bool {
        final_iou >= self.filter_min_iou
    }
}

/// Opening action: a jittered tight box or a jittered centroid click.
pub fn init_action(
    gt: &Mask,
    paradigm: Paradigm,
    params: &SynthParams,
    rng: &mut SimRng,
) -> Result<Action, SynthError> {
    if gt.is_empty() {
        return Err(SynthError::EmptyGroundTruth);
    }
    let (w, h) = gt.dims();
    Ok(match paradigm {
        Paradigm::BoxToPoint => {
            let b = bounding_box(gt)?;
            let hw = params.box_jitter_halfwidth;
            let mut shift = |v: usize, extent: usize| {
                (v as i64 + uniform_offset(rng, hw)).clamp(0, extent as i64 - 1) as usize
            };
            let (x1, y1, x2, y2) = (shift(b.x1, w), shift(b.y1, h), shift(b.x2, w), shift(b.y2, h));
            Action::from_box(PixelBox::from_corners(PixelCoord::new(x1, y1), PixelCoord::new(x2, y2)))
        }
        Paradigm::SequentialClick => {
            let c = jitter_point(rng, centroid(gt)?, params.click_jitter_sigma, w, h);
            let c = gt.nearest_foreground(c).expect("nonempty");
            Action::from_click(c, Polarity::Positive)
        }
    })
}

/// Click on the larger error region: its biggest component's deepest pixel on
/// trial 0, later trials cycle through smaller components with jitter.
pub fn select_corrective_click(
    err: &ErrorDecomposition,
    trial: usize,
    sigma: f64,
    rng: &mut SimRng,
) -> Result<(PixelCoord, Polarity), SynthError> {
    if err.is_empty() {
        return Err(SynthError::NoError);
    }
    let (target, polarity) = if err.fn_mask.count() > err.fp_mask.count() {
        (&err.fn_mask, Polarity::Positive)
    } else {
        (&err.fp_mask, Polarity::Negative)
    };
    let cs = connected_components(target);
    let order = cs.by_area_desc();
    let label = order[trial % order.len()];
    let peak = interior_peak(&cs.component_mask(label))?;
    if trial == 0 {
        return Ok((peak, polarity));
    }
    let p = jitter_point(rng, peak, sigma, target.width(), target.height());
    Ok((target.nearest_foreground(p).expect("nonempty"), polarity))
}

struct Recorder<'a> {
    gt: &'a Mask,
    steps: Vec<TrajectoryStep>,
}

impl Recorder<'_> {
    fn last_iou(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.iou_after)
    }

    fn push(&mut self, action: Action, pred: &Mask, retries_used: usize) -> Result<(), MaskError> {
        self.steps.push(TrajectoryStep {
            turn: self.steps.len(),
            action,
            iou_after: mask::iou(pred, self.gt)?,
            dice_after: mask::dice(pred, self.gt)?,
            retries_used,
        });
        Ok(())
    }
}

fn tag(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_owned())
}

/// Runs one synthesis. Backend failures do not error: they yield a rejected
/// trajectory with the steps completed so far and the failure message.
pub fn synthesize(
    sample: &LoadedSample,
    paradigm: Paradigm,
    params: &SynthParams,
    backend: &dyn SegBackend,
    seed: u64,
) -> Result<Trajectory, SynthError> {
    params.validate()?;
    let gt = &sample.gt;
    if gt.is_empty() {
        return Err(SynthError::EmptyGroundTruth);
    }
    let mut rng = rng_for(seed, "synth");
    let mut rec = Recorder { gt, steps: Vec::new() };
    let outcome = run_algorithm(sample, paradigm, params, backend, seed, &mut rng, &mut rec);
    let final_iou = rec.last_iou();
    let final_dice = rec.steps.last().map_or(0.0, |s| s.dice_after);
    let (termination, error) = match outcome {
        Ok(()) => (Termination::Stopped, None),
        Err(Failure::Backend(e)) => (Termination::BackendError, Some(e.to_string())),
        Err(Failure::Synth(e)) => return Err(e),
    };
    Ok(Trajectory {
        id: sample.id().to_owned(),
        paradigm: Some(paradigm),
        seed,
        width: gt.width(),
        height: gt.height(),
        steps: rec.steps,
        final_iou,
        final_dice,
        accepted: error.is_none() && params.accepts(final_iou),
        termination,
        policy: None,
        modality: tag(&sample.record.modality),
        dataset: tag(&sample.record.dataset),
        error,
    })
}

enum Failure {
    Backend(BackendError),
    Synth(SynthError),
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        Failure::Backend(e)
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        Failure::Synth(e)
    }
}

impl From<MaskError> for Failure {
    fn from(e: MaskError) -> Self {
        Failure::Synth(e.into())
    }
}

fn run_algorithm(
    sample: &LoadedSample,
    paradigm: Paradigm,
    params: &SynthParams,
    backend: &dyn SegBackend,
    seed: u64,
    rng: &mut SimRng,
    rec: &mut Recorder<'_>,
) -> Result<(), Failure> {
    let gt = rec.gt;
    let mut session: Box<dyn SegSession> = backend.open(&sample.backend_sample(), seed)?;
    let a0 = init_action(gt, paradigm, params, rng)?;
    let pred = session.apply(&a0)?;
    check_dims(&pred, gt)?;
    rec.push(a0, &pred, 0)?;

    for _ in 0..params.max_clicks {
        let err = error_decompose(session.prediction(), gt)?;
        if err.is_empty() {
            break;
        }
        let base = rec.last_iou();
        let keep = session.history().len();
        let mut accepted = false;
        for trial in 0..params.max_retries {
            let (p, polarity) = select_corrective_click(&err, trial, params.click_jitter_sigma, rng)?;
            let click = Action::from_click(p, polarity);
            let pred = session.apply(&click)?;
            check_dims(&pred, gt)?;
            if mask::iou(&pred, gt)? - base >= params.tau {
                rec.push(click, &pred, trial)?;
                accepted = true;
                break;
            }
            session.rollback(keep)?;
        }
        if !accepted {
            break;
        }
    }
    Ok(())
}

fn check_dims(pred: &Mask, gt: &Mask) -> Result<(), BackendError> {
    if pred.dims() != gt.dims() {
        return Err(BackendError::DimensionMismatch {
            expected: gt.dims(),
            got: pred.dims(),
        });
    }
    Ok(())
}

/// One unit of batch work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthPlan {
    pub sample: usize,
    pub paradigm: Paradigm,
    pub seed: u64,
}

/// Expands samples into per-paradigm jobs with derived seeds.
pub fn plan_batch(samples: &[LoadedSample], choice: ParadigmChoice, base_seed: u64) -> Vec<SynthPlan> {
    let mut plans = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let seed = derive_seed(base_seed, s.id());
        let mut plan = |paradigm| plans.push(SynthPlan { sample: i, paradigm, seed });
        match choice {
            ParadigmChoice::BoxToPoint => plan(Paradigm::BoxToPoint),
            ParadigmChoice::SequentialClick => plan(Paradigm::SequentialClick),
            ParadigmChoice::Both => {
                plan(Paradigm::BoxToPoint);
                plan(Paradigm::SequentialClick);
            }
            ParadigmChoice::Hybrid => {
                let mut coin = rng_for(seed, "paradigm");
                plan(if coin.gen_bool(0.5) {
                    Paradigm::BoxToPoint
                } else {
                    Paradigm::SequentialClick
                });
            }
        }
    }
    plans
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParadigmCounts {
    pub generated: usize,
    pub accepted: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub generated: usize,
    pub accepted: usize,
    pub failed: usize,
    pub by_paradigm: BTreeMap<String, ParadigmCounts>,
}

impl FilterStats {
    pub fn from_trajectories<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>) -> Self {
        let mut stats = FilterStats::default();
        for t in trajs {
            let key = t.paradigm.map_or("none", |p| p.as_str()).to_owned();
            let c = stats.by_paradigm.entry(key).or_default();
            c.generated += 1;
            c.accepted += t.accepted as usize;
            c.failed += t.error.is_some() as usize;
            stats.generated += 1;
            stats.accepted += t.accepted as usize;
            stats.failed += t.error.is_some() as usize;
        }
        stats
    }
}

/// Accepted trajectories that needed 3 to 5 interaction rounds.
pub fn in_rl_subset(t: &Trajectory) -> bool {
    t.accepted && (3..=5).contains(&t.tool_action_count())
}

pub fn synthesize_batch(
    samples: &[LoadedSample],
    params: &SynthParams,
    backend: &dyn SegBackend,
    base_seed: u64,
    jobs: usize,
) -> Result<(Vec<Trajectory>, FilterStats), SynthError> {
    let plans = plan_batch(samples, params.paradigm, base_seed);
    synthesize_plans(samples, &plans, params, backend, jobs)
}

/// Runs `plans` on a pool of `jobs` threads; output follows plan order.
pub fn synthesize_plans(
    samples: &[LoadedSample],
    plans: &[SynthPlan],
    params: &SynthParams,
    backend: &dyn SegBackend,
    jobs: usize,
) -> Result<(Vec<Trajectory>, FilterStats), SynthError> {
    params.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SynthError::Pool(e.to_string()))?;
    let trajs = pool.install(|| {
        plans
            .par_iter()
            .map(|p| synthesize(&samples[p.sample], p.paradigm, params, backend, p.seed))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let stats = FilterStats::from_trajectories(&trajs);
    Ok((trajs, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::oracle::OracleBackend;
    use crate::dataset::SampleRecord;
    use rand::SeedableRng;

    fn sample(id: &str, gt: Mask) -> LoadedSample {
        LoadedSample::new(
            SampleRecord {
                id: id.into(),
                image_path: None,
                gt_mask_path: format!("{id}.png").into(),
                target: "target".into(),
                modality: String::new(),
                dataset: String::new(),
            },
            gt,
        )
    }

    fn square() -> Mask {
        Mask::from_fn(64, 64, |x, y| (22..42).contains(&x) && (22..42).contains(&y)).unwrap()
    }

    fn zero() -> SynthParams {
        SynthParams::default().zero_jitter()
    }

    // distance from p to the nearest pixel outside m, with everything beyond
    // the grid counted as outside
    fn brute_depth(m: &Mask, p: PixelCoord) -> i64 {
        let (w, h) = (m.width() as i64, m.height() as i64);
        let mut best = i64::MAX;
        for y in -1..=h {
            for x in -1..=w {
                let outside = x < 0 || y < 0 || x >= w || y >= h || !m.get(x as usize, y as usize);
                if outside {
                    let (dx, dy) = (x - p.x as i64, y - p.y as i64);
                    best = best.min(dx * dx + dy * dy);
                }
            }
        }
        best
    }

    fn brute_peak(m: &Mask) -> PixelCoord {
        let mut best = (-1, PixelCoord::new(0, 0));
        for p in m.foreground() {
            let d = brute_depth(m, p);
            if d > best.0 {
                best = (d, p);
            }
        }
        best.1
    }

    fn empty_err(w: usize, h: usize) -> ErrorDecomposition {
        ErrorDecomposition {
            fn_mask: Mask::new(w, h).unwrap(),
            fp_mask: Mask::new(w, h).unwrap(),
        }
    }

    #[test]
    fn zero_jitter_init_is_exact() {
        let gt = square();
        let mut rng = SimRng::seed_from_u64(0);
        let a = init_action(&gt, Paradigm::BoxToPoint, &zero(), &mut rng).unwrap();
        assert_eq!(a, Action::AddBox { bbox: [22, 22, 41, 41] });
        let a = init_action(&gt, Paradigm::SequentialClick, &zero(), &mut rng).unwrap();
        // mean of 22..=41 is 31.5, rounded half away from zero
        assert_eq!(a, Action::AddPoint { point: [32, 32], polarity: Polarity::Positive });
    }

    #[test]
    fn jittered_box_is_clamped_and_ordered() {
        let mut gt = Mask::new(20, 20).unwrap();
        gt.set(10, 10, true);
        let mut edge = Mask::new(20, 20).unwrap();
        edge.set(0, 19, true);
        for seed in 0..200 {
            let mut rng = SimRng::seed_from_u64(seed);
            for m in [&gt, &edge] {
                let a = init_action(m, Paradigm::BoxToPoint, &SynthParams::default(), &mut rng).unwrap();
                let [x1, y1, x2, y2] = match a {
                    Action::AddBox { bbox } => bbox,
                    _ => unreachable!(),
                };
                assert!(x1 <= x2 && y1 <= y2 && x2 < 20 && y2 < 20);
            }
        }
    }

    #[test]
    fn centroid_click_snaps_into_concave_gt() {
        // ring: centroid falls in the hole
        let gt = Mask::from_fn(40, 40, |x, y| {
            let d = (x as i64 - 20).pow(2) + (y as i64 - 20).pow(2);
            (64..=144).contains(&d)
        })
        .unwrap();
        let mut rng = SimRng::seed_from_u64(3);
        let a = init_action(&gt, Paradigm::SequentialClick, &zero(), &mut rng).unwrap();
        let (p, _) = a.pixel_point().unwrap();
        assert!(gt.contains(p));
    }

    #[test]
    fn empty_gt_rejected() {
        let mut rng = SimRng::seed_from_u64(0);
        assert!(matches!(
            init_action(&Mask::new(4, 4).unwrap(), Paradigm::BoxToPoint, &zero(), &mut rng),
            Err(SynthError::EmptyGroundTruth)
        ));
        assert!(matches!(
            select_corrective_click(&empty_err(4, 4), 0, 0.0, &mut rng),
            Err(SynthError::NoError)
        ));
    }

    #[test]
    fn click_on_square_error_hits_its_centre() {
        let mut err = empty_err(32, 32);
        err.fn_mask = Mask::from_fn(32, 32, |x, y| (10..15).contains(&x) && (10..15).contains(&y)).unwrap();
        let mut rng = SimRng::seed_from_u64(0);
        let (p, pol) = select_corrective_click(&err, 0, 0.0, &mut rng).unwrap();
        assert_eq!(p, brute_peak(&err.fn_mask));
        assert_eq!((p, pol), (PixelCoord::new(12, 12), Polarity::Positive));
    }

    #[test]
    fn equal_error_areas_pick_negative() {
        let mut err = empty_err(16, 16);
        err.fn_mask.set(1, 1, true);
        err.fp_mask.set(8, 8, true);
        let mut rng = SimRng::seed_from_u64(0);
        let (p, pol) = select_corrective_click(&err, 0, 0.0, &mut rng).unwrap();
        assert_eq!((p, pol), (PixelCoord::new(8, 8), Polarity::Negative));
    }

    #[test]
    fn retry_visits_smaller_component() {
        let mut err = empty_err(40, 40);
        // areas 30 (6x5) and 10 (5x2)
        err.fn_mask = Mask::from_fn(40, 40, |x, y| {
            ((2..8).contains(&x) && (2..7).contains(&y)) || ((20..25).contains(&x) && (30..32).contains(&y))
        })
        .unwrap();
        let small = Mask::from_fn(40, 40, |x, y| (20..25).contains(&x) && (30..32).contains(&y)).unwrap();
        let large = err.fn_mask.difference(&small).unwrap();
        let mut rng = SimRng::seed_from_u64(0);
        assert_eq!(select_corrective_click(&err, 0, 0.0, &mut rng).unwrap().0, brute_peak(&large));
        assert_eq!(select_corrective_click(&err, 1, 0.0, &mut rng).unwrap().0, brute_peak(&small));
        assert_eq!(select_corrective_click(&err, 2, 0.0, &mut rng).unwrap().0, brute_peak(&large));
    }

    #[test]
    fn jittered_retry_stays_in_target() {
        let mut err = empty_err(30, 30);
        err.fp_mask = Mask::from_fn(30, 30, |x, y| x == 5 && (3..20).contains(&y)).unwrap();
        let mut rng = SimRng::seed_from_u64(9);
        for trial in 1..50 {
            let (p, pol) = select_corrective_click(&err, trial, 4.0, &mut rng).unwrap();
            assert!(err.fp_mask.contains(p));
            assert_eq!(pol, Polarity::Negative);
        }
    }

    #[test]
    fn square_box_then_ring_click() {
        let s = sample("sq", square());
        let t = synthesize(&s, Paradigm::BoxToPoint, &zero(), &OracleBackend::default(), 11).unwrap();
        assert_eq!(t.steps.len(), 2);
        assert!(t.steps[0].action.is_box());
        assert_eq!(t.steps[1].action.pixel_point().unwrap().1, Polarity::Positive);
        assert_eq!(t.final_iou, 1.0);
        assert!(t.accepted);
        assert_eq!(t.termination, Termination::Stopped);
    }

    #[test]
    fn disc_box_then_blob_removal() {
        let gt = mask::disc(PixelCoord::new(32, 32), 12, 64, 64).unwrap();
        let s = sample("disc", gt);
        // seed 0 places a blob large enough to clear tau
        let t = synthesize(&s, Paradigm::BoxToPoint, &zero(), &OracleBackend::default(), 0).unwrap();
        assert!(t.steps.len() >= 3);
        let polarities: Vec<_> = t.steps[1..].iter().map(|s| s.action.pixel_point().unwrap().1).collect();
        assert!(polarities.contains(&Polarity::Negative));
        assert!(polarities.contains(&Polarity::Positive));
        assert_eq!(t.final_iou, 1.0);
    }

    #[test]
    fn strict_tau_keeps_init_only() {
        let s = sample("sq", square());
        let params = SynthParams { tau: 0.9, ..zero() };
        let t = synthesize(&s, Paradigm::BoxToPoint, &params, &OracleBackend::default(), 11).unwrap();
        assert_eq!(t.steps.len(), 1);
        // 14x14 core out of 20x20
        let init = 196.0 / 400.0;
        assert!((t.final_iou - init).abs() < 1e-12);
        assert_eq!(t.accepted, init >= 0.7);
        assert!(t.steps[0].retries_used == 0);
    }

    #[test]
    fn full_image_gt_terminates_monotone() {
        let s = sample("full", Mask::full(32, 32).unwrap());
        let t = synthesize(&s, Paradigm::BoxToPoint, &zero(), &OracleBackend::default(), 2).unwrap();
        assert!(t.steps.len() <= 1 + zero().max_clicks);
        for w in t.steps.windows(2) {
            assert!(w[1].iou_after - w[0].iou_after >= 0.04);
        }
    }

    #[test]
    fn batch_is_order_stable_across_pool_sizes() {
        let samples: Vec<_> = (0..12)
            .map(|i| {
                let gt = mask::disc(PixelCoord::new(20 + i, 24), 6 + i as u32, 64, 64).unwrap();
                sample(&format!("s{i}"), gt)
            })
            .collect();
        let params = SynthParams { paradigm: ParadigmChoice::Both, ..Default::default() };
        let backend = OracleBackend::default();
        let (a, sa) = synthesize_batch(&samples, &params, &backend, 5, 1).unwrap();
        let (b, sb) = synthesize_batch(&samples, &params, &backend, 5, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert_eq!(a.len(), 24);
        assert_eq!(sa.by_paradigm["box_to_point"].generated, 12);
        let (c, _) = synthesize_batch(&samples, &params, &backend, 6, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_batch() {
        let (t, s) = synthesize_batch(&[], &SynthParams::default(), &OracleBackend::default(), 0, 4).unwrap();
        assert!(t.is_empty());
        assert_eq!(s, FilterStats::default());
    }

    #[test]
    fn invalid_params_rejected() {
        for p in [
            SynthParams { tau: 0.0, ..Default::default() },
            SynthParams { tau: 1.0, ..Default::default() },
            SynthParams { max_clicks: 0, ..Default::default() },
            SynthParams { max_retries: 0, ..Default::default() },
            SynthParams { filter_min_iou: 1.5, ..Default::default() },
        ] {
            assert!(p.validate().is_err());
        }
    }
}
