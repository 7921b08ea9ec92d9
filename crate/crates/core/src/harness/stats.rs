//! Per-turn outcome counts and grouped mean metrics over episode records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::trajectory::Trajectory;

/// IoU changes within this band count as unchanged.
pub const UNCHANGED_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRow {
    pub turn: usize,
    /// Episodes that executed a tool action at this turn.
    pub active: usize,
    pub improved: usize,
    pub declined: usize,
    pub unchanged: usize,
    /// Mean IoU after this turn over active episodes.
    pub mean_iou: f64,
    /// `unchanged` plus every episode that had already finished.
    pub unchanged_all: usize,
    /// Mean IoU over all episodes, finished ones carrying their last value.
    pub mean_iou_all: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TurnStats {
    pub episodes: usize,
    pub turns: Vec<TurnRow>,
}

impl TurnStats {
    pub fn declined_total(&self) -> usize {
        self.turns.iter().map(|r| r.declined).sum()
    }
}

/// Turn 0 compares against the empty starting mask (IoU 0).
pub fn turn_stats(trajs: &[Trajectory]) -> TurnStats {
    let series: Vec<Vec<f64>> = trajs.iter().map(Trajectory::iou_series).collect();
    let depth = series.iter().map(Vec::len).max().unwrap_or(0);
    let mut turns = Vec::with_capacity(depth);
    for t in 0..depth {
        let mut row = TurnRow {
            turn: t,
            active: 0,
            improved: 0,
            declined: 0,
            unchanged: 0,
            mean_iou: 0.0,
            unchanged_all: 0,
            mean_iou_all: 0.0,
        };
        let (mut sum_active, mut sum_all) = (0.0, 0.0);
        for s in &series {
            match s.get(t) {
                Some(&v) => {
                    let prev = if t == 0 { 0.0 } else { s[t - 1] };
                    let d = v - prev;
                    row.active += 1;
                    if d > UNCHANGED_EPS {
                        row.improved += 1;
                    } else if d < -UNCHANGED_EPS {
                        row.declined += 1;
                    } else {
                        row.unchanged += 1;
                    }
                    sum_active += v;
                    sum_all += v;
                }
                None => sum_all += s.last().copied().unwrap_or(0.0),
            }
        }
        row.unchanged_all = row.unchanged + (series.len() - row.active);
        row.mean_iou = sum_active / row.active as f64;
        row.mean_iou_all = sum_all / series.len() as f64;
        turns.push(row);
    }
    TurnStats {
        episodes: trajs.len(),
        turns,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: String,
    pub count: usize,
    pub mean_dice: f64,
    pub mean_iou: f64,
    /// Mean number of tool actions.
    pub mean_turns: f64,
}

/// Unweighted means per value of `key` (see `Trajectory::group_value`);
/// `None` puts everything in one group named `all`. Groups sort by name.
pub fn aggregate_metrics(trajs: &[Trajectory], key: Option<&str>) -> Vec<GroupMetrics> {
    let mut groups: BTreeMap<String, Vec<&Trajectory>> = BTreeMap::new();
    for t in trajs {
        let g = key
            .and_then(|k| t.group_value(k))
            .unwrap_or_else(|| "all".to_owned());
        groups.entry(g).or_default().push(t);
    }
    groups
        .into_iter()
        .map(|(group, ts)| {
            let n = ts.len() as f64;
            let mean = |f: &dyn Fn(&Trajectory) -> f64| ts.iter().map(|t| f(t)).sum::<f64>() / n;
            GroupMetrics {
                group,
                count: ts.len(),
                mean_dice: mean(&|t| t.final_dice),
                mean_iou: mean(&|t| t.final_iou),
                mean_turns: mean(&|t| t.tool_action_count() as f64),
            }
        })
        .collect()
}
