use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

use segforge_core::backend::{external, ExternalBackend, OracleBackend, SegBackend};
use segforge_core::dataset::{
    load_manifest, load_samples, read_trajectories, to_json_line, to_sft_sample,
    trajectory_json, write_trajectories, LineDiagnostic, ReadMode,
};
use segforge_core::doubles::{serve_backend, serve_policy, BackendMode, PolicyMode};
use segforge_core::fixtures::write_fixtures;
use segforge_core::harness::{
    self, aggregate_metrics, turn_stats, ExternalPolicyFactory, GroupMetrics, PolicyFactory, RunOptions,
    ScriptedKind, ScriptedPolicyFactory, TurnStats,
};
use segforge_core::mask::{dice, iou};
use segforge_core::protocol::{EpisodeConfig, Termination};
use segforge_core::reward::{grpo_surrogate, score_trajectory, RolloutGroup};
use segforge_core::synth::{in_rl_subset, synthesize_batch, FilterStats, SynthParams};
use segforge_core::trajectory::Trajectory;

use crate::config::{
    command_argv, parse_coord_mode, resolve_group_key, resolve_jobs, resolve_seed, resolve_timeout,
    resolve_weights, FileConfig,
};
use crate::{
    EchoBackendArgs, EchoPolicyArgs, FilterArgs, FixturesArgs, ReplayArgs, RunArgs, ScoreArgs, SftArgs,
    StatsArgs, SynthArgs,
};

const DEFAULT_EPSILON: f64 = 0.2;

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(to_json_line(value).as_bytes())?;
    Ok(())
}

fn report_diagnostics(path: &Path, diags: &[LineDiagnostic]) {
    for d in diags {
        eprintln!("warning: {}:{}: skipped: {}", path.display(), d.line, d.message);
    }
}

fn load_trajectories(path: &Path, skip_bad: bool) -> Result<Vec<Trajectory>> {
    let mode = if skip_bad { ReadMode::Skip } else { ReadMode::Abort };
    let (trajs, diags) = read_trajectories(path, mode)?;
    report_diagnostics(path, &diags);
    Ok(trajs)
}

fn make_backend(spec: Option<&str>, file: &FileConfig, timeout: Option<u64>) -> Result<Box<dyn SegBackend>> {
    let spec = spec.or(file.run.backend.as_deref()).unwrap_or("oracle");
    if spec == "oracle" {
        return Ok(Box::new(OracleBackend::default()));
    }
    match command_argv(spec) {
        Some(argv) => Ok(Box::new(
            ExternalBackend::new(argv?).with_timeout(resolve_timeout(timeout, file, external::DEFAULT_TIMEOUT)),
        )),
        None => bail!("unknown backend {spec:?} (expected oracle or cmd:<argv>)"),
    }
}

fn make_policy(
    spec: Option<&str>,
    file: &FileConfig,
    params: SynthParams,
    timeout: Option<u64>,
) -> Result<Box<dyn PolicyFactory>> {
    let Some(spec) = spec.or(file.run.policy.as_deref()) else {
        bail!("run needs a policy: --policy point|box|hybrid|cmd:<argv>");
    };
    let scripted = |kind| -> Result<Box<dyn PolicyFactory>> { Ok(Box::new(ScriptedPolicyFactory::new(kind))) };
    match spec {
        "point" => scripted(ScriptedKind::SinglePoint),
        "box" => scripted(ScriptedKind::SingleBox),
        "hybrid" => scripted(ScriptedKind::GreedyHybrid(params)),
        other => match command_argv(other) {
            Some(argv) => Ok(Box::new(
                ExternalPolicyFactory::new(argv?)
                    .with_timeout(resolve_timeout(timeout, file, harness::external::DEFAULT_TIMEOUT)),
            )),
            None => bail!("unknown policy {other:?} (expected point, box, hybrid or cmd:<argv>)"),
        },
    }
}

pub fn cmd_fixtures(a: &FixturesArgs) -> Result<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let seed = resolve_seed(a.common.seed, &file)?;
    if a.width < 16 || a.height < 16 {
        bail!("fixtures need at least 16x16 pixels");
    }
    let manifest = write_fixtures(&a.out, a.count, a.width, a.height, seed)?;
    println!("{}", manifest.display());
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let params = a.synth.resolve(&file)?;
    let seed = resolve_seed(a.common.seed, &file)?;
    let jobs = resolve_jobs(a.common.jobs, &file);
    let backend = make_backend(a.backend.as_deref(), &file, a.common.timeout_ms)?;
    let samples = load_samples(&a.manifest)?;
    let (trajs, stats) = synthesize_batch(&samples, &params, backend.as_ref(), seed, jobs)?;
    for t in trajs.iter().filter(|t| t.error.is_some()) {
        eprintln!("warning: sample {}: {}", t.id, t.error.as_deref().unwrap_or_default());
    }
    write_trajectories(&trajs, &a.out)?;
    print_json(&stats)
}

#[derive(Debug, Serialize)]
struct FilterReport {
    threshold: f64,
    input: usize,
    retained: usize,
    dropped: usize,
    retention: f64,
    retained_stats: FilterStats,
}

pub fn cmd_filter(a: &FilterArgs) -> Result<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let threshold = a
        .filter_iou
        .or(file.synth.map(|s| s.filter_min_iou))
        .unwrap_or(SynthParams::default().filter_min_iou);
    if !threshold.is_finite() {
        bail!("filter threshold must be finite");
    }
    let trajs = load_trajectories(&a.input, a.skip_bad_lines)?;
    let input = trajs.len();
    let kept: Vec<Trajectory> = trajs.into_iter().filter(|t| t.final_iou >= threshold).collect();
    write_trajectories(&kept, &a.out)?;
    print_json(&FilterReport {
        threshold,
        input,
        retained: kept.len(),
        dropped: input - kept.len(),
        retention: if input == 0 { 0.0 } else { kept.len() as f64 / input as f64 },
        retained_stats: FilterStats::from_trajectories(&kept),
    })
}

#[derive(Debug, Serialize)]
struct ScoreRecord<'a> {
    id: &'a str,
    paradigm: Option<&'static str>,
    policy: Option<&'a str>,
    group: String,
    termination: Termination,
    tool_actions: usize,
    r_fmt: f64,
    r_qual: f64,
    r_imp: f64,
    r_over: f64,
    r_cost: f64,
    r_total: f64,
    advantage: f64,
}

#[derive(Debug, Serialize)]
struct GroupReport {
    group: String,
    size: usize,
    mean_reward: f64,
    std_reward: f64,
    /// Surrogate objective at unit probability ratios.
    surrogate: f64,
}

#[derive(Debug, Serialize)]
struct ScoreReport {
    trajectories: usize,
    epsilon: f64,
    group_key: Option<String>,
    groups: Vec<GroupReport>,
}

pub fn cmd_score(a: &ScoreArgs) -> Result<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let weights = resolve_weights(&file)?;
    let key = resolve_group_key(a.group_key.as_deref(), &file)?;
    let epsilon = a.epsilon.or(file.run.epsilon).unwrap_or(DEFAULT_EPSILON);
    if !(epsilon > 0.0 && epsilon < 1.0) {
        bail!("epsilon {epsilon} outside (0, 1)");
    }
    let trajs = load_trajectories(&a.input, a.skip_bad_lines)?;
    let breakdowns: Vec<_> = trajs.iter().map(|t| score_trajectory(t, &weights)).collect();
    let group_of = |t: &Trajectory| {
        key.as_deref()
            .and_then(|k| t.group_value(k))
            .unwrap_or_else(|| "all".to_owned())
    };
    let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, t) in trajs.iter().enumerate() {
        members.entry(group_of(t)).or_default().push(i);
    }
    let mut advantage = vec![0.0; trajs.len()];
    let mut groups = Vec::new();
    for (group, idx) in &members {
        let rewards: Vec<f64> = idx.iter().map(|&i| breakdowns[i].r_total).collect();
        let g = RolloutGroup::new(rewards)?;
        for (&i, &adv) in idx.iter().zip(&g.advantages) {
            advantage[i] = adv;
        }
        let n = g.rewards.len() as f64;
        let mean = g.rewards.iter().sum::<f64>() / n;
        let std = (g.rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
        groups.push(GroupReport {
            group: group.clone(),
            size: idx.len(),
            mean_reward: mean,
            std_reward: std,
            surrogate: grpo_surrogate(&vec![1.0; idx.len()], &g.advantages, epsilon)?,
        });
    }
    let mut body = String::new();
    for (i, t) in trajs.iter().enumerate() {
        let b = &breakdowns[i];
        body.push_str(&to_json_line(&ScoreRecord {
            id: &t.id,
            paradigm: t.paradigm.map(|p| p.as_str()),
            policy: t.policy.as_deref(),
            group: group_of(t),
            termination: t.termination,
            tool_actions: t.tool_action_count(),
            r_fmt: b.r_fmt,
            r_qual: b.r_qual,
            r_imp: b.r_imp,
            r_over: b.r_over,
            r_cost: b.r_cost,
            r_total: b.r_total,
            advantage: advantage[i],
        }));
    }
    write_file(&a.out, &body)?;
    print_json(&ScoreReport {
        trajectories: trajs.len(),
        epsilon,
        group_key: key,
        groups,
    })
}

#[derive(Debug, Serialize)]
struct RunReport {
    policy: String,
    backend: String,
    seed: u64,
    max_turns: usize,
    episodes: usize,
    terminations: BTreeMap<&'static str, usize>,
    turn_stats: TurnStats,
    overall: Vec<GroupMetrics>,
    group_key: Option<String>,
    metrics: Vec<GroupMetrics>,
    trajectories: Vec<Value>,
}

pub fn cmd_run(a: &RunArgs) -> Result<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let params = a.synth.resolve(&file)?;
    let seed = resolve_seed(a.common.seed, &file)?;
    let jobs = resolve_jobs(a.common.jobs, &file);
    let key = resolve_group_key(a.group_key.as_deref(), &file)?;
    let max_turns = a
        .max_turns
        .or(file.run.max_turns)
        .unwrap_or(EpisodeConfig::DEFAULT_MAX_TURNS);
    if max_turns == 0 {
        bail!("--max-turns must be at least 1");
    }
    let coord_mode = parse_coord_mode(a.coord_mode.as_deref().or(file.run.coord_mode.as_deref()).unwrap_or("normalized"))?;
    let backend = make_backend(a.backend.as_deref(), &file, a.common.timeout_ms)?;
    let policy = make_policy(a.policy.as_deref(), &file, params, a.common.timeout_ms)?;
    let samples = load_samples(&a.manifest)?;
    let opts = RunOptions {
        max_turns,
        coord_mode,
        accept_iou: params.filter_min_iou,
        mask_dir: a.mask_dir.clone(),
    };
    let trajs = harness::run_batch(policy.as_ref(), backend.as_ref(), &samples, &opts, seed, jobs)?;
    let mut terminations = BTreeMap::new();
    for t in &trajs {
        *terminations.entry(t.termination.as_str()).or_insert(0) += 1;
    }
    let report = RunReport {
        policy: policy.name(),
        backend: backend.name(),
        seed,
        max_turns,
        episodes: trajs.len(),
        terminations,
        turn_stats: turn_stats(&trajs),
        overall: aggregate_metrics(&trajs, None),
        metrics: aggregate_metrics(&trajs, key.as_deref()),
        group_key: key,
        trajectories: trajs.iter().map(trajectory_json).collect::<Result<_, _>>()?,
    };
    write_file(&a.out, &to_json_line(&report))?;
    if let Some(p) = &a.trajectories_out {
        write_trajectories(&trajs, p)?;
    }
    print_json(&report.overall)
}

#[derive(Debug, Default, Serialize)]
struct ParadigmSummary {
    count: usize,
    accepted: usize,
    rl_subset: usize,
}

#[derive(Debug, Serialize)]
struct CorpusSummary {
    trajectories: usize,
    accepted: usize,
    failed: usize,
    by_paradigm: BTreeMap<String, ParadigmSummary>,
    /// Number of trajectories per tool-action count.
    turn_histogram: BTreeMap<usize, usize>,
    /// Final IoU in ten equal bins over [0, 1]; the last bin includes 1.
    iou_histogram: [usize; 10],
    mean_final_iou: f64,
    /// Accepted trajectories with 3 to 5 tool actions.
    rl_subset: usize,
}

fn summarize(trajs: &[Trajectory]) -> CorpusSummary {
    let mut s = CorpusSummary {
        trajectories: trajs.len(),
        accepted: 0,
        failed: 0,
        by_paradigm: BTreeMap::new(),
        turn_histogram: BTreeMap::new(),
        iou_histogram: [0; 10],
        mean_final_iou: 0.0,
        rl_subset: 0,
    };
    for t in trajs {
        let rl = in_rl_subset(t);
        s.accepted += t.accepted as usize;
        s.failed += t.error.is_some() as usize;
        s.rl_subset += rl as usize;
        let p = s
            .by_paradigm
            .entry(t.paradigm.map_or("none", |p| p.as_str()).to_owned())
            .or_default();
        p.count += 1;
        p.accepted += t.accepted as usize;
        p.rl_subset += rl as usize;
        *s.turn_histogram.entry(t.tool_action_count()).or_default() += 1;
        let bin = ((t.final_iou.clamp(0.0, 1.0) * 10.0).floor() as usize).min(9);
        s.iou_histogram[bin] += 1;
        s.mean_final_iou += t.final_iou;
    }
    if !trajs.is_empty() {
        s.mean_final_iou /= trajs.len() as f64;
    }
    s
}

pub fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let trajs = load_trajectories(&a.input, a.skip_bad_lines)?;
    let summary = summarize(&trajs);
    match &a.out {
        Some(p) => write_file(p, &to_json_line(&summary)),
        None => print_json(&summary),
    }
}

#[derive(Debug, Serialize)]
struct ReplayRecord<'a> {
    id: &'a str,
    paradigm: Option<&'static str>,
    seed: u64,
    recorded_final_iou: f64,
    replayed_final_iou: f64,
    replayed_final_dice: f64,
    max_step_deviation: f64,
    matches: bool,
    error: Option<String>,
}

/// Recorded metrics are rounded to six decimals on disk.
const REPLAY_TOLERANCE: f64 = 1e-6;

pub fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let backend = make_backend(a.backend.as_deref(), &file, a.common.timeout_ms)?;
    let samples = load_samples(&a.manifest)?;
    let by_id: HashMap<&str, _> = samples.iter().map(|s| (s.id(), s)).collect();
    let trajs = load_trajectories(&a.input, false)?;
    let mut body = String::new();
    let mut mismatches = 0;
    for t in &trajs {
        let sample = by_id
            .get(t.id.as_str())
            .with_context(|| format!("trajectory {} has no sample in {}", t.id, a.manifest.display()))?;
        let mut rec = ReplayRecord {
            id: &t.id,
            paradigm: t.paradigm.map(|p| p.as_str()),
            seed: t.seed,
            recorded_final_iou: t.final_iou,
            replayed_final_iou: 0.0,
            replayed_final_dice: 0.0,
            max_step_deviation: 0.0,
            matches: false,
            error: None,
        };
        let outcome = (|| -> Result<()> {
            let mut session = backend.open(&sample.backend_sample(), t.seed)?;
            for s in t.tool_steps() {
                let pred = session.apply(&s.action)?;
                let v = iou(&pred, &sample.gt)?;
                rec.max_step_deviation = rec.max_step_deviation.max((v - s.iou_after).abs());
                rec.replayed_final_iou = v;
                rec.replayed_final_dice = dice(&pred, &sample.gt)?;
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            rec.error = Some(format!("{e:#}"));
        }
        rec.matches = rec.error.is_none()
            && rec.max_step_deviation <= REPLAY_TOLERANCE
            && (t.tool_steps().next().is_none() || (rec.replayed_final_iou - t.final_iou).abs() <= REPLAY_TOLERANCE);
        mismatches += !rec.matches as usize;
        body.push_str(&to_json_line(&rec));
    }
    write_file(&a.out, &body)?;
    print_json(&serde_json::json!({"trajectories": trajs.len(), "mismatches": mismatches}))?;
    if mismatches > 0 {
        bail!("{mismatches} trajectories did not reproduce");
    }
    Ok(())
}

pub fn cmd_sft(a: &SftArgs) -> Result<()> {
    let records = load_manifest(&a.manifest)?;
    let by_id: HashMap<&str, _> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let trajs = load_trajectories(&a.input, false)?;
    let mut body = String::new();
    let (mut written, mut rejected) = (0usize, 0usize);
    for t in &trajs {
        if !t.accepted {
            rejected += 1;
            continue;
        }
        let rec = by_id
            .get(t.id.as_str())
            .with_context(|| format!("trajectory {} has no sample in {}", t.id, a.manifest.display()))?;
        body.push_str(&to_json_line(&to_sft_sample(t, rec)?));
        written += 1;
    }
    write_file(&a.out, &body)?;
    print_json(&serde_json::json!({"written": written, "skipped_rejected": rejected}))
}

pub fn cmd_echo_backend(a: &EchoBackendArgs) -> Result<()> {
    let mode: BackendMode = a.mode.parse().map_err(anyhow::Error::msg)?;
    let samples = load_samples(&a.manifest)?;
    serve_backend(
        &samples,
        mode,
        Duration::from_millis(a.delay_ms),
        io::stdin().lock(),
        io::stdout().lock(),
    )?;
    Ok(())
}

pub fn cmd_echo_policy(a: &EchoPolicyArgs) -> Result<()> {
    let mode: PolicyMode = a.mode.parse().map_err(anyhow::Error::msg)?;
    let recorded = match &a.trajectories {
        Some(p) => load_trajectories(p, false)?,
        None if mode == PolicyMode::Replay => bail!("replay mode needs --trajectories"),
        None => Vec::new(),
    };
    serve_policy(
        &recorded,
        mode,
        Duration::from_millis(a.delay_ms),
        io::stdin().lock(),
        io::stdout().lock(),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use segforge_core::protocol::{Action, Polarity};
    use segforge_core::trajectory::{Paradigm, TrajectoryStep};

    fn traj(ious: &[f64], accepted: bool) -> Trajectory {
        let steps = ious
            .iter()
            .enumerate()
            .map(|(turn, &v)| TrajectoryStep {
                turn,
                action: Action::AddPoint { point: [1, 1], polarity: Polarity::Positive },
                iou_after: v,
                dice_after: v,
                retries_used: 0,
            })
            .collect();
        Trajectory {
            id: "t".into(),
            paradigm: Some(Paradigm::SequentialClick),
            seed: 0,
            width: 4,
            height: 4,
            steps,
            final_iou: *ious.last().unwrap_or(&0.0),
            final_dice: *ious.last().unwrap_or(&0.0),
            accepted,
            termination: Termination::Stopped,
            policy: None,
            modality: None,
            dataset: None,
            error: None,
        }
    }

    #[test]
    fn empty_corpus_summary_is_zeroed() {
        let s = summarize(&[]);
        assert_eq!((s.trajectories, s.accepted, s.rl_subset), (0, 0, 0));
        assert_eq!(s.mean_final_iou, 0.0);
        assert!(s.turn_histogram.is_empty());
    }

    #[test]
    fn four_round_accepted_trajectory_is_in_rl_subset() {
        let s = summarize(&[traj(&[0.3, 0.5, 0.7, 0.9], true), traj(&[0.8], true), traj(&[1.0], false)]);
        assert_eq!(s.rl_subset, 1);
        assert_eq!(s.by_paradigm["sequential_click"].rl_subset, 1);
        assert_eq!(s.turn_histogram[&4], 1);
        assert_eq!(s.iou_histogram.iter().sum::<usize>(), 3);
        assert_eq!(s.iou_histogram[9], 2);
    }
}
