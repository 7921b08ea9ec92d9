use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use segforge_core::dataset::{read_trajectories, write_trajectories};
use segforge_core::protocol::Termination;
use segforge_core::trajectory::Trajectory;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_segforge"));
    c.env_remove("SEGFORGE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fixtures(dir: &Path, count: usize) -> PathBuf {
    let fx = dir.join("fx");
    ok(&["fixtures", "--out", p(&fx), "--count", &count.to_string(), "--width", "64", "--height", "64"]);
    fx.join("manifest.jsonl")
}

fn read(path: &Path) -> Vec<Trajectory> {
    read_trajectories(path, Default::default()).unwrap().0
}

fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let manifest = fixtures(dir, 6);
    let out = dir.join("traj.jsonl");
    let mut args = vec!["synth", "--manifest", p(&manifest), "--out", p(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

#[test]
fn filter_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), &["--filter-iou", "0.0"]);
    let all = read(&input);
    let out = dir.path().join("kept.jsonl");

    ok(&["filter", "--input", p(&input), "--out", p(&out), "--filter-iou", "0.0"]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&input).unwrap());
    ok(&["filter", "--input", p(&input), "--out", p(&out), "--filter-iou", "1.01"]);
    assert!(read(&out).is_empty());

    let mut pair = vec![all[0].clone(), all[1].clone()];
    pair[0].final_iou = 0.6;
    pair[1].final_iou = 0.8;
    write_trajectories(&pair, &input).unwrap();
    let report: Value =
        serde_json::from_str(&ok(&["filter", "--input", p(&input), "--out", p(&out), "--filter-iou", "0.7"]))
            .unwrap();
    let kept = read(&out);
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].final_iou, 0.8);
    assert_eq!(report["retained"], 1);
    assert_eq!(report["dropped"], 1);
}

#[test]
fn both_paradigms_give_two_trajectories_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth(dir.path(), &["--paradigm", "both"]);
    let trajs = read(&out);
    assert_eq!(trajs.len(), 12);
    for pair in trajs.chunks(2) {
        assert_eq!(pair[0].id, pair[1].id);
        assert_ne!(pair[0].paradigm, pair[1].paradigm);
    }
}

#[test]
fn single_turn_budget() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixtures(dir.path(), 3);
    let trajs = dir.path().join("run.jsonl");
    let report = dir.path().join("report.json");
    ok(&[
        "run", "--manifest", p(&manifest), "--policy", "hybrid", "--max-turns", "1", "--out", p(&report),
        "--trajectories-out", p(&trajs),
    ]);
    for t in read(&trajs) {
        assert_eq!(t.tool_action_count(), 1);
        assert_eq!(t.termination, Termination::Stopped);
    }
}

#[test]
fn seed_env_applies_below_flag() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |name: &str, env: Option<&str>, flag: Option<&str>| {
        let out = dir.path().join(name);
        let mut c = bin();
        c.args(["fixtures", "--out", p(&out), "--count", "2", "--width", "32", "--height", "32"]);
        if let Some(s) = flag {
            c.args(["--seed", s]);
        }
        if let Some(s) = env {
            c.env("SEGFORGE_SEED", s);
        }
        assert!(c.output().unwrap().status.success());
        std::fs::read(out.join("masks/fx00000.png")).unwrap()
    };
    let from_env = gen("a", Some("17"), None);
    assert_eq!(from_env, gen("b", None, Some("17")));
    assert_ne!(from_env, gen("c", None, None));
    assert_eq!(gen("d", Some("3"), Some("17")), from_env);
}

#[test]
fn corrupt_lines_abort_or_skip() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), &[]);
    let mut text = std::fs::read_to_string(&input).unwrap();
    text.push_str("{not json\n");
    std::fs::write(&input, text).unwrap();
    let out = run(&["stats", "--input", p(&input)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(":7"));
    let summary: Value = serde_json::from_str(&ok(&["stats", "--input", p(&input), "--skip-bad-lines"])).unwrap();
    assert_eq!(summary["trajectories"], 6);
}

#[test]
fn score_groups_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), &["--paradigm", "both"]);
    let scores = dir.path().join("scores.jsonl");
    let report: Value = serde_json::from_str(&ok(&[
        "score", "--input", p(&input), "--out", p(&scores), "--group-key", "paradigm",
    ]))
    .unwrap();
    assert_eq!(report["groups"].as_array().unwrap().len(), 2);
    let ungrouped: Value =
        serde_json::from_str(&ok(&["score", "--input", p(&input), "--out", p(&scores)])).unwrap();
    assert_eq!(ungrouped["groups"].as_array().unwrap().len(), 1);

    let manifest = dir.path().join("fx/manifest.jsonl");
    let replayed = dir.path().join("replay.jsonl");
    ok(&["replay", "--input", p(&input), "--manifest", p(&manifest), "--out", p(&replayed)]);
    for line in std::fs::read_to_string(&replayed).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["matches"], true, "{line}");
    }
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["synth"]).status.code(), Some(2));
    let out = run(&["score", "--input", "/nonexistent/x.jsonl", "--out", "/tmp/never.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = run(&["synth", "--manifest", "m", "--out", "o", "--tau", "-1"]);
    assert!(!out.status.success());
}

#[test]
fn output_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixtures(dir.path(), 8);
    let outs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|jobs| {
            let out = dir.path().join(format!("t{jobs}.jsonl"));
            ok(&["synth", "--manifest", p(&manifest), "--out", p(&out), "--paradigm", "both", "--jobs", jobs]);
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}
