use std::path::Path;
use std::process::Command;

use serde_json::Value;

use segforge_core::dataset::read_trajectories;
use segforge_core::protocol::Termination;
use segforge_core::trajectory::Trajectory;

const BIN: &str = env!("CARGO_BIN_EXE_segforge");

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = Command::new(BIN).args(args).env_remove("SEGFORGE_SEED").output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

struct Setup {
    dir: tempfile::TempDir,
}

impl Setup {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        ok(&["fixtures", "--out", p(&dir.path().join("fx")), "--count", "2", "--width", "48", "--height", "48"]);
        Self { dir }
    }

    fn manifest(&self) -> String {
        p(&self.dir.path().join("fx/manifest.jsonl")).to_owned()
    }

    fn run(&self, policy: &str, backend: &str, timeout_ms: u64) -> (Vec<Trajectory>, Value) {
        let trajs = self.dir.path().join("run.jsonl");
        let report = self.dir.path().join("report.json");
        ok(&[
            "run", "--manifest", &self.manifest(), "--policy", policy, "--backend", backend, "--out", p(&report),
            "--trajectories-out", p(&trajs), "--timeout-ms", &timeout_ms.to_string(),
        ]);
        let report = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        (read_trajectories(&trajs, Default::default()).unwrap().0, report)
    }

    fn echo_backend(&self, mode: &str) -> String {
        format!("cmd:'{BIN}' echo-backend --manifest '{}' --mode {mode}", self.manifest())
    }
}

#[test]
fn external_backend_matches_oracle() {
    let s = Setup::new();
    let (ext, _) = s.run("hybrid", &s.echo_backend("oracle"), 5000);
    let (local, _) = s.run("hybrid", "oracle", 5000);
    assert_eq!(ext.len(), 2);
    for (a, b) in ext.iter().zip(&local) {
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.termination, Termination::Stopped);
    }
}

#[test]
fn external_policy_full_episode() {
    let s = Setup::new();
    let (ts, report) = s.run(&format!("cmd:'{BIN}' echo-policy --mode box"), &s.echo_backend("gt"), 5000);
    for t in &ts {
        assert_eq!(t.termination, Termination::Stopped);
        assert_eq!(t.tool_action_count(), 1);
    }
    assert_eq!(report["episodes"], 2);
}

#[test]
fn malformed_policy_reply_is_a_parse_failure() {
    let s = Setup::new();
    let (ts, _) = s.run(&format!("cmd:'{BIN}' echo-policy --mode malformed"), "oracle", 5000);
    for t in &ts {
        assert_eq!(t.termination, Termination::ParseFailure);
        assert_eq!(t.tool_action_count(), 0);
    }
}

#[test]
fn slow_policy_is_a_policy_error() {
    let s = Setup::new();
    let (ts, _) = s.run(&format!("cmd:'{BIN}' echo-policy --mode box --delay-ms 3000"), "oracle", 300);
    for t in &ts {
        assert_eq!(t.termination, Termination::PolicyError);
        assert!(t.error.as_deref().unwrap().contains("did not reply"), "{:?}", t.error);
    }
}

#[test]
fn broken_backends_are_backend_errors() {
    let s = Setup::new();
    for (mode, needle) in [
        ("garbage", "malformed backend reply"),
        ("truncated", "decode"),
        ("wrong-dims", "expected (48, 48)"),
    ] {
        let (ts, _) = s.run("box", &s.echo_backend(mode), 5000);
        for t in &ts {
            assert_eq!(t.termination, Termination::BackendError, "{mode}");
            assert!(t.error.as_deref().unwrap().contains(needle), "{mode}: {:?}", t.error);
        }
    }
}

#[test]
fn missing_backend_binary_fails_cleanly() {
    let s = Setup::new();
    let (ts, _) = s.run("box", "cmd:/nonexistent/segment-server", 5000);
    assert!(ts.iter().all(|t| t.termination == Termination::BackendError));
}
