//! Line-protocol test doubles for the external backend and policy
//! interfaces. Each serves one stream until its input closes.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::str::FromStr;
use std::thread;
use std::time::Duration;

use crate::backend::oracle::{OracleParams, OracleSession};
use crate::backend::wire::{pack_mask, prompt_action, BackendReply, BackendRequest};
use crate::backend::{BackendSample, SegSession};
use crate::dataset::{to_json_string, LoadedSample};
use crate::harness::external::{PolicyHello, PolicyMessage};
use crate::mask::Mask;
use crate::protocol::{normalize_action, serialize_tool_call, Action};
use crate::trajectory::Trajectory;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendMode {
    /// Behave like the built-in oracle.
    Oracle,
    /// Return the ground truth for every prompt.
    Gt,
    /// Return masks one pixel wider than the image.
    WrongDims,
    /// Drop the last byte of the mask payload.
    Truncated,
    /// Reply with text that is not JSON.
    Garbage,
}

impl FromStr for BackendMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "oracle" => Self::Oracle,
            "gt" => Self::Gt,
            "wrong-dims" => Self::WrongDims,
            "truncated" => Self::Truncated,
            "garbage" => Self::Garbage,
            other => return Err(format!("unknown backend mode {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyMode {
    /// Stop immediately.
    Stop,
    /// Reply with prose and no tool call.
    Malformed,
    /// Draw a whole-image box, then stop.
    Box,
    /// Re-emit the actions of a recorded trajectory for the sample, then stop.
    Replay,
}

impl FromStr for PolicyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "stop" => Self::Stop,
            "malformed" => Self::Malformed,
            "box" => Self::Box,
            "replay" => Self::Replay,
            other => return Err(format!("unknown policy mode {other:?}")),
        })
    }
}

fn reply_line(out: &mut impl Write, line: &str) -> io::Result<()> {
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()
}

pub fn serve_backend(
    samples: &[LoadedSample],
    mode: BackendMode,
    delay: Duration,
    input: impl BufRead,
    mut out: impl Write,
) -> io::Result<()> {
    let by_id: HashMap<&str, &LoadedSample> = samples.iter().map(|s| (s.id(), s)).collect();
    let mut session: Option<OracleSession> = None;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: BackendRequest = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                reply_line(&mut out, &BackendReply::Error { message: e.to_string() }.to_line())?;
                continue;
            }
        };
        let reply = match request {
            BackendRequest::Open { sample_id, width, height, seed, .. } => match by_id.get(sample_id.as_str()) {
                Some(s) if s.gt.dims() == (width, height) => {
                    let b = BackendSample::from_gt(sample_id, s.gt.clone());
                    match OracleSession::open(&b, seed, OracleParams::default()) {
                        Ok(o) => {
                            session = Some(o);
                            BackendReply::Ack
                        }
                        Err(e) => BackendReply::Error { message: e.to_string() },
                    }
                }
                Some(_) => BackendReply::Error { message: "dimensions differ from manifest".into() },
                None => BackendReply::Error { message: format!("unknown sample {sample_id}") },
            },
            BackendRequest::Close => {
                session = None;
                continue;
            }
            BackendRequest::Prompt { action } => {
                thread::sleep(delay);
                match session.as_mut() {
                    None => BackendReply::Error { message: "no open session".into() },
                    Some(s) => {
                        let (w, h) = s.ground_truth().dims();
                        match prompt_action(&action, w, h).map_err(|e| e.to_string()).and_then(|a| {
                            s.apply(&a).map_err(|e| e.to_string())
                        }) {
                            Err(message) => BackendReply::Error { message },
                            Ok(pred) => match mode {
                                BackendMode::Garbage => {
                                    reply_line(&mut out, "segmentation complete!")?;
                                    continue;
                                }
                                BackendMode::Oracle => BackendReply::mask(&pred),
                                BackendMode::Gt => BackendReply::mask(s.ground_truth()),
                                BackendMode::WrongDims => {
                                    BackendReply::mask(&Mask::new(w + 1, h).expect("nonzero"))
                                }
                                BackendMode::Truncated => {
                                    let mut bytes = pack_mask(&pred);
                                    bytes.pop();
                                    BackendReply::Mask { width: w, height: h, data_b64: STANDARD.encode(bytes) }
                                }
                            },
                        }
                    }
                }
            }
        };
        reply_line(&mut out, &reply.to_line())?;
    }
    Ok(())
}

struct Episode {
    actions: Vec<Action>,
    next: usize,
    width: usize,
    height: usize,
    normalized: bool,
}

pub fn serve_policy(
    recorded: &[Trajectory],
    mode: PolicyMode,
    delay: Duration,
    input: impl BufRead,
    mut out: impl Write,
) -> io::Result<()> {
    let mut episode: Option<Episode> = None;
    for line in input.lines() {
        let line = line?;
        let Ok(msg) = serde_json::from_str::<PolicyMessage>(&line) else {
            continue;
        };
        match msg {
            PolicyMessage::Start { sample_id, width, height, coord_mode, .. } => {
                let actions = match mode {
                    PolicyMode::Box => vec![Action::AddBox {
                        bbox: [0, 0, width as u32 - 1, height as u32 - 1],
                    }],
                    PolicyMode::Replay => recorded
                        .iter()
                        .find(|t| t.id == sample_id)
                        .map(|t| t.tool_steps().map(|s| s.action).collect())
                        .unwrap_or_default(),
                    PolicyMode::Stop | PolicyMode::Malformed => Vec::new(),
                };
                episode = Some(Episode {
                    actions,
                    next: 0,
                    width,
                    height,
                    normalized: coord_mode == "normalized",
                });
                reply_line(&mut out, &to_json_string(&PolicyHello::Ready))?;
            }
            PolicyMessage::Turn { .. } => {
                thread::sleep(delay);
                let text = match (mode, episode.as_mut()) {
                    (PolicyMode::Malformed, _) => "The mask looks fine to me.".to_owned(),
                    (_, Some(ep)) if ep.next < ep.actions.len() => {
                        let a = ep.actions[ep.next];
                        ep.next += 1;
                        let a = if ep.normalized {
                            normalize_action(&a, ep.width, ep.height).expect("recorded action in bounds")
                        } else {
                            a
                        };
                        serialize_tool_call(&a)
                    }
                    _ => serialize_tool_call(&Action::Stop),
                };
                reply_line(&mut out, &to_json_string(&text))?;
            }
            PolicyMessage::End { .. } => episode = None,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::wire::decode_mask_b64;
    use crate::harness::external::decode_reply;
    use crate::protocol::{parse_tool_call, CoordLimits, Termination};

    fn sample() -> LoadedSample {
        crate::fixtures::fixture_samples(1, 32, 32, 0).remove(0)
    }

    fn backend_replies(mode: BackendMode, input: &str) -> Vec<String> {
        let mut out = Vec::new();
        serve_backend(&[sample()], mode, Duration::ZERO, input.as_bytes(), &mut out).unwrap();
        String::from_utf8(out).unwrap().lines().map(str::to_owned).collect()
    }

    fn session_script() -> String {
        let s = sample();
        let open = BackendRequest::Open { sample_id: s.id().into(), width: 32, height: 32, image_path: None, seed: 1 };
        let b = crate::mask::bounding_box(&s.gt).unwrap();
        format!("{}\n{}\n{}\n", open.to_line(), BackendRequest::prompt(&Action::from_box(b)).to_line(), BackendRequest::Close.to_line())
    }

    #[test]
    fn backend_modes() {
        let r = backend_replies(BackendMode::Gt, &session_script());
        assert_eq!(r.len(), 2);
        assert_eq!(r[0], r#"{"type":"ack"}"#);
        let BackendReply::Mask { width, height, data_b64 } = serde_json::from_str(&r[1]).unwrap() else { panic!() };
        assert_eq!(decode_mask_b64(width, height, &data_b64).unwrap(), sample().gt);

        let r = backend_replies(BackendMode::WrongDims, &session_script());
        assert!(r[1].contains(r#""width":33"#));
        let r = backend_replies(BackendMode::Truncated, &session_script());
        let BackendReply::Mask { data_b64, .. } = serde_json::from_str(&r[1]).unwrap() else { panic!() };
        assert!(decode_mask_b64(32, 32, &data_b64).is_err());
        let r = backend_replies(BackendMode::Garbage, &session_script());
        assert!(serde_json::from_str::<BackendReply>(&r[1]).is_err());
        let r = backend_replies(BackendMode::Oracle, "{\"type\":\"open\",\"sample_id\":\"nope\",\"width\":1,\"height\":1}\n");
        assert!(r[0].contains("unknown sample"));
    }

    #[test]
    fn policy_box_then_stop() {
        let start = PolicyMessage::Start {
            sample_id: "s".into(),
            target: "t".into(),
            width: 20,
            height: 10,
            max_turns: 5,
            coord_mode: "pixel".into(),
            seed: 0,
        };
        let turn = PolicyMessage::Turn { turn: 0, system: String::new(), prompt: String::new(), iou: 0.0, dice: 0.0, mask_path: None };
        let end = PolicyMessage::End { termination: Termination::Stopped };
        let input = [&start, &turn, &turn, &end].map(to_json_string).join("\n");
        let mut out = Vec::new();
        serve_policy(&[], PolicyMode::Box, Duration::ZERO, input.as_bytes(), &mut out).unwrap();
        let lines: Vec<String> = String::from_utf8(out).unwrap().lines().map(str::to_owned).collect();
        assert_eq!(lines[0], r#"{"type":"ready"}"#);
        let limits = CoordLimits::pixels(20, 10);
        assert_eq!(parse_tool_call(&decode_reply(&lines[1]), limits).unwrap(), Action::AddBox { bbox: [0, 0, 19, 9] });
        assert_eq!(parse_tool_call(&decode_reply(&lines[2]), limits).unwrap(), Action::Stop);
    }
}
