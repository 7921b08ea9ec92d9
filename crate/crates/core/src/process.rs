//! A child process spoken to one line at a time over stdin/stdout, with a
//! per-reply timeout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LineError {
    #[error("cannot start {program}: {reason}")]
    Spawn { program: String, reason: String },
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error("pipe closed: {0}")]
    Closed(String),
}

pub struct LineProcess {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl LineProcess {
    pub fn spawn(argv: &[String], timeout: Duration) -> Result<Self, LineError> {
        let (program, args) = argv.split_first().ok_or_else(|| LineError::Spawn {
            program: String::new(),
            reason: "empty command line".into(),
        })?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| LineError::Spawn {
                program: program.clone(),
                reason: e.to_string(),
            })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines,
            timeout,
        })
    }

    pub fn send(&mut self, line: &str) -> Result<(), LineError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| LineError::Closed("stdin already closed".into()))?;
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.write_all(b"\n"))
            .and_then(|_| stdin.flush())
            .map_err(|e| LineError::Closed(e.to_string()))
    }

    pub fn recv(&mut self) -> Result<String, LineError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(LineError::Closed(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Err(LineError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(LineError::Closed("process closed its output".into()))
            }
        }
    }

    pub fn request(&mut self, line: &str) -> Result<String, LineError> {
        self.send(line)?;
        self.recv()
    }
}

impl Drop for LineProcess {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
