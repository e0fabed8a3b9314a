//! Line-delimited protocol client for out-of-process simulators.
//!
//! The child announces itself with one handshake line:
//!   {"protocol": 1, "mode": "trajectory"|"mu", "dim": D, "predicates": [names]}
//! then answers each request {"id": k, "w": [doubles]} with either
//!   {"id": k, "trajectory": {"t": [...], "channels": {name: [...]}}}
//! or
//!   {"id": k, "mu": {name: value}}
//! according to its declared mode. Any protocol violation aborts the run;
//! the offending payload is logged.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Trajectory;

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("failed to spawn `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("no handshake from child: {0}")]
    NoHandshake(String),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u32),
    #[error("child exited while request {id} was pending")]
    ChildExited { id: u64 },
    #[error("malformed message ({detail}); payload: {payload}")]
    Malformed { detail: String, payload: String },
    #[error("reply id {got} does not match request {expected}; payload: {payload}")]
    IdMismatch {
        expected: u64,
        got: u64,
        payload: String,
    },
    #[error("no reply to request {id} within {timeout:?}")]
    Timeout { id: u64, timeout: Duration },
    #[error("i/o with child failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireMode {
    Trajectory,
    Mu,
}

/// The child's self-description, received once at startup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol: u32,
    pub mode: WireMode,
    pub dim: usize,
    pub predicates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimResponse {
    Trajectory(Trajectory),
    Mu(BTreeMap<String, f64>),
}

#[derive(Serialize)]
struct WireRequest<'a> {
    id: u64,
    w: &'a [f64],
}

#[derive(Deserialize)]
struct WireResponse {
    id: u64,
    trajectory: Option<Trajectory>,
    mu: Option<BTreeMap<String, f64>>,
}

/// One child process, one in-flight request at a time.
#[derive(Debug)]
pub struct ExternalSimulator {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    reader: Option<JoinHandle<()>>,
    handshake: Handshake,
    next_id: u64,
    timeout: Duration,
}

impl ExternalSimulator {
    /// Spawns `command` (program plus arguments) and completes the
    /// handshake within `timeout`.
    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self, ProtocolError> {
        let program = command.first().ok_or_else(|| ProtocolError::NoHandshake(
            "empty command".into(),
        ))?;
        let mut child = Command::new(program)
            .args(&command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|source| ProtocolError::Spawn {
                command: command.join(" "),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");

        let (tx, lines) = mpsc::channel();
        let reader = std::thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });

        let mut sim = ExternalSimulator {
            child,
            stdin,
            lines,
            reader: Some(reader),
            handshake: Handshake {
                protocol: 0,
                mode: WireMode::Mu,
                dim: 0,
                predicates: Vec::new(),
            },
            next_id: 1,
            timeout,
        };
        let line = sim.recv_line(0).map_err(|e| match e {
            ProtocolError::ChildExited { .. } => {
                ProtocolError::NoHandshake("child exited before the handshake".into())
            }
            other => other,
        })?;
        let handshake: Handshake =
            serde_json::from_str(line.trim()).map_err(|e| log_err(ProtocolError::Malformed {
                detail: format!("handshake: {e}"),
                payload: line.trim().to_string(),
            }))?;
        if handshake.protocol != PROTOCOL_VERSION {
            return Err(log_err(ProtocolError::UnsupportedVersion(handshake.protocol)));
        }
        sim.handshake = handshake;
        Ok(sim)
    }

    pub fn handshake(&self) -> &Handshake {
        &self.handshake
    }

    fn recv_line(&self, id: u64) -> Result<String, ProtocolError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(log_err(ProtocolError::Io(e))),
            Err(RecvTimeoutError::Timeout) => Err(log_err(ProtocolError::Timeout {
                id,
                timeout: self.timeout,
            })),
            Err(RecvTimeoutError::Disconnected) => Err(log_err(ProtocolError::ChildExited { id })),
        }
    }

    /// One request/response round trip.
    pub fn simulate(&mut self, w: &[f64]) -> Result<SimResponse, ProtocolError> {
        let id = self.next_id;
        self.next_id += 1;

        let mut line = serde_json::to_string(&WireRequest { id, w }).expect("serializable");
        line.push('\n');
        self.stdin.write_all(line.as_bytes()).map_err(|e| {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                log_err(ProtocolError::ChildExited { id })
            } else {
                log_err(ProtocolError::Io(e))
            }
        })?;
        self.stdin.flush().ok();

        let raw = self.recv_line(id)?;
        let payload = raw.trim().to_string();
        let response: WireResponse = serde_json::from_str(&payload).map_err(|e| {
            log_err(ProtocolError::Malformed {
                detail: e.to_string(),
                payload: payload.clone(),
            })
        })?;
        if response.id != id {
            return Err(log_err(ProtocolError::IdMismatch {
                expected: id,
                got: response.id,
                payload,
            }));
        }
        match (self.handshake.mode, response.trajectory, response.mu) {
            (WireMode::Trajectory, Some(t), _) => Ok(SimResponse::Trajectory(t)),
            (WireMode::Mu, _, Some(m)) => Ok(SimResponse::Mu(m)),
            (mode, _, _) => Err(log_err(ProtocolError::Malformed {
                detail: format!("reply is missing the `{}` field its handshake promised",
                    match mode { WireMode::Trajectory => "trajectory", WireMode::Mu => "mu" }),
                payload,
            })),
        }
    }
}

fn log_err(err: ProtocolError) -> ProtocolError {
    log::error!("external simulator: {err}");
    err
}

impl Drop for ExternalSimulator {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
        if let Some(handle) = self.reader.take() {
            let _ = handle.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spawn_script(script: &str, timeout_ms: u64) -> Result<ExternalSimulator, ProtocolError> {
        ExternalSimulator::spawn(
            &["sh".into(), "-c".into(), script.into()],
            Duration::from_millis(timeout_ms),
        )
    }

    #[test]
    fn mu_mode_round_trip() {
        let script = r#"
echo '{"protocol":1,"mode":"mu","dim":2,"predicates":["m"]}'
read line
echo '{"id":1,"mu":{"m":0.25}}'
"#;
        let mut sim = spawn_script(script, 5000).unwrap();
        assert_eq!(sim.handshake().dim, 2);
        assert_eq!(sim.handshake().mode, WireMode::Mu);
        assert_eq!(sim.handshake().predicates, vec!["m".to_string()]);
        match sim.simulate(&[0.25, 1.0]).unwrap() {
            SimResponse::Mu(map) => assert_eq!(map.get("m"), Some(&0.25)),
            other => panic!("expected mu reply, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_mode_round_trip() {
        let script = r#"
echo '{"protocol":1,"mode":"trajectory","dim":1,"predicates":["p"]}'
read line
echo '{"id":1,"trajectory":{"t":[0.0,1.0],"channels":{"x":[1.5,2.5]}}}'
"#;
        let mut sim = spawn_script(script, 5000).unwrap();
        match sim.simulate(&[0.0]).unwrap() {
            SimResponse::Trajectory(t) => {
                assert_eq!(t.times(), [0.0, 1.0]);
                assert_eq!(t.channel("x").unwrap(), [1.5, 2.5]);
            }
            other => panic!("expected trajectory reply, got {other:?}"),
        }
    }

    #[test]
    fn child_exit_names_the_pending_request() {
        let script = r#"echo '{"protocol":1,"mode":"mu","dim":1,"predicates":[]}'"#;
        let mut sim = spawn_script(script, 5000).unwrap();
        let err = sim.simulate(&[0.0]).unwrap_err();
        assert!(matches!(err, ProtocolError::ChildExited { id: 1 }), "{err}");
    }

    #[test]
    fn malformed_reply_carries_the_payload() {
        let script = r#"
echo '{"protocol":1,"mode":"mu","dim":1,"predicates":[]}'
read line
echo 'this is not a message'
"#;
        let mut sim = spawn_script(script, 5000).unwrap();
        match sim.simulate(&[0.0]).unwrap_err() {
            ProtocolError::Malformed { payload, .. } => {
                assert_eq!(payload, "this is not a message")
            }
            other => panic!("expected malformed, got {other}"),
        }
    }

    #[test]
    fn invalid_trajectory_is_malformed() {
        let script = r#"
echo '{"protocol":1,"mode":"trajectory","dim":1,"predicates":[]}'
read line
echo '{"id":1,"trajectory":{"t":[1.0,0.5],"channels":{}}}'
"#;
        let mut sim = spawn_script(script, 5000).unwrap();
        assert!(matches!(
            sim.simulate(&[0.0]).unwrap_err(),
            ProtocolError::Malformed { .. }
        ));
    }

    #[test]
    fn id_mismatch_is_rejected() {
        let script = r#"
echo '{"protocol":1,"mode":"mu","dim":1,"predicates":[]}'
read line
echo '{"id":7,"mu":{}}'
"#;
        let mut sim = spawn_script(script, 5000).unwrap();
        match sim.simulate(&[0.0]).unwrap_err() {
            ProtocolError::IdMismatch { expected: 1, got: 7, .. } => {}
            other => panic!("expected id mismatch, got {other}"),
        }
    }

    #[test]
    fn slow_child_times_out() {
        let script = r#"
echo '{"protocol":1,"mode":"mu","dim":1,"predicates":[]}'
read line
sleep 5
"#;
        let mut sim = spawn_script(script, 200).unwrap();
        assert!(matches!(
            sim.simulate(&[0.0]).unwrap_err(),
            ProtocolError::Timeout { id: 1, .. }
        ));
    }

    #[test]
    fn wrong_protocol_version_rejected() {
        let script = r#"echo '{"protocol":2,"mode":"mu","dim":1,"predicates":[]}'"#;
        assert!(matches!(
            spawn_script(script, 5000).unwrap_err(),
            ProtocolError::UnsupportedVersion(2)
        ));
    }

    #[test]
    fn silent_child_has_no_handshake() {
        assert!(matches!(
            spawn_script("true", 5000).unwrap_err(),
            ProtocolError::NoHandshake(_)
        ));
    }
}
