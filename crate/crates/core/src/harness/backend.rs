//! Generation backends: in-process mock, subprocess line protocol, and a
//! single-endpoint HTTP service.
//!
//! Every backend receives the same request object — entry id, eval prompt,
//! frame plan, optional frame paths, and the generation config — and returns
//! one prediction per entry.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoding::{generate_mock, GenerationConfig};
use crate::sampling::FramePlan;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend startup failed: {0}")]
    Startup(String),

    #[error("backend unreachable: {0}")]
    Connect(String),

    #[error("backend timed out after {0:?}")]
    Timeout(Duration),

    #[error("backend protocol error: {0}")]
    Protocol(String),

    #[error("generation failed: {0}")]
    Generation(String),
}

/// One unit of work sent to a backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendRequest {
    pub entry_id: String,
    pub prompt: String,
    pub plan: FramePlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<String>>,
    pub config: GenerationConfig,
}

/// One prediction returned by a backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendResponse {
    pub entry_id: String,
    pub text: String,
}

/// A generation engine satisfying the harness wire contract.
pub trait Backend: Send + Sync {
    fn generate(&self, request: &BackendRequest) -> Result<String, BackendError>;
}

/// Deterministic in-process backend driving the mock generator.
pub struct MockBackend;

impl Backend for MockBackend {
    fn generate(&self, request: &BackendRequest) -> Result<String, BackendError> {
        generate_mock(&request.prompt, &request.config)
            .map_err(|e| BackendError::Generation(e.to_string()))
    }
}

struct SubprocessInner {
    child: Child,
    stdin: Option<ChildStdin>,
    responses: Receiver<std::io::Result<String>>,
}

/// Long-lived child process speaking one JSON object per line on stdin and
/// stdout. Requests run in lockstep; stale responses from timed-out entries
/// are discarded by entry id.
pub struct SubprocessBackend {
    inner: Mutex<SubprocessInner>,
    timeout: Duration,
}

impl SubprocessBackend {
    /// Spawns the child from a whitespace-split command line. A missing
    /// binary is a startup error.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, BackendError> {
        let argv: Vec<&str> = command.split_whitespace().collect();
        if argv.is_empty() {
            return Err(BackendError::Startup(
                "subprocess backend needs a non-empty command".to_string(),
            ));
        }
        let mut child = Command::new(argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| BackendError::Startup(format!("failed to spawn {}: {e}", argv[0])))?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            inner: Mutex::new(SubprocessInner {
                child,
                stdin: Some(stdin),
                responses: rx,
            }),
            timeout,
        })
    }
}

impl Backend for SubprocessBackend {
    fn generate(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let mut inner = self.inner.lock().expect("subprocess lock");
        let stdin = inner
            .stdin
            .as_mut()
            .ok_or_else(|| BackendError::Protocol("backend already shut down".to_string()))?;
        let line = serde_json::to_string(request)
            .map_err(|e| BackendError::Protocol(format!("request serialization: {e}")))?;
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.write_all(b"\n"))
            .and_then(|_| stdin.flush())
            .map_err(|e| BackendError::Protocol(format!("write to backend failed: {e}")))?;

        let deadline = Instant::now() + self.timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(BackendError::Timeout(self.timeout));
            }
            match inner.responses.recv_timeout(remaining) {
                Ok(Ok(line)) => {
                    let response: BackendResponse = serde_json::from_str(&line)
                        .map_err(|e| BackendError::Protocol(format!("bad response line: {e}")))?;
                    if response.entry_id == request.entry_id {
                        return Ok(response.text);
                    }
                    // stale response from an entry that already timed out
                }
                Ok(Err(e)) => {
                    return Err(BackendError::Protocol(format!(
                        "read from backend failed: {e}"
                    )))
                }
                Err(RecvTimeoutError::Timeout) => return Err(BackendError::Timeout(self.timeout)),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(BackendError::Protocol(
                        "backend closed its output".to_string(),
                    ))
                }
            }
        }
    }
}

impl Drop for SubprocessBackend {
    fn drop(&mut self) {
        if let Ok(inner) = self.inner.get_mut() {
            inner.stdin.take(); // EOF signals shutdown
            for _ in 0..20 {
                match inner.child.try_wait() {
                    Ok(Some(_)) => return,
                    Ok(None) => std::thread::sleep(Duration::from_millis(50)),
                    Err(_) => break,
                }
            }
            let _ = inner.child.kill();
            let _ = inner.child.wait();
        }
    }
}

/// HTTP backend posting each request to a single endpoint.
pub struct NetworkBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
}

impl NetworkBackend {
    pub fn new(endpoint: &str, timeout: Duration) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .connect_timeout(timeout.min(Duration::from_secs(5)))
            .build()
            .map_err(|e| BackendError::Startup(format!("http client: {e}")))?;
        Ok(Self {
            client,
            endpoint: endpoint.to_string(),
        })
    }
}

impl Backend for NetworkBackend {
    fn generate(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let response = self
            .client
            .post(&self.endpoint)
            .json(request)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    BackendError::Timeout(Duration::ZERO)
                } else if e.is_connect() {
                    BackendError::Connect(e.to_string())
                } else {
                    BackendError::Protocol(e.to_string())
                }
            })?;
        let response = response
            .error_for_status()
            .map_err(|e| BackendError::Generation(e.to_string()))?;
        let body: BackendResponse = response
            .json()
            .map_err(|e| BackendError::Protocol(format!("bad response body: {e}")))?;
        if body.entry_id != request.entry_id {
            return Err(BackendError::Protocol(format!(
                "response for {} does not match request {}",
                body.entry_id, request.entry_id
            )));
        }
        Ok(body.text)
    }
}

/// TCP reachability check against an `http(s)://host[:port]/...` endpoint.
pub fn probe_endpoint(endpoint: &str, timeout: Duration) -> Result<(), BackendError> {
    let (rest, default_port) = if let Some(rest) = endpoint.strip_prefix("http://") {
        (rest, 80u16)
    } else if let Some(rest) = endpoint.strip_prefix("https://") {
        (rest, 443u16)
    } else {
        return Err(BackendError::Startup(format!(
            "endpoint {endpoint} must be an http(s) URL"
        )));
    };
    let authority = rest.split('/').next().unwrap_or_default();
    if authority.is_empty() {
        return Err(BackendError::Startup(format!(
            "endpoint {endpoint} has no host"
        )));
    }
    let address = if authority.contains(':') {
        authority.to_string()
    } else {
        format!("{authority}:{default_port}")
    };
    let resolved = address
        .to_socket_addrs()
        .map_err(|e| BackendError::Connect(format!("cannot resolve {address}: {e}")))?
        .next()
        .ok_or_else(|| BackendError::Connect(format!("no addresses for {address}")))?;
    TcpStream::connect_timeout(&resolved, timeout.min(Duration::from_secs(5)))
        .map(|_| ())
        .map_err(|e| BackendError::Connect(format!("cannot reach {address}: {e}")))
}
