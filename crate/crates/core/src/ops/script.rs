//! Pluggable execution of synthesized scripts for `ExeCode`.
//!
//! The subprocess protocol: the command receives the script source as its
//! last argument and the input tables on stdin as csv sections, each
//! introduced by a `--- table: <name>` line. It must print exactly one csv
//! table on stdout and exit 0.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::util::{self, store_derived, Failure, OpResult};
use super::{ExecErrorKind, Operator};
use crate::io::{csv_from_str, csv_to_string};
use crate::table::{Table, TableSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScriptError {
    #[error("backend disabled")]
    Disabled,
    #[error("script timed out after {0:?}")]
    Timeout(Duration),
    #[error("script exited with status {code:?}: {stderr}")]
    Exit { code: Option<i32>, stderr: String },
    #[error("malformed output table: {0}")]
    Malformed(String),
    #[error("script backend i/o failure: {0}")]
    Io(String),
}

pub trait ScriptBackend: Send + Sync {
    /// Runs `source` over `inputs` and returns the table it produced, named
    /// `target`.
    fn run(&self, source: &str, inputs: &[&Table], target: &str) -> Result<Table, ScriptError>;
}

/// Runs an external command per call. Calls on one backend are serialized.
pub struct SubprocessBackend {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    lock: Mutex<()>,
}

impl SubprocessBackend {
    pub fn new(program: impl Into<String>, args: Vec<String>, timeout: Duration) -> Self {
        SubprocessBackend { program: program.into(), args, timeout, lock: Mutex::new(()) }
    }
}

pub fn encode_inputs(inputs: &[&Table]) -> Result<String, ScriptError> {
    let mut out = String::new();
    for t in inputs {
        out.push_str(&format!("--- table: {}\n", t.name()));
        out.push_str(&csv_to_string(t).map_err(|e| ScriptError::Io(e.to_string()))?);
    }
    Ok(out)
}

impl ScriptBackend for SubprocessBackend {
    fn run(&self, source: &str, inputs: &[&Table], target: &str) -> Result<Table, ScriptError> {
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        let payload = encode_inputs(inputs)?;
        let io = |e: std::io::Error| ScriptError::Io(e.to_string());
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(source)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(io)?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = thread::spawn(move || {
            // a script may exit without reading its input
            let _ = stdin.write_all(payload.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut buf = String::new();
            stdout.read_to_string(&mut buf).map(|_| buf)
        });
        let mut stderr = child.stderr.take().expect("piped stderr");
        let err_reader = thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr.read_to_string(&mut buf);
            buf
        });

        let deadline = Instant::now() + self.timeout;
        let status = loop {
            if let Some(status) = child.try_wait().map_err(io)? {
                break status;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ScriptError::Timeout(self.timeout));
            }
            thread::sleep(Duration::from_millis(5));
        };
        let _ = writer.join();
        let text = reader.join().map_err(|_| ScriptError::Io("stdout reader panicked".into()))?.map_err(io)?;
        let stderr = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(ScriptError::Exit { code: status.code(), stderr: stderr.trim().to_string() });
        }
        if text.trim().is_empty() {
            return Err(ScriptError::Malformed("empty output".into()));
        }
        csv_from_str(target, &text, None).map_err(|e| ScriptError::Malformed(e.to_string()))
    }
}

pub(super) fn apply(backend: Option<&dyn ScriptBackend>, op: &Operator, state: &TableSet) -> OpResult {
    let Operator::ExeCode { tables, target, func } = op else {
        unreachable!("not a program-synthesis operator")
    };
    let backend = backend.ok_or_else(|| Failure::new(ExecErrorKind::Backend, ScriptError::Disabled.to_string()))?;
    let inputs = tables.iter().map(|n| util::table(state, n).map(|t| t.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let out = backend
        .run(func, &inputs, target)
        .map_err(|e| Failure::new(ExecErrorKind::Backend, e.to_string()))?
        .with_name(target.clone());
    let names: Vec<&str> = tables.iter().map(String::as_str).collect();
    store_derived(state, out, &names, &[])
}
