//! Episode records and their JSON-lines log.
//!
//! A log holds one `turn` record per plan/expand cycle and one
//! `protocol_error` record per rejected reply, in reply order, followed by a
//! single `summary` record.

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use tabprep_core::{ColumnSpec, Schema, Table, Value};

use crate::protocol::ProtocolErrorKind;
use crate::reward::RewardBreakdown;
use crate::tree::FailureLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    /// 1-based plan/expand cycle number.
    pub turn: usize,
    /// 0-based index of the policy reply this turn came from.
    pub seq: usize,
    pub plan: String,
    pub parent: Vec<String>,
    pub ops: Vec<String>,
    pub execute_feedback: String,
    pub created_paths: Vec<Vec<String>>,
    /// Operators that landed on an existing identical child.
    pub reused: usize,
    /// Path of the deepest node the expansion reached.
    pub leaf_path: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_at: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolEvent {
    pub seq: usize,
    pub kind: ProtocolErrorKind,
    pub message: String,
    pub reply: String,
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub seq: usize,
    pub plan: String,
    pub path: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Answered,
    TurnLimit,
    ProtocolError,
    EmptyResult,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Answered => "answered",
            Status::TurnLimit => "turn_limit",
            Status::ProtocolError => "protocol_error",
            Status::EmptyResult => "empty_result",
        }
    }
}

/// Token counts reported by a remote policy, when it reports them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub cached_input_tokens: u64,
}

impl Usage {
    pub fn add(&mut self, other: Usage) {
        self.input_tokens += other.input_tokens;
        self.output_tokens += other.output_tokens;
        self.cached_input_tokens += other.cached_input_tokens;
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub task_id: String,
    pub turns: Vec<TurnRecord>,
    pub protocol_errors: Vec<ProtocolEvent>,
    pub answer: Option<AnswerRecord>,
    pub status: Status,
    pub final_table: Option<Table>,
    /// Transport failure message, when the episode aborted on one.
    pub error: Option<String>,
    pub usage: Usage,
    /// Final tree snapshot.
    pub tree: Json,
    pub wall_time: f64,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.status == Status::Answered && self.final_table.as_ref().is_some_and(|t| t.num_rows() > 0)
    }
}

/// Table with typed columns and JSON cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub name: String,
    pub columns: Vec<ColumnSpec>,
    pub rows: Vec<Vec<Json>>,
}

impl TableRecord {
    pub fn from_table(t: &Table) -> Self {
        TableRecord {
            name: t.name().to_string(),
            columns: t.columns().to_vec(),
            rows: t.rows().iter().map(|r| r.iter().map(Value::to_json).collect()).collect(),
        }
    }

    pub fn to_table(&self) -> Result<Table, String> {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .map(|c| Value::from_json(c).ok_or_else(|| format!("row {i}: bad cell {c}")))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Table::new(Schema::new(self.name.clone(), self.columns.clone()), rows).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task_id: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<AnswerRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_table: Option<TableRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub usage: Usage,
    pub tree: Json,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardBreakdown>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Turn(TurnRecord),
    ProtocolError(ProtocolEvent),
    Summary(Summary),
}

pub fn write_log(t: &Trajectory, reward: Option<&RewardBreakdown>) -> String {
    let mut records: Vec<(usize, LogRecord)> = t
        .turns
        .iter()
        .map(|r| (r.seq, LogRecord::Turn(r.clone())))
        .chain(t.protocol_errors.iter().map(|e| (e.seq, LogRecord::ProtocolError(e.clone()))))
        .collect();
    records.sort_by_key(|(seq, _)| *seq);
    records.push((
        usize::MAX,
        LogRecord::Summary(Summary {
            task_id: t.task_id.clone(),
            status: t.status,
            answer: t.answer.clone(),
            final_table: t.final_table.as_ref().map(TableRecord::from_table),
            error: t.error.clone(),
            usage: t.usage,
            tree: t.tree.clone(),
            reward: reward.cloned(),
            wall_time: t.wall_time,
        }),
    ));
    let mut out = String::new();
    for (_, r) in records {
        out.push_str(&serde_json::to_string(&r).expect("log records serialize"));
        out.push('\n');
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("final table: {0}")]
    Table(String),
    #[error("log has no summary record")]
    NoSummary,
}

/// Reads a log back into a trajectory and the reward stored with it.
pub fn read_log(text: &str) -> Result<(Trajectory, Option<RewardBreakdown>), LogError> {
    let mut turns = Vec::new();
    let mut protocol_errors = Vec::new();
    let mut summary = None;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match serde_json::from_str(line).map_err(|source| LogError::Json { line: i + 1, source })? {
            LogRecord::Turn(t) => turns.push(t),
            LogRecord::ProtocolError(e) => protocol_errors.push(e),
            LogRecord::Summary(s) => summary = Some(s),
        }
    }
    let s = summary.ok_or(LogError::NoSummary)?;
    let final_table = s.final_table.as_ref().map(TableRecord::to_table).transpose().map_err(LogError::Table)?;
    let t = Trajectory {
        task_id: s.task_id,
        turns,
        protocol_errors,
        answer: s.answer,
        status: s.status,
        final_table,
        error: s.error,
        usage: s.usage,
        tree: s.tree,
        wall_time: s.wall_time,
    };
    Ok((t, s.reward))
}

/// Drops `wall_time` from every record, for byte-level replay comparisons.
pub fn strip_wall_time(log: &str) -> String {
    let mut out = String::new();
    for line in log.lines() {
        let mut v: Json = serde_json::from_str(line).expect("log line is json");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("wall_time");
        }
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}
