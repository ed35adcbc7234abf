//! Pipelines: ordered operator sequences over a set of source tables.

use std::fmt::Write as _;

use crate::ops::{parse_operator_call, Engine, ExecError, OpParseError, Operator};
use crate::table::{Table, TableSet};

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub sources: TableSet,
    pub ops: Vec<Operator>,
}

/// Intermediate states of one run. On failure `states` ends with the state
/// the failing operator was applied to.
#[derive(Debug, Clone)]
pub struct ExecutionTrace {
    pub states: Vec<TableSet>,
    pub failure: Option<(usize, ExecError)>,
}

impl ExecutionTrace {
    pub fn last_state(&self) -> &TableSet {
        self.states.last().expect("trace always holds the source state")
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn run_pipeline(p: &Pipeline) -> ExecutionTrace {
    run_pipeline_with(&Engine::default(), &p.sources, &p.ops)
}

pub fn run_pipeline_with(engine: &Engine, sources: &TableSet, ops: &[Operator]) -> ExecutionTrace {
    let mut states = vec![sources.clone()];
    for (i, op) in ops.iter().enumerate() {
        match engine.execute(op, states.last().unwrap()) {
            Ok(next) => states.push(next),
            Err(e) => return ExecutionTrace { states, failure: Some((i, e)) },
        }
    }
    ExecutionTrace { states, failure: None }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FinalTableError {
    #[error("pipeline failed at operator {index}: {message}")]
    Failed { index: usize, message: String },
    #[error("final state holds {0} tables; name the target table")]
    Ambiguous(usize),
    #[error("final state has no table named {0}")]
    Missing(String),
}

/// Picks the target table out of the last state. The name may be omitted
/// when exactly one table is left.
pub fn final_table(trace: &ExecutionTrace, target: Option<&str>) -> Result<Table, FinalTableError> {
    if let Some((index, e)) = &trace.failure {
        return Err(FinalTableError::Failed { index: *index, message: e.message.clone() });
    }
    let last = trace.last_state();
    match target {
        Some(name) => last.get(name).cloned().ok_or_else(|| FinalTableError::Missing(name.to_string())),
        None if last.len() == 1 => Ok(last.iter().next().unwrap().clone()),
        None => Err(FinalTableError::Ambiguous(last.len())),
    }
}

/// One operator call per line, each line terminated by a newline.
pub fn serialize_pipeline(ops: &[Operator]) -> String {
    let mut out = String::new();
    for op in ops {
        let _ = writeln!(out, "{op}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {error}")]
pub struct PipelineParseError {
    /// 1-based.
    pub line: usize,
    pub error: OpParseError,
}

/// Inverse of [`serialize_pipeline`]. Blank lines are skipped.
pub fn parse_pipeline(text: &str) -> Result<Vec<Operator>, PipelineParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_operator_call(l.trim()).map_err(|error| PipelineParseError { line: i + 1, error }))
        .collect()
}
