//! The plan / expand / execute / answer loop.

use std::fmt::Write;
use std::time::Instant;

use tabprep_core::ops::{Engine, OpKind, Operator};
use tabprep_core::{Schema, Table, TableSet};

use crate::observation::{build_observation, LastStep};
use crate::policy::{Message, Policy, Role};
use crate::protocol::{parse_actions, Decision, ProtocolError, ProtocolErrorKind};
use crate::tree::{FailureLog, NodeId, ReasoningTree};
use crate::trajectory::{AnswerRecord, ProtocolEvent, Status, Trajectory, TurnRecord};

pub const DEFAULT_MAX_TURNS: usize = 5;
pub const DEFAULT_SAMPLE_ROWS: usize = 5;

#[derive(Debug, Clone)]
pub struct TaskSpec {
    pub task_id: String,
    pub sources: TableSet,
    /// Carries the free-text target description.
    pub target_schema: Schema,
    pub max_turns: usize,
    /// Table to read the answer from when the answer does not name one.
    pub target_name: Option<String>,
}

impl TaskSpec {
    pub fn new(task_id: impl Into<String>, sources: TableSet, target_schema: Schema) -> Self {
        TaskSpec { task_id: task_id.into(), sources, target_schema, max_turns: DEFAULT_MAX_TURNS, target_name: None }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub sample_rows: usize,
    /// How many past reply/feedback exchanges the policy sees besides the
    /// preamble and the initial observation. `None` sends everything.
    pub history_window: Option<usize>,
    /// Consecutive rejected replies that end the episode.
    pub retry_budget: usize,
    pub preamble: String,
    pub engine: Engine,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            sample_rows: DEFAULT_SAMPLE_ROWS,
            history_window: None,
            retry_budget: 2,
            preamble: default_preamble(),
            engine: Engine::default(),
        }
    }
}

/// The protocol description and operator signatures sent as the system
/// message.
pub fn default_preamble() -> String {
    let mut s = String::from(
        "You prepare tabular data. Starting from the source tables, build an operator pipeline whose \
         final table matches the target schema.\n\n\
         Every reply holds one <plan>...</plan> block followed by exactly one decision block.\n\
         To grow the search tree, reply with\n\
         <expand>\nparent: root\nOperatorCall(...)\nOperatorCall(...)\n</expand>\n\
         where the parent line is `root` or the full operator path of an existing node, calls separated by `;`.\n\
         The environment runs the calls in order and reports the result in an <execute> block. Never write \
         <execute> yourself.\n\
         When a node holds the target table, reply with\n\
         <answer>\nOperatorCall(...)\n...\ntarget: table_name\n</answer>\n\
         listing the full path from the root to that node, one call per line (write `root` for the empty path).\n\n\
         Operators (string arguments are quoted; expressions are quoted DSL such as \"col(\\\"price\\\") > 10\"):\n",
    );
    for k in OpKind::ALL {
        let _ = writeln!(s, "- {}({})", k, k.signature().join(", "));
    }
    s
}

fn window(messages: &[Message], keep: Option<usize>) -> Vec<Message> {
    match keep {
        None => messages.to_vec(),
        Some(n) => {
            let head = &messages[..2.min(messages.len())];
            let tail = &messages[2.min(messages.len())..];
            let skip = tail.len().saturating_sub(2 * n);
            head.iter().chain(&tail[skip..]).cloned().collect()
        }
    }
}

fn texts(ops: &[Operator]) -> Vec<String> {
    ops.iter().map(ToString::to_string).collect()
}

/// Picks the answered table out of a node's state.
fn answer_table(state: &TableSet, target: Option<&str>, task: &TaskSpec) -> Result<Table, String> {
    if let Some(name) = target.or(task.target_name.as_deref()) {
        return state.get(name).cloned().ok_or_else(|| format!("the answered node has no table named {name}"));
    }
    if state.len() == 1 {
        return Ok(state.iter().next().unwrap().clone());
    }
    state.get(&task.target_schema.table_name).cloned().ok_or_else(|| {
        format!("the answered node holds {} tables; add a `target:` line naming one", state.len())
    })
}

pub fn run_episode(task: &TaskSpec, policy: &dyn Policy, config: &EpisodeConfig) -> Trajectory {
    run_episode_with_tree(task, policy, config).0
}

pub fn run_episode_with_tree(task: &TaskSpec, policy: &dyn Policy, config: &EpisodeConfig) -> (Trajectory, ReasoningTree) {
    assert!(task.max_turns >= 1, "max_turns must be at least 1");
    let started = Instant::now();
    let mut tree = ReasoningTree::with_engine(task.sources.clone(), config.engine.clone());
    let mut messages = vec![
        Message::new(Role::System, config.preamble.clone()),
        Message::new(Role::User, build_observation(&tree, LastStep::Initial, task, config.sample_rows)),
    ];
    let mut session = policy.start(task);
    let mut turns: Vec<TurnRecord> = Vec::new();
    let mut events: Vec<ProtocolEvent> = Vec::new();
    let mut answer = None;
    let mut final_table = None;
    let mut error = None;
    let mut consecutive = 0;

    let mut next_seq = 0;
    let status = 'episode: loop {
        let seq = next_seq;
        next_seq += 1;
        let reply = match session.reply(&window(&messages, config.history_window)) {
            Ok(r) => r,
            Err(e) => {
                let message = format!("policy transport failure: {e}");
                events.push(ProtocolEvent {
                    seq,
                    kind: ProtocolErrorKind::Transport,
                    message: message.clone(),
                    reply: String::new(),
                    feedback: String::new(),
                });
                error = Some(message);
                break Status::ProtocolError;
            }
        };
        messages.push(Message::new(Role::Assistant, reply.clone()));

        let rejection: ProtocolError = match parse_actions(&reply) {
            Err(e) => e,
            Ok(parsed) => match parsed.decision {
                Decision::Expand { parent, ops } => match tree.resolve_parent(&parent) {
                    Err(e) => ProtocolError { kind: ProtocolErrorKind::BadParent, message: e.to_string() },
                    Ok(p) => {
                        let turn = turns.len() + 1;
                        let e = tree.expand_and_execute(p, &ops, turn);
                        let feedback =
                            build_observation(&tree, LastStep::Expanded { ops: ops.len(), expansion: &e }, task, config.sample_rows);
                        let path = |id: NodeId| texts(&tree.extract_answer_path(id));
                        turns.push(TurnRecord {
                            turn,
                            seq,
                            plan: parsed.plan,
                            parent: texts(&parent),
                            ops: texts(&ops),
                            execute_feedback: feedback.clone(),
                            created_paths: e.created.iter().map(|&id| path(id)).collect(),
                            reused: e.reached.len() - e.created.len(),
                            leaf_path: path(e.leaf),
                            failed_at: e.failure.as_ref().map(|(i, _)| *i),
                            failure: e.failure.as_ref().map(|(_, f)| FailureLog::new(f, tree.extract_answer_path(e.leaf))),
                        });
                        messages.push(Message::new(Role::User, feedback));
                        consecutive = 0;
                        if turns.len() >= task.max_turns {
                            break 'episode Status::TurnLimit;
                        }
                        continue;
                    }
                },
                Decision::Answer { path, target } => {
                    let picked = tree
                        .resolve_parent(&path)
                        .map_err(|e| e.to_string())
                        .and_then(|leaf| answer_table(&tree.node(leaf).state, target.as_deref(), task));
                    match picked {
                        Err(message) => ProtocolError { kind: ProtocolErrorKind::BadAnswer, message },
                        Ok(table) => {
                            let empty = table.num_rows() == 0;
                            answer = Some(AnswerRecord { seq, plan: parsed.plan, path: texts(&path), target });
                            final_table = Some(table);
                            break 'episode if empty { Status::EmptyResult } else { Status::Answered };
                        }
                    }
                }
            },
        };

        let feedback = build_observation(&tree, LastStep::Rejected(&rejection), task, config.sample_rows);
        events.push(ProtocolEvent {
            seq,
            kind: rejection.kind,
            message: rejection.message.clone(),
            reply,
            feedback: feedback.clone(),
        });
        messages.push(Message::new(Role::User, feedback));
        consecutive += 1;
        if consecutive >= config.retry_budget {
            break Status::ProtocolError;
        }
    };

    let trajectory = Trajectory {
        task_id: task.task_id.clone(),
        turns,
        protocol_errors: events,
        answer,
        status,
        final_table,
        error,
        usage: session.usage(),
        tree: tree.snapshot(),
        wall_time: started.elapsed().as_secs_f64(),
    };
    (trajectory, tree)
}
