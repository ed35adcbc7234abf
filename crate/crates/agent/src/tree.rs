//! The reasoning tree: materialized table states joined by executed
//! operators. Nodes are addressed by their operator path from the root.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use tabprep_core::ops::{Engine, ExecError, ExecErrorKind, Operator};
use tabprep_core::TableSet;

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct FailureRecord {
    pub attempted_op: Operator,
    pub error: ExecError,
    pub turn: usize,
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: NodeId,
    pub state: TableSet,
    pub parent: Option<NodeId>,
    pub incoming_op: Option<Operator>,
    pub children: Vec<NodeId>,
    pub failures: Vec<FailureRecord>,
}

/// Result of one expansion. `reached` lists every node the chain passed
/// through, in order, whether newly created or an existing child reused
/// because it carries the same operator.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub leaf: NodeId,
    pub reached: Vec<NodeId>,
    pub created: Vec<NodeId>,
    /// The failure and the index of the failing operator in the chain.
    pub failure: Option<(usize, FailureRecord)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("no node at that path: operator {} `{op}` matches no child of {at}; available: {}", index + 1, list(available))]
pub struct NoSuchPath {
    /// 0-based position of the first unmatched operator in the prefix.
    pub index: usize,
    pub op: String,
    /// Path of the last matched node, as pipeline text or `root`.
    pub at: String,
    pub available: Vec<String>,
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join(" | ")
    }
}

#[derive(Debug, Clone)]
pub struct ReasoningTree {
    nodes: Vec<TreeNode>,
    engine: Engine,
}

pub const ROOT: NodeId = 0;

impl ReasoningTree {
    pub fn new(sources: TableSet) -> Self {
        Self::with_engine(sources, Engine::default())
    }

    pub fn with_engine(sources: TableSet, engine: Engine) -> Self {
        let root = TreeNode { id: ROOT, state: sources, parent: None, incoming_op: None, children: vec![], failures: vec![] };
        ReasoningTree { nodes: vec![root], engine }
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[ROOT]
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn child_with(&self, id: NodeId, op: &Operator) -> Option<NodeId> {
        self.nodes[id].children.iter().copied().find(|&c| self.nodes[c].incoming_op.as_ref() == Some(op))
    }

    /// Walks from the root matching each operator structurally.
    pub fn resolve_parent(&self, prefix: &[Operator]) -> Result<NodeId, NoSuchPath> {
        let mut at = ROOT;
        for (index, op) in prefix.iter().enumerate() {
            match self.child_with(at, op) {
                Some(c) => at = c,
                None => {
                    return Err(NoSuchPath {
                        index,
                        op: op.to_string(),
                        at: path_text(&self.extract_answer_path(at)),
                        available: self.nodes[at]
                            .children
                            .iter()
                            .map(|&c| self.nodes[c].incoming_op.as_ref().unwrap().to_string())
                            .collect(),
                    })
                }
            }
        }
        Ok(at)
    }

    /// Executes `ops` in sequence from `parent`. Each success adds (or
    /// reuses) a child. The first failure stops the chain and is recorded on
    /// the deepest node reached; no node is created for it.
    pub fn expand_and_execute(&mut self, parent: NodeId, ops: &[Operator], turn: usize) -> Expansion {
        assert!(parent < self.nodes.len(), "parent not in tree");
        let mut at = parent;
        let mut reached = Vec::new();
        let mut created = Vec::new();
        for (i, op) in ops.iter().enumerate() {
            if let Some(c) = self.child_with(at, op) {
                at = c;
                reached.push(c);
                continue;
            }
            match self.engine.execute(op, &self.nodes[at].state) {
                Ok(state) => {
                    let id = self.nodes.len();
                    self.nodes.push(TreeNode {
                        id,
                        state,
                        parent: Some(at),
                        incoming_op: Some(op.clone()),
                        children: vec![],
                        failures: vec![],
                    });
                    self.nodes[at].children.push(id);
                    at = id;
                    reached.push(id);
                    created.push(id);
                }
                Err(error) => {
                    let record = FailureRecord { attempted_op: op.clone(), error, turn };
                    self.nodes[at].failures.push(record.clone());
                    return Expansion { leaf: at, reached, created, failure: Some((i, record)) };
                }
            }
        }
        Expansion { leaf: at, reached, created, failure: None }
    }

    /// Operators on the path from the root to `leaf`.
    pub fn extract_answer_path(&self, leaf: NodeId) -> Vec<Operator> {
        let mut path = Vec::new();
        let mut at = leaf;
        while let Some(p) = self.nodes[at].parent {
            path.push(self.nodes[at].incoming_op.clone().expect("non-root node has an operator"));
            at = p;
        }
        path.reverse();
        path
    }

    pub fn depth(&self, id: NodeId) -> usize {
        let mut d = 0;
        let mut at = id;
        while let Some(p) = self.nodes[at].parent {
            d += 1;
            at = p;
        }
        d
    }

    /// JSON view: one entry per node with its path, table summaries and
    /// failures.
    pub fn snapshot(&self) -> Json {
        let nodes: Vec<Json> = self
            .nodes
            .iter()
            .map(|n| {
                let tables: Vec<Json> = n
                    .state
                    .iter()
                    .map(|t| json!({ "name": t.name(), "columns": t.column_names(), "rows": t.num_rows() }))
                    .collect();
                json!({
                    "id": n.id,
                    "parent": n.parent,
                    "path": self.extract_answer_path(n.id).iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "tables": tables,
                    "failures": n.failures.iter().map(|f| FailureLog::new(f, self.extract_answer_path(n.id))).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "root": ROOT, "nodes": nodes })
    }
}

/// Pipeline text of a path, or `root` for the empty path.
pub fn path_text(path: &[Operator]) -> String {
    if path.is_empty() {
        "root".into()
    } else {
        path.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
    }
}

/// Serializable form of a failure, as it appears in logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureLog {
    pub op: String,
    pub kind: ExecErrorKind,
    pub message: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    /// Path of the node the failure is attached to.
    pub node_path: Vec<String>,
    pub turn: usize,
}

impl FailureLog {
    pub fn new(f: &FailureRecord, node_path: Vec<Operator>) -> Self {
        FailureLog {
            op: f.attempted_op.to_string(),
            kind: f.error.kind,
            message: f.error.message.clone(),
            detail: f.error.detail.clone(),
            subject: f.error.subject.clone(),
            node_path: node_path.iter().map(ToString::to_string).collect(),
            turn: f.turn,
        }
    }
}
