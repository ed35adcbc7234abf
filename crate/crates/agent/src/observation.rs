//! Text the environment shows the policy. Everything here is a pure
//! function of the tree, the last step and the task.

use std::fmt::Write;

use tabprep_core::{serialize_table, Schema, TableSet};

use crate::episode::TaskSpec;
use crate::protocol::ProtocolError;
use crate::tree::{path_text, Expansion, ReasoningTree};

pub enum LastStep<'a> {
    Initial,
    Expanded { ops: usize, expansion: &'a Expansion },
    Rejected(&'a ProtocolError),
}

pub fn render_schema(schema: &Schema) -> String {
    let mut out = String::from("## Target schema\n");
    let _ = writeln!(out, "table: {}", schema.table_name);
    if let Some(d) = &schema.description {
        let _ = writeln!(out, "description: {d}");
    }
    out.push_str("columns:\n");
    for c in &schema.columns {
        let _ = writeln!(out, "- {}: {}", c.name, c.dtype);
    }
    out
}

fn render_state(out: &mut String, state: &TableSet, sample_rows: usize) {
    for t in state.iter() {
        let _ = writeln!(out, "### {}", t.name());
        out.push_str(&serialize_table(t, sample_rows));
    }
}

/// The `<execute>` block reporting one expansion.
pub fn execute_feedback(tree: &ReasoningTree, ops: usize, e: &Expansion, sample_rows: usize) -> String {
    let mut out = String::from("<execute>\n");
    let done = e.failure.as_ref().map_or(ops, |(i, _)| *i);
    let _ = writeln!(out, "executed {done} of {ops} operators");
    for &id in &e.reached {
        let path = tree.extract_answer_path(id);
        let _ = writeln!(out, "\nnode: {}", path_text(&path));
        if !e.created.contains(&id) {
            out.push_str("(existing node, not re-executed)\n");
        }
        render_state(&mut out, &tree.node(id).state, sample_rows);
    }
    if let Some((_, f)) = &e.failure {
        let _ = writeln!(out, "\nfailed operator: {}", f.attempted_op);
        let _ = writeln!(out, "error: {}", f.error.message);
        let _ = writeln!(out, "failure recorded at node: {}", path_text(&tree.extract_answer_path(e.leaf)));
    }
    out.push_str("</execute>\n");
    out
}

pub fn build_observation(tree: &ReasoningTree, last: LastStep<'_>, task: &TaskSpec, sample_rows: usize) -> String {
    let mut out = String::new();
    match last {
        LastStep::Initial => {
            out.push_str(&render_schema(&task.target_schema));
            out.push_str("\n## Source tables\n");
            render_state(&mut out, &tree.root().state, sample_rows);
            out.push_str("\nnode: root\n");
        }
        LastStep::Expanded { ops, expansion } => {
            out.push_str(&execute_feedback(tree, ops, expansion, sample_rows));
            out.push('\n');
            out.push_str(&render_schema(&task.target_schema));
        }
        LastStep::Rejected(e) => {
            let _ = writeln!(out, "<execute>\nreply rejected ({}): {}", e.kind.as_str(), e.message);
            out.push_str("reply with one <plan> block and exactly one <expand> or <answer> block\n</execute>\n");
        }
    }
    out
}
