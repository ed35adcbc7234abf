//! Parsing of tagged model replies.
//!
//! A reply carries one `<plan>` block and exactly one decision: either an
//! `<expand>` block (a `parent:` line, then one operator call per line) or an
//! `<answer>` block (the answer path, one call per line, plus an optional
//! `target:` line). `<execute>` blocks belong to the environment.

use serde::{Deserialize, Serialize};
use tabprep_core::ops::{parse_operator_call, parse_operator_sequence, Operator};

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Expand { parent: Vec<Operator>, ops: Vec<Operator> },
    Answer { path: Vec<Operator>, target: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub plan: String,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolErrorKind {
    MissingPlan,
    MultipleDecisions,
    MissingDecision,
    UnclosedTag,
    BadParent,
    BadOps,
    StrayExecute,
    /// An answer naming a path or table that does not exist.
    BadAnswer,
    /// The policy could not be reached.
    Transport,
}

impl ProtocolErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolErrorKind::MissingPlan => "missing_plan",
            ProtocolErrorKind::MultipleDecisions => "multiple_decisions",
            ProtocolErrorKind::MissingDecision => "missing_decision",
            ProtocolErrorKind::UnclosedTag => "unclosed_tag",
            ProtocolErrorKind::BadParent => "bad_parent",
            ProtocolErrorKind::BadOps => "bad_ops",
            ProtocolErrorKind::StrayExecute => "stray_execute",
            ProtocolErrorKind::BadAnswer => "bad_answer",
            ProtocolErrorKind::Transport => "transport",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}: {message}", kind.as_str())]
pub struct ProtocolError {
    pub kind: ProtocolErrorKind,
    pub message: String,
}

fn perr(kind: ProtocolErrorKind, message: impl Into<String>) -> ProtocolError {
    ProtocolError { kind, message: message.into() }
}

const TAGS: [&str; 4] = ["plan", "expand", "execute", "answer"];

struct Block<'a> {
    tag: &'static str,
    body: &'a str,
}

/// Matches `<tag>` or `</tag>` at the start of `s`.
fn tag_at(s: &str) -> Option<(&'static str, bool, usize)> {
    let rest = s.strip_prefix('<')?;
    let (closing, rest) = match rest.strip_prefix('/') {
        Some(r) => (true, r),
        None => (false, rest),
    };
    for tag in TAGS {
        if let Some(after) = rest.strip_prefix(tag) {
            if after.starts_with('>') {
                let len = 1 + usize::from(closing) + tag.len() + 1;
                return Some((tag, closing, len));
            }
        }
    }
    None
}

fn blocks(text: &str) -> Result<Vec<Block<'_>>, ProtocolError> {
    let mut out = Vec::new();
    let mut open: Option<(&'static str, usize)> = None;
    let mut i = 0;
    while i < text.len() {
        let Some(off) = text[i..].find('<') else { break };
        i += off;
        match tag_at(&text[i..]) {
            Some((tag, false, len)) => {
                if let Some((outer, _)) = open {
                    return Err(perr(ProtocolErrorKind::UnclosedTag, format!("<{tag}> opened inside unclosed <{outer}>")));
                }
                open = Some((tag, i + len));
                i += len;
            }
            Some((tag, true, len)) => match open {
                Some((o, start)) if o == tag => {
                    out.push(Block { tag, body: &text[start..i] });
                    open = None;
                    i += len;
                }
                Some((o, _)) => {
                    return Err(perr(ProtocolErrorKind::UnclosedTag, format!("</{tag}> closes <{o}>")))
                }
                None => return Err(perr(ProtocolErrorKind::UnclosedTag, format!("</{tag}> without <{tag}>"))),
            },
            None => i += 1,
        }
    }
    if let Some((tag, _)) = open {
        return Err(perr(ProtocolErrorKind::UnclosedTag, format!("<{tag}> is never closed")));
    }
    Ok(out)
}

/// Non-empty, trimmed lines, skipping markdown code fences.
fn content_lines(body: &str) -> impl Iterator<Item = &str> {
    body.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with("```"))
}

fn parse_ops(lines: &[&str]) -> Result<Vec<Operator>, ProtocolError> {
    lines
        .iter()
        .map(|l| parse_operator_call(l).map_err(|e| perr(ProtocolErrorKind::BadOps, format!("`{l}`: {e}"))))
        .collect()
}

fn parse_expand(body: &str) -> Result<Decision, ProtocolError> {
    let mut lines = content_lines(body);
    let first = lines.next().unwrap_or("");
    let Some(parent) = strip_key(first, "parent") else {
        return Err(perr(ProtocolErrorKind::BadParent, "the expand block must start with a `parent:` line"));
    };
    let parent = if parent.eq_ignore_ascii_case("root") || parent.is_empty() {
        vec![]
    } else {
        parse_operator_sequence(parent).map_err(|e| perr(ProtocolErrorKind::BadParent, format!("parent path: {e}")))?
    };
    let rest: Vec<&str> = lines.collect();
    if rest.is_empty() {
        return Err(perr(ProtocolErrorKind::BadOps, "the expand block has no operator lines"));
    }
    Ok(Decision::Expand { parent, ops: parse_ops(&rest)? })
}

fn parse_answer(body: &str) -> Result<Decision, ProtocolError> {
    let mut target = None;
    let mut op_lines = Vec::new();
    for l in content_lines(body) {
        if let Some(t) = strip_key(l, "target") {
            target = Some(t.trim_matches(|c| c == '"' || c == '\'').to_string());
        } else if !l.eq_ignore_ascii_case("root") {
            op_lines.push(l);
        }
    }
    Ok(Decision::Answer { path: parse_ops(&op_lines)?, target })
}

/// `key: value` with a case-insensitive key.
fn strip_key<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let (k, v) = line.split_once(':')?;
    k.trim().eq_ignore_ascii_case(key).then(|| v.trim())
}

pub fn parse_actions(text: &str) -> Result<Reply, ProtocolError> {
    let blocks = blocks(text)?;
    if blocks.iter().any(|b| b.tag == "execute") {
        return Err(perr(ProtocolErrorKind::StrayExecute, "<execute> blocks are written by the environment, not the model"));
    }
    let plans: Vec<&Block> = blocks.iter().filter(|b| b.tag == "plan").collect();
    let decisions: Vec<&Block> = blocks.iter().filter(|b| b.tag == "expand" || b.tag == "answer").collect();
    if plans.is_empty() {
        return Err(perr(ProtocolErrorKind::MissingPlan, "every reply needs a <plan> block"));
    }
    if plans.len() > 1 || decisions.len() > 1 {
        return Err(perr(
            ProtocolErrorKind::MultipleDecisions,
            format!("expected one plan and one decision, found {} plans and {} decisions", plans.len(), decisions.len()),
        ));
    }
    let Some(decision) = decisions.first() else {
        return Err(perr(ProtocolErrorKind::MissingDecision, "the reply needs an <expand> or an <answer> block"));
    };
    let decision = if decision.tag == "expand" { parse_expand(decision.body)? } else { parse_answer(decision.body)? };
    Ok(Reply { plan: plans[0].body.trim().to_string(), decision })
}
