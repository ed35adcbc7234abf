//! Hybrid reward: outcome, partial similarity and a process judge.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use tabprep_core::ops::parse_operator_call;
use tabprep_core::{canonicalize, tables_equal, Schema, Table};

use crate::policy::{ChatBackend, Message, Role};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { alpha: 1.0, beta: 0.5, gamma: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_out: f64,
    pub s_sch: f64,
    pub s_shp: f64,
    pub s_cnt: f64,
    pub r_part: f64,
    pub r_llm: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialScores {
    pub s_sch: f64,
    pub s_shp: f64,
    pub s_cnt: f64,
    pub r_part: f64,
}

impl PartialScores {
    pub const ZERO: PartialScores = PartialScores { s_sch: 0.0, s_shp: 0.0, s_cnt: 0.0, r_part: 0.0 };
    pub const ONE: PartialScores = PartialScores { s_sch: 1.0, s_shp: 1.0, s_cnt: 1.0, r_part: 1.0 };
}

pub fn outcome_reward(pred: &Table, target: &Table) -> f64 {
    if tables_equal(pred, target) {
        1.0
    } else {
        0.0
    }
}

/// Jaccard similarity of the column-name sets.
pub fn schema_similarity(pred: &Table, target: &Table) -> f64 {
    let a: BTreeSet<&str> = pred.column_names().into_iter().collect();
    let b: BTreeSet<&str> = target.column_names().into_iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// `exp(-|(n_pred - n_target) / n_target|)`; with an empty target, 1 when
/// the prediction is empty too and 0 otherwise.
pub fn shape_similarity(n_pred: usize, n_target: usize) -> f64 {
    if n_target == 0 {
        return if n_pred == 0 { 1.0 } else { 0.0 };
    }
    (-((n_pred as f64 - n_target as f64) / n_target as f64).abs()).exp()
}

fn project(t: &Table, cols: &[&str]) -> Table {
    let idx: Vec<usize> = cols.iter().map(|c| t.column_index(c).expect("matched column")).collect();
    let specs = idx.iter().map(|&i| t.columns()[i].clone()).collect();
    let rows = t.rows().iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect();
    Table::new(Schema::new(t.name(), specs), rows).expect("projection of a valid table")
}

/// Per matched column, the share of positionally equal cells after both
/// tables are restricted to the matched columns and put in canonical row
/// order; averaged over matched columns. 0 when no column matches.
pub fn content_similarity(pred: &Table, target: &Table) -> f64 {
    let theirs: BTreeSet<&str> = target.column_names().into_iter().collect();
    let matched: Vec<&str> = pred.column_names().into_iter().filter(|c| theirs.contains(c)).collect::<BTreeSet<_>>().into_iter().collect();
    if matched.is_empty() {
        return 0.0;
    }
    let a = canonicalize(&project(pred, &matched));
    let b = canonicalize(&project(target, &matched));
    let (na, nb) = (a.num_rows(), b.num_rows());
    let denom = na.max(nb);
    if denom == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for c in 0..a.num_cols() {
        let same = (0..na.min(nb)).filter(|&i| a.rows()[i][c] == b.rows()[i][c]).count();
        total += same as f64 / denom as f64;
    }
    total / a.num_cols() as f64
}

pub fn partial_reward(pred: &Table, target: &Table) -> PartialScores {
    if tables_equal(pred, target) {
        return PartialScores::ONE;
    }
    let s_sch = schema_similarity(pred, target);
    let s_shp = shape_similarity(pred.num_rows(), target.num_rows());
    let s_cnt = content_similarity(pred, target);
    PartialScores { s_sch, s_shp, s_cnt, r_part: (s_sch + s_shp + s_cnt) / 3.0 }
}

pub fn hybrid_reward(r_out: f64, partial: PartialScores, r_llm: f64, w: RewardWeights) -> RewardBreakdown {
    RewardBreakdown {
        r_out,
        s_sch: partial.s_sch,
        s_shp: partial.s_shp,
        s_cnt: partial.s_cnt,
        r_part: partial.r_part,
        r_llm,
        total: w.alpha * r_out + w.beta * partial.r_part + w.gamma * r_llm,
    }
}

// ---- process judges ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgeScores {
    pub consistency: f64,
    pub responsiveness: f64,
    pub justification: f64,
}

impl JudgeScores {
    pub fn score(&self) -> f64 {
        (self.consistency + self.responsiveness + self.justification) / 3.0
    }
}

pub trait ProcessJudge: Send + Sync {
    fn judge(&self, t: &Trajectory) -> Result<JudgeScores, String>;
}

fn tokens(s: &str) -> BTreeSet<String> {
    s.split(|c: char| !(c.is_alphanumeric() || c == '_')).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

fn mentions(plan: &BTreeSet<String>, name: &str) -> bool {
    let want = tokens(name);
    !want.is_empty() && want.iter().all(|t| plan.contains(t))
}

fn fraction(hits: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        hits as f64 / total as f64
    }
}

/// Scores the three process criteria from the logged trajectory alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleJudge;

impl RuleJudge {
    /// Turns whose expanded operators only touch tables and columns named
    /// in that turn's plan.
    pub fn consistency(t: &Trajectory) -> f64 {
        let ok = t
            .turns
            .iter()
            .filter(|turn| {
                let plan = tokens(&turn.plan);
                turn.ops.iter().all(|src| match parse_operator_call(src) {
                    Ok(op) => op.input_tables().into_iter().chain(op.referenced_columns()).all(|n| mentions(&plan, n)),
                    Err(_) => false,
                })
            })
            .count();
        fraction(ok, t.turns.len())
    }

    /// Plans following a failure that mention the failed operator kind or
    /// the offending identifier.
    pub fn responsiveness(t: &Trajectory) -> f64 {
        let mut plans: Vec<(usize, &str)> = t.turns.iter().map(|r| (r.seq, r.plan.as_str())).collect();
        if let Some(a) = &t.answer {
            plans.push((a.seq, a.plan.as_str()));
        }
        plans.sort_by_key(|(s, _)| *s);
        let mut events = 0;
        let mut hits = 0;
        for turn in &t.turns {
            let Some(f) = &turn.failure else { continue };
            let Some((_, next)) = plans.iter().find(|(s, _)| *s > turn.seq) else { continue };
            events += 1;
            let plan = tokens(next);
            let kind = f.op.split('(').next().unwrap_or("");
            if mentions(&plan, kind) || f.subject.as_deref().is_some_and(|s| mentions(&plan, s)) {
                hits += 1;
            }
        }
        fraction(hits, events)
    }

    /// Parent switches away from the previous leaf whose abandoned branch
    /// carries a recorded failure.
    pub fn justification(t: &Trajectory) -> f64 {
        let mut switches = 0;
        let mut justified = 0;
        let mut prev_leaf: Vec<String> = Vec::new();
        let mut failure_nodes: Vec<&[String]> = Vec::new();
        for turn in &t.turns {
            let common = prev_leaf.iter().zip(&turn.parent).take_while(|(a, b)| a == b).count();
            if common < prev_leaf.len() {
                switches += 1;
                // nodes strictly below the common ancestor down to the old leaf
                let abandoned = |p: &[String]| p.len() > common && p.len() <= prev_leaf.len() && p == &prev_leaf[..p.len()];
                if failure_nodes.iter().any(|p| abandoned(p)) {
                    justified += 1;
                }
            }
            if let Some(f) = &turn.failure {
                failure_nodes.push(&f.node_path);
            }
            prev_leaf = turn.leaf_path.clone();
        }
        fraction(justified, switches)
    }
}

impl ProcessJudge for RuleJudge {
    fn judge(&self, t: &Trajectory) -> Result<JudgeScores, String> {
        Ok(JudgeScores {
            consistency: Self::consistency(t),
            responsiveness: Self::responsiveness(t),
            justification: Self::justification(t),
        })
    }
}

pub const JUDGE_CRITERIA: &str = "\
(1) Plan-action consistency: whether the generated pipeline (from expand) correctly implements the plan (from plan).
(2) Feedback responsiveness: whether subsequent plan outputs explicitly respond to the prior execution feedback (e.g., reported error traces).
(3) Backtracking justification: whether parent-node switches are supported by recorded failure evidence from the current branch.";

/// Renders the trajectory for a judge prompt.
pub fn render_for_judge(t: &Trajectory) -> String {
    let mut out = String::new();
    for turn in &t.turns {
        out.push_str(&format!(
            "turn {}\n<plan>{}</plan>\n<expand>\nparent: {}\n{}\n</expand>\n{}\n",
            turn.turn,
            turn.plan,
            if turn.parent.is_empty() { "root".to_string() } else { turn.parent.join("; ") },
            turn.ops.join("\n"),
            turn.execute_feedback
        ));
    }
    if let Some(a) = &t.answer {
        out.push_str(&format!("<plan>{}</plan>\n<answer>\n{}\n</answer>\n", a.plan, a.path.join("\n")));
    }
    out
}

/// Asks a chat model to score the three criteria. The reply must contain
/// lines `consistency: x`, `responsiveness: y`, `justification: z` with
/// values in [0, 1].
pub struct LlmJudge<B: ChatBackend> {
    backend: B,
}

impl<B: ChatBackend> LlmJudge<B> {
    pub fn new(backend: B) -> Self {
        LlmJudge { backend }
    }

    pub fn prompt(t: &Trajectory) -> Vec<Message> {
        vec![
            Message::new(
                Role::System,
                format!(
                    "You grade the reasoning trajectory of a data preparation agent. Score each criterion from 0 to 1.\n{JUDGE_CRITERIA}\n\
                     Reply with exactly three lines:\nconsistency: <score>\nresponsiveness: <score>\njustification: <score>"
                ),
            ),
            Message::new(Role::User, render_for_judge(t)),
        ]
    }
}

pub fn parse_judge_reply(text: &str) -> Result<JudgeScores, String> {
    let find = |key: &str| -> Result<f64, String> {
        text.lines()
            .filter_map(|l| l.split_once(':'))
            .find(|(k, _)| k.trim().trim_matches('*').eq_ignore_ascii_case(key))
            .and_then(|(_, v)| v.trim().trim_matches('*').parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .map(|v| v.clamp(0.0, 1.0))
            .ok_or_else(|| format!("judge reply has no score for {key}"))
    };
    Ok(JudgeScores { consistency: find("consistency")?, responsiveness: find("responsiveness")?, justification: find("justification")? })
}

impl<B: ChatBackend> ProcessJudge for LlmJudge<B> {
    fn judge(&self, t: &Trajectory) -> Result<JudgeScores, String> {
        let (text, _) = self.backend.complete(&Self::prompt(t)).map_err(|e| e.to_string())?;
        parse_judge_reply(&text)
    }
}
