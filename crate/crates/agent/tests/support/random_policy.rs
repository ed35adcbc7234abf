//! Seeded policy that wanders the tree: it learns node paths from the
//! `node:` lines of its feedback, expands random (often failing) operator
//! chains from them, and now and then sends malformed replies or answers.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tabprep_agent::episode::TaskSpec;
use tabprep_agent::policy::{Message, Policy, PolicyError, PolicySession};
use tabprep_core::{ColumnSpec, DType, Schema, Table, TableSet, Value};

pub struct RandomPolicy {
    pub seed: u64,
}

struct Session {
    rng: ChaCha8Rng,
    paths: BTreeSet<String>,
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn start<'a>(&'a self, _task: &TaskSpec) -> Box<dyn PolicySession + 'a> {
        Box::new(Session { rng: ChaCha8Rng::seed_from_u64(self.seed), paths: BTreeSet::new() })
    }
}

const COLS: &[&str] = &["id", "name", "score", "grp", "w", "nope"];
const TABLES: &[&str] = &["t", "u", "t_u_join", "ghost"];

fn random_op(rng: &mut ChaCha8Rng) -> String {
    let t = *TABLES[..3].choose(rng).unwrap();
    let t = if rng.gen_bool(0.1) { "ghost" } else { t };
    let c = *COLS.choose(rng).unwrap();
    let c2 = *COLS.choose(rng).unwrap();
    match rng.gen_range(0..14) {
        0 => format!(r#"Filter("{t}", 'col("{c}") > {}')"#, rng.gen_range(-2..6)),
        1 => format!(r#"Sort("{t}", ["{c}"], {})"#, rng.gen_bool(0.5)),
        2 => format!(r#"TopK("{t}", {})"#, rng.gen_range(0..4)),
        3 => format!(r#"SelectColumn("{t}", ["{c}", "{c2}"])"#),
        4 => format!(r#"DropColumn("{t}", ["{c}"])"#),
        5 => format!(r#"Deduplicate("{t}", ["{c}"], "first")"#),
        6 => format!(r#"GroupBy("{t}", ["{c}"], {{"{c2}": "count"}})"#),
        7 => format!(r#"Join("t", "u", ["{c}"], "inner")"#),
        8 => format!(r#"RenameColumn("{t}", {{"{c}": "{c}_r"}})"#),
        9 => format!(r#"DropNA("{t}", [], "any")"#),
        10 => format!(r#"AddNewColumn("{t}", "x{}", 'col("{c}") * 2')"#, rng.gen_range(0..3)),
        11 => format!(r#"Count("{t}")"#),
        12 => format!(r#"CastType("{t}", "{c}", "text")"#),
        _ => format!(r#"MissingValueImputation("{t}", "{c}", "mode")"#),
    }
}

impl Session {
    fn learn(&mut self, history: &[Message]) {
        if let Some(last) = history.last() {
            for line in last.content.lines() {
                if let Some(p) = line.strip_prefix("node: ") {
                    self.paths.insert(p.to_string());
                }
            }
        }
        self.paths.insert("root".to_string());
    }

    fn pick_path(&mut self) -> String {
        let all: Vec<&String> = self.paths.iter().collect();
        all.choose(&mut self.rng).unwrap().to_string()
    }
}

impl PolicySession for Session {
    fn reply(&mut self, history: &[Message]) -> Result<String, PolicyError> {
        self.learn(history);
        let roll = self.rng.gen_range(0..100);
        let reply = if roll < 6 {
            "<plan>forgot the decision</plan>".to_string()
        } else if roll < 10 {
            format!("<expand>\nparent: root\n{}\n</expand>", random_op(&mut self.rng))
        } else if roll < 14 {
            format!("<plan>x</plan>\n<expand>\nparent: {}\n{}\n</expand>", random_op(&mut self.rng), random_op(&mut self.rng))
        } else if roll < 22 {
            let path = self.pick_path();
            let body = if path == "root" { String::new() } else { path.replace("; ", "\n") };
            let target = ["t", "u", "t_u_join"].choose(&mut self.rng).unwrap();
            format!("<plan>answer</plan>\n<answer>\ntarget: {target}\n{body}\n</answer>")
        } else {
            let parent = self.pick_path();
            let n = self.rng.gen_range(1..4);
            let ops: Vec<String> = (0..n).map(|_| random_op(&mut self.rng)).collect();
            format!("<plan>try {}</plan>\n<expand>\nparent: {parent}\n{}\n</expand>", ops.len(), ops.join("\n"))
        };
        Ok(reply)
    }
}

pub fn random_task(seed: u64, max_turns: usize) -> TaskSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a5c);
    let n = rng.gen_range(0..7);
    let mut rows = Vec::new();
    for i in 0..n {
        let null = |rng: &mut ChaCha8Rng, v: Value| if rng.gen_bool(0.15) { Value::Null } else { v };
        rows.push(vec![
            Value::Int(rng.gen_range(0..4)),
            null(&mut rng, Value::text(["a", "b", "c"][i % 3])),
            {
                let v = Value::Real(rng.gen_range(-1.0..5.0_f64).round());
                null(&mut rng, v)
            },
            {
                let v = Value::text(["g1", "g2"][rng.gen_range(0..2)]);
                null(&mut rng, v)
            },
        ]);
    }
    let t = Table::new(
        Schema::new(
            "t",
            vec![
                ColumnSpec::new("id", DType::Int),
                ColumnSpec::new("name", DType::Text),
                ColumnSpec::new("score", DType::Real),
                ColumnSpec::new("grp", DType::Text),
            ],
        ),
        rows,
    )
    .unwrap();
    let u_rows = (0..rng.gen_range(1..5)).map(|i| vec![Value::Int(i), Value::Real(i as f64 / 2.0)]).collect();
    let u = Table::new(Schema::new("u", vec![ColumnSpec::new("id", DType::Int), ColumnSpec::new("w", DType::Real)]), u_rows).unwrap();
    let mut task = TaskSpec::new(
        format!("rand{seed}"),
        TableSet::from_tables([t, u]),
        Schema::new("out", vec![ColumnSpec::new("id", DType::Int), ColumnSpec::new("w", DType::Real)]),
    );
    task.max_turns = max_turns;
    task
}
