//! Task bundles and scripts shared by the harness tests.

#![allow(dead_code)]

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tabprep_core::ops::{parse_operator_call, Operator};
use tabprep_core::synthesis::{
    synthesize_task, write_bundle, Corruption, CorruptionLibrary, SynthesisInput, TaskBundle, TemplateDescriber,
    DEDUP_INVERSE,
};
use tabprep_core::{ColumnSpec, DType, Schema, Table, TableSet, Value};

pub fn ops(lines: &[&str]) -> Vec<Operator> {
    lines.iter().map(|l| parse_operator_call(l).unwrap()).collect()
}

pub fn texts(ops: &[Operator]) -> Vec<String> {
    ops.iter().map(ToString::to_string).collect()
}

pub fn orders() -> TableSet {
    TableSet::from_tables([Table::infer(
        "orders",
        vec!["id".into(), "country".into(), "day".into(), "amount".into()],
        vec![
            vec![1.into(), "usa".into(), "2023-01-01".into(), 10.into()],
            vec![2.into(), "france".into(), "2023-02-11".into(), 20.into()],
            vec![3.into(), "japan".into(), "2022-12-31".into(), 30.into()],
            vec![4.into(), "usa".into(), Value::Null, 40.into()],
            vec![5.into(), "peru".into(), "2021-06-30".into(), Value::Null],
        ],
    )
    .unwrap()])
}

pub fn corruption(kind: &str, table: &str, column: Option<&str>, intensity: f64, seed: u64) -> Corruption {
    Corruption { kind: kind.into(), table: table.into(), column: column.map(Into::into), intensity, seed }
}

/// An orders task: keep large orders and project two columns, with a
/// duplicate-row corruption seeded by `seed`.
pub fn orders_bundle(task_id: &str, seed: u64) -> TaskBundle {
    let task = ops(&[r#"Filter("orders", 'col("amount") > 15')"#, r#"SelectColumn("orders", ["id", "country"])"#]);
    let plan = vec![corruption(DEDUP_INVERSE, "orders", None, 0.5, seed)];
    let input = SynthesisInput { task_id, clean_sources: &orders(), task_pipeline: &task, corruptions: &plan, seed };
    synthesize_task(&input, &CorruptionLibrary::default(), &TemplateDescriber).unwrap()
}

pub fn reply_expand(plan: &str, parent: &[String], ops: &[String]) -> String {
    let parent = if parent.is_empty() { "root".to_string() } else { parent.join("; ") };
    format!("<plan>{plan}</plan>\n<expand>\nparent: {parent}\n{}\n</expand>\n", ops.join("\n"))
}

pub fn reply_answer(plan: &str, path: &[String], target: Option<&str>) -> String {
    let mut body = String::new();
    if let Some(t) = target {
        body.push_str(&format!("target: {t}\n"));
    }
    for p in path {
        body.push_str(p);
        body.push('\n');
    }
    format!("<plan>{plan}</plan>\n<answer>\n{body}</answer>\n")
}

/// Runs the ground-truth pipeline in one expansion and answers it.
pub fn exact_script(b: &TaskBundle) -> Vec<String> {
    let gt = texts(&b.gt_pipeline);
    vec![reply_expand("deduplicate orders, filter orders by amount, select id and country", &[], &gt), reply_answer("done", &gt, None)]
}

/// One failing probe, a switch back to the root, then the exact pipeline.
pub fn detour_script(b: &TaskBundle) -> Vec<String> {
    let gt = texts(&b.gt_pipeline);
    let probe = vec![gt[0].clone(), r#"SelectColumn("orders", ["price"])"#.to_string()];
    vec![
        reply_expand("deduplicate orders and select price", &[], &probe),
        "<plan>no decision here</plan>".to_string(),
        reply_expand("price is missing in orders; restart from the sources", &[], &gt),
        reply_answer("selected the columns", &gt, Some("orders")),
    ]
}

/// Answers a non-empty table that is not the target.
pub fn wrong_script(b: &TaskBundle) -> Vec<String> {
    let path = vec![b.gt_pipeline[0].to_string(), r#"SelectColumn("orders", ["id", "country"])"#.to_string()];
    vec![reply_expand("deduplicate orders, select id and country", &[], &path), reply_answer("done", &path, None)]
}

/// Answers an empty table.
pub fn empty_script() -> Vec<String> {
    let path = vec![r#"Filter("orders", 'col("amount") > 1000')"#.to_string()];
    vec![reply_expand("filter orders by amount", &[], &path), reply_answer("done", &path, None)]
}

pub fn write_bundles(dir: &Path, bundles: &[TaskBundle]) {
    for b in bundles {
        write_bundle(&dir.join(&b.task_id), b).unwrap();
    }
}

pub fn write_script(path: &Path, replies: &[String]) {
    let text: String = replies.iter().map(|r| format!("### reply\n{}\n", r.trim_end())).collect();
    std::fs::write(path, text).unwrap();
}

// ---- the movies example ----

pub fn movie_sources() -> TableSet {
    let t = |name: &str, cols: &[(&str, DType)], rows: Vec<Vec<Value>>| {
        Table::new(Schema::new(name, cols.iter().map(|(n, d)| ColumnSpec::new(*n, *d)).collect()), rows).unwrap()
    };
    TableSet::from_tables([
        t(
            "movies",
            &[("movie_id", DType::Int), ("title", DType::Text), ("director_id", DType::Int)],
            vec![
                vec![1.into(), "Alien".into(), 10.into()],
                vec![2.into(), "Heat".into(), 20.into()],
                vec![3.into(), "Ran".into(), 30.into()],
                vec![4.into(), "Brazil".into(), 40.into()],
            ],
        ),
        t(
            "directors",
            &[("director_id", DType::Int), ("name", DType::Text)],
            vec![vec![10.into(), "Scott".into()], vec![20.into(), "Mann".into()], vec![30.into(), "Kurosawa".into()]],
        ),
        t(
            "ratings",
            &[("movie_id", DType::Int), ("rating", DType::Real)],
            vec![vec![1.into(), Value::Real(8.5)], vec![2.into(), Value::Real(8.3)], vec![4.into(), Value::Real(7.9)]],
        ),
    ])
}

pub const MOVIE_PIPELINE: [&str; 3] = [
    r#"Join("movies", "directors", ["director_id"], "inner")"#,
    r#"Join("movies_directors_join", "ratings", ["movie_id"], "inner")"#,
    r#"SelectColumn("movies_directors_join_ratings_join", ["title", "name", "rating"])"#,
];

/// Expected answer, written out by hand: movies with both a director and a
/// rating.
pub fn movie_target() -> Table {
    Table::new(
        Schema::new(
            "answer",
            vec![ColumnSpec::new("title", DType::Text), ColumnSpec::new("name", DType::Text), ColumnSpec::new("rating", DType::Real)],
        ),
        vec![vec!["Alien".into(), "Scott".into(), Value::Real(8.5)], vec!["Heat".into(), "Mann".into(), Value::Real(8.3)]],
    )
    .unwrap()
}

pub fn movie_bundle() -> TaskBundle {
    let task = ops(&MOVIE_PIPELINE);
    let plan = vec![corruption(DEDUP_INVERSE, "movies", None, 0.5, 11)];
    let input =
        SynthesisInput { task_id: "movies", clean_sources: &movie_sources(), task_pipeline: &task, corruptions: &plan, seed: 11 };
    synthesize_task(&input, &CorruptionLibrary::default(), &TemplateDescriber).unwrap()
}

pub fn movie_script() -> Vec<String> {
    let first = vec![r#"Deduplicate("movies", [], "first")"#.to_string(), MOVIE_PIPELINE[0].to_string()];
    let second: Vec<String> = MOVIE_PIPELINE[1..].iter().map(|s| s.to_string()).collect();
    let all: Vec<String> = first.iter().chain(&second).cloned().collect();
    vec![
        reply_expand("movies has repeated rows: deduplicate movies, then join movies with directors on director_id.", &[], &first),
        reply_expand(
            "join movies_directors_join with ratings on movie_id, then select title, name and rating from \
             movies_directors_join_ratings_join.",
            &first,
            &second,
        ),
        reply_answer("movies_directors_join_ratings_join now has exactly the target columns.", &all, Some("movies_directors_join_ratings_join")),
    ]
}

// ---- random tables ----

const WORDS: [&str; 6] = ["a", "b", "ab", "A", "x y", ""];

fn random_cell(rng: &mut ChaCha8Rng, dtype: DType) -> Value {
    if rng.gen_bool(0.15) {
        return Value::Null;
    }
    match dtype {
        DType::Int => Value::Int(rng.gen_range(-3..4)),
        DType::Real => Value::Real(rng.gen_range(-4..5) as f64 / 2.0),
        DType::Bool => Value::Bool(rng.gen()),
        _ => Value::text(*WORDS.choose(rng).unwrap()),
    }
}

pub fn random_table(rng: &mut ChaCha8Rng, max_rows: usize, max_cols: usize) -> Table {
    let k = rng.gen_range(1..=max_cols);
    let specs: Vec<ColumnSpec> = (0..k)
        .map(|i| ColumnSpec::new(format!("c{i}"), *[DType::Int, DType::Real, DType::Text, DType::Bool].choose(rng).unwrap()))
        .collect();
    let n = rng.gen_range(0..=max_rows);
    let rows = (0..n).map(|_| specs.iter().map(|s| random_cell(rng, s.dtype)).collect()).collect();
    Table::new(Schema::new("r", specs), rows).unwrap()
}

/// Random row and column permutation.
pub fn permute(t: &Table, rng: &mut ChaCha8Rng) -> Table {
    let mut cols: Vec<usize> = (0..t.num_cols()).collect();
    cols.shuffle(rng);
    let mut rows: Vec<Vec<Value>> = t.rows().iter().map(|r| cols.iter().map(|&c| r[c].clone()).collect()).collect();
    rows.shuffle(rng);
    let specs = cols.iter().map(|&c| t.columns()[c].clone()).collect();
    Table::new(Schema::new("p", specs), rows).unwrap()
}

/// Replaces one cell with a different value of the same column type.
pub fn flip_cell(t: &Table, rng: &mut ChaCha8Rng) -> Option<Table> {
    if t.num_rows() == 0 {
        return None;
    }
    let (r, c) = (rng.gen_range(0..t.num_rows()), rng.gen_range(0..t.num_cols()));
    let old = &t.rows()[r][c];
    let new = match (t.columns()[c].dtype, old) {
        (_, Value::Null) => match t.columns()[c].dtype {
            DType::Int => Value::Int(7),
            DType::Real => Value::Real(7.5),
            DType::Bool => Value::Bool(true),
            _ => Value::text("zz"),
        },
        (_, Value::Int(i)) => Value::Int(i + 1),
        (_, Value::Real(x)) => Value::Real(x + 0.25),
        (_, Value::Bool(b)) => Value::Bool(!b),
        (_, Value::Text(s)) => Value::Text(format!("{s}!")),
        _ => Value::Null,
    };
    let mut rows = t.rows().to_vec();
    rows[r][c] = new;
    Some(Table::new(t.schema().clone(), rows).unwrap())
}
