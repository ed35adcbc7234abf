//! Naive reference implementations of every deterministic operator, and a
//! random case generator pairing each operator instance with the expected
//! table set (or `None` when execution must fail).
//!
//! The references are deliberately plain: nested loops, direct formulas, no
//! shared code with the engine beyond the value and table types.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::rc::Rc;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tabprep_core::ops::{
    execute_operator, AggFn, Ascending, ImputeMode, JoinHow, Keep, NaHow, OpKind, Operator, OutlierAction, Stat,
    UnionHow,
};
use tabprep_core::expr::parse_expr;
use tabprep_core::{serialize_table, DType, Table, TableSet, Value};

pub struct Case {
    pub state: TableSet,
    pub op: Operator,
    pub expected: Option<TableSet>,
}

pub fn deterministic_kinds() -> Vec<OpKind> {
    OpKind::ALL.iter().copied().filter(|k| *k != OpKind::ExeCode).collect()
}

/// Runs the engine on the case and compares against the reference.
pub fn check_case(case: &Case) -> Result<(), String> {
    let before = case.state.clone();
    let got = execute_operator(&case.op, &case.state);
    if !case.state.equivalent(&before) {
        return Err(format!("{}: input state was modified", case.op));
    }
    let dump = |s: &TableSet| s.iter().map(|t| format!("[{}]\n{}", t.name(), serialize_table(t, 20))).collect::<String>();
    match (got, &case.expected) {
        (Ok(out), Some(exp)) if out.equivalent(exp) => {
            // untouched tables must be the very same allocation
            for name in case.state.names() {
                if !case.op.input_tables().contains(&name) && case.op.output_table() != name {
                    let same = std::sync::Arc::ptr_eq(out.get_shared(name).unwrap(), case.state.get_shared(name).unwrap());
                    if !same {
                        return Err(format!("{}: unrelated table {name} was rebuilt", case.op));
                    }
                }
            }
            Ok(())
        }
        (Err(_), None) => Ok(()),
        (Ok(out), Some(exp)) => Err(format!(
            "{}\ninput:\n{}\nengine:\n{}\nreference:\n{}",
            case.op,
            dump(&case.state),
            dump(&out),
            dump(exp)
        )),
        (Ok(out), None) => Err(format!("{}\ninput:\n{}\nengine succeeded with:\n{}\nreference expects an error", case.op, dump(&case.state), dump(&out))),
        (Err(e), Some(exp)) => Err(format!(
            "{}\ninput:\n{}\nengine failed: {}\nreference:\n{}",
            case.op,
            dump(&case.state),
            e.message,
            dump(exp)
        )),
    }
}

// ---- random data ----

const TEXTS: [&str; 9] = ["a", "b", "ab", "A", "b a", "1", " 2 ", "2.5", "yes"];
const REALS: [f64; 5] = [0.5, 1.5, 2.0, -1.0, 3.25];
const DTYPES: [DType; 4] = [DType::Int, DType::Real, DType::Text, DType::Bool];

fn rand_value(rng: &mut ChaCha8Rng, dtype: DType) -> Value {
    if rng.gen_bool(0.2) {
        return Value::Null;
    }
    match dtype {
        DType::Int => Value::Int(rng.gen_range(0..4)),
        DType::Real => Value::Real(*REALS.choose(rng).unwrap()),
        DType::Text => Value::text(*TEXTS.choose(rng).unwrap()),
        DType::Bool => Value::Bool(rng.gen()),
        DType::List => Value::List((0..rng.gen_range(0..3)).map(|_| Value::Int(rng.gen_range(0..3))).collect()),
    }
}

fn rand_table_with(rng: &mut ChaCha8Rng, name: &str, cols: &[(String, DType)], nrows: usize) -> Table {
    let rows = (0..nrows).map(|_| cols.iter().map(|(_, d)| rand_value(rng, *d)).collect()).collect();
    Table::infer(name, cols.iter().map(|(n, _)| n.clone()).collect(), rows).unwrap()
}

fn rand_cols(rng: &mut ChaCha8Rng, n: usize) -> Vec<(String, DType)> {
    (0..n).map(|i| (format!("c{i}"), *DTYPES.choose(rng).unwrap())).collect()
}

fn rand_table(rng: &mut ChaCha8Rng, name: &str) -> Table {
    let ncols = rng.gen_range(1..=4);
    let nrows = rng.gen_range(0..=8);
    let cols = rand_cols(rng, ncols);
    rand_table_with(rng, name, &cols, nrows)
}

/// A bystander table every case carries, to check locality.
fn bystander(rng: &mut ChaCha8Rng) -> Table {
    let mut t = rand_table(rng, "other");
    t = t.with_name("other");
    t
}

fn names(t: &Table) -> Vec<String> {
    t.column_names().into_iter().map(str::to_string).collect()
}

fn pos(t: &Table, name: &str) -> usize {
    t.column_index(name).unwrap()
}

fn subset(rng: &mut ChaCha8Rng, all: &[String], min: usize) -> Vec<String> {
    loop {
        let picked: Vec<String> = all.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        if picked.len() >= min {
            return picked;
        }
        if all.len() < min {
            return all.to_vec();
        }
    }
}

fn make(name: &str, cols: Vec<String>, rows: Vec<Vec<Value>>) -> Option<Table> {
    Table::infer(name, cols, rows).ok()
}

fn state_of(tables: Vec<Table>) -> TableSet {
    TableSet::from_tables(tables)
}

fn put(state: &TableSet, t: Option<Table>) -> Option<TableSet> {
    let mut s = state.clone();
    s.insert(t?);
    Some(s)
}

fn is_num(t: &Table, i: usize) -> bool {
    matches!(t.columns()[i].dtype, DType::Int | DType::Real)
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Real(r) => Some(*r),
        _ => None,
    }
}

// ---- row expressions: DSL source paired with a direct implementation ----

type RowFn = Rc<dyn Fn(&[Value]) -> Option<Value>>;

struct RowExpr {
    src: String,
    f: RowFn,
}

fn predicate(rng: &mut ChaCha8Rng, t: &Table) -> RowExpr {
    if t.num_cols() == 0 || rng.gen_bool(0.1) {
        return RowExpr { src: "true".into(), f: Rc::new(|_| Some(Value::Bool(true))) };
    }
    let i = rng.gen_range(0..t.num_cols());
    let n = t.columns()[i].name.clone();
    if rng.gen_bool(0.25) {
        return RowExpr { src: format!("is_null(col(\"{n}\"))"), f: Rc::new(move |r| Some(Value::Bool(r[i].is_null()))) };
    }
    match t.columns()[i].dtype {
        DType::Int | DType::Real => {
            let k: i64 = rng.gen_range(-1..4);
            RowExpr {
                src: format!("col(\"{n}\") > {k}"),
                f: Rc::new(move |r| Some(num(&r[i]).map_or(Value::Null, |x| Value::Bool(x > k as f64)))),
            }
        }
        DType::Text => RowExpr {
            src: format!("contains(col(\"{n}\"), \"a\")"),
            f: Rc::new(move |r| {
                Some(match &r[i] {
                    Value::Text(s) => Value::Bool(s.contains('a')),
                    _ => Value::Null,
                })
            }),
        },
        _ => RowExpr {
            src: format!("col(\"{n}\") == true"),
            f: Rc::new(move |r| {
                Some(match &r[i] {
                    Value::Bool(b) => Value::Bool(*b),
                    _ => Value::Null,
                })
            }),
        },
    }
}

/// An expression over column `i` producing a new value.
fn transform(rng: &mut ChaCha8Rng, t: &Table, i: usize) -> RowExpr {
    let n = t.columns()[i].name.clone();
    if rng.gen_bool(0.15) {
        return RowExpr { src: format!("col(\"{n}\")"), f: Rc::new(move |r| Some(r[i].clone())) };
    }
    match t.columns()[i].dtype {
        DType::Int | DType::Real => {
            if rng.gen_bool(0.5) {
                RowExpr {
                    src: format!("col(\"{n}\") * 2"),
                    f: Rc::new(move |r| {
                        Some(match &r[i] {
                            Value::Int(x) => Value::Int(x * 2),
                            Value::Real(x) => Value::Real(x * 2.0),
                            _ => Value::Null,
                        })
                    }),
                }
            } else {
                RowExpr {
                    src: format!("col(\"{n}\") + 1"),
                    f: Rc::new(move |r| {
                        Some(match &r[i] {
                            Value::Int(x) => Value::Int(x + 1),
                            Value::Real(x) => Value::Real(x + 1.0),
                            _ => Value::Null,
                        })
                    }),
                }
            }
        }
        DType::Text => {
            if rng.gen_bool(0.5) {
                RowExpr {
                    src: format!("upper(col(\"{n}\"))"),
                    f: Rc::new(move |r| Some(r[i].as_str().map_or(Value::Null, |s| Value::text(s.to_uppercase())))),
                }
            } else {
                RowExpr {
                    src: format!("concat(col(\"{n}\"), \"_x\")"),
                    f: Rc::new(move |r| Some(r[i].as_str().map_or(Value::Null, |s| Value::text(format!("{s}_x"))))),
                }
            }
        }
        _ => RowExpr {
            src: format!("not (col(\"{n}\"))"),
            f: Rc::new(move |r| {
                Some(match &r[i] {
                    Value::Bool(b) => Value::Bool(!b),
                    _ => Value::Null,
                })
            }),
        },
    }
}

fn expr(src: &str) -> tabprep_core::expr::Expr {
    parse_expr(src).unwrap_or_else(|e| panic!("template {src}: {e}"))
}

/// Evaluates a row function over all rows; `None` if any row fails.
fn eval_all(t: &Table, f: &RowFn) -> Option<Vec<Value>> {
    t.rows().iter().map(|r| f(r)).collect()
}

fn append_col(t: &Table, name: &str, cells: Vec<Value>) -> Option<Table> {
    if t.column_index(name).is_some() {
        return None;
    }
    let mut cols = names(t);
    cols.push(name.to_string());
    let rows = t.rows().iter().zip(cells).map(|(r, c)| r.iter().cloned().chain([c]).collect()).collect();
    make(t.name(), cols, rows)
}

// ---- aggregation references ----

fn ref_sum(vals: &[Value], real_col: bool) -> Option<Value> {
    let mut any_real = real_col;
    for v in vals {
        match v {
            Value::Real(_) => any_real = true,
            Value::Int(_) => {}
            _ => return None,
        }
    }
    if any_real {
        let mut s = 0.0;
        for v in vals {
            s += num(v).unwrap();
        }
        Some(Value::Real(s))
    } else {
        let mut s = 0i64;
        for v in vals {
            if let Value::Int(i) = v {
                s += i;
            }
        }
        Some(Value::Int(s))
    }
}

fn ref_agg(f: AggFn, cells: &[Value], real_col: bool) -> Option<Value> {
    let present: Vec<Value> = cells.iter().filter(|v| !v.is_null()).cloned().collect();
    let min_max = |want: Ordering| {
        let mut best: Option<Value> = None;
        for v in &present {
            if best.as_ref().is_none_or(|b| v.cmp(b) == want) {
                best = Some(v.clone());
            }
        }
        best.unwrap_or(Value::Null)
    };
    Some(match f {
        AggFn::Sum => ref_sum(&present, real_col)?,
        AggFn::Avg => {
            if present.is_empty() {
                Value::Null
            } else {
                let mut s = 0.0;
                for v in &present {
                    s += num(v)?;
                }
                Value::Real(s / present.len() as f64)
            }
        }
        AggFn::Min => min_max(Ordering::Less),
        AggFn::Max => min_max(Ordering::Greater),
        AggFn::Count => Value::Int(present.len() as i64),
        AggFn::CountDistinct => {
            let mut distinct: Vec<&Value> = Vec::new();
            for v in &present {
                if !distinct.contains(&v) {
                    distinct.push(v);
                }
            }
            Value::Int(distinct.len() as i64)
        }
        AggFn::First => present.first().cloned().unwrap_or(Value::Null),
        AggFn::Last => present.last().cloned().unwrap_or(Value::Null),
        AggFn::Concat => Value::List(present),
        AggFn::FirstStrict => match present.len() {
            0 => Value::Null,
            1 => present[0].clone(),
            _ => return None,
        },
    })
}

/// Distinct keys in first-appearance order with their member rows.
fn ref_groups(rows: &[Vec<Value>], keys: &[usize]) -> Vec<(Vec<Value>, Vec<usize>)> {
    let mut groups: Vec<(Vec<Value>, Vec<usize>)> = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        let key: Vec<Value> = keys.iter().map(|&k| row[k].clone()).collect();
        let mut found = false;
        for g in groups.iter_mut() {
            if g.0 == key {
                g.1.push(r);
                found = true;
                break;
            }
        }
        if !found {
            groups.push((key, vec![r]));
        }
    }
    groups
}

fn ref_cast(v: &Value, to: DType) -> Option<Value> {
    if v.is_null() || v.dtype() == Some(to) {
        return Some(v.clone());
    }
    Some(match (v, to) {
        (_, DType::Text) => Value::Text(v.render()),
        (Value::Int(i), DType::Real) => Value::Real(*i as f64),
        (Value::Real(r), DType::Int) => {
            if r.fract() == 0.0 {
                Value::Int(*r as i64)
            } else {
                return None;
            }
        }
        (Value::Bool(b), DType::Int) => Value::Int(if *b { 1 } else { 0 }),
        (Value::Bool(b), DType::Real) => Value::Real(if *b { 1.0 } else { 0.0 }),
        (Value::Int(0), DType::Bool) => Value::Bool(false),
        (Value::Int(1), DType::Bool) => Value::Bool(true),
        (Value::Real(r), DType::Bool) if *r == 0.0 || *r == 1.0 => Value::Bool(*r == 1.0),
        (Value::Text(s), DType::Int) => {
            let s = s.trim();
            if let Ok(i) = s.parse::<i64>() {
                Value::Int(i)
            } else {
                let r: f64 = s.parse().ok()?;
                if r.is_finite() && r.fract() == 0.0 {
                    Value::Int(r as i64)
                } else {
                    return None;
                }
            }
        }
        (Value::Text(s), DType::Real) => {
            let r: f64 = s.trim().parse().ok()?;
            if !r.is_finite() {
                return None;
            }
            Value::Real(r)
        }
        (Value::Text(s), DType::Bool) => match s.trim().to_lowercase().as_str() {
            "true" | "1" | "yes" => Value::Bool(true),
            "false" | "0" | "no" => Value::Bool(false),
            _ => return None,
        },
        _ => return None,
    })
}

// ---- case generation ----

pub fn gen_case(kind: OpKind, rng: &mut ChaCha8Rng) -> Case {
    match kind {
        OpKind::DropNA => {
            let t = rand_table(rng, "t");
            let subset = subset(rng, &names(&t), 0);
            let how = *NaHow::ALL.choose(rng).unwrap();
            let idx: Vec<usize> = if subset.is_empty() { (0..t.num_cols()).collect() } else { subset.iter().map(|c| pos(&t, c)).collect() };
            let mut rows = Vec::new();
            for r in t.rows() {
                let mut nulls = 0;
                for &i in &idx {
                    if r[i].is_null() {
                        nulls += 1;
                    }
                }
                let keep = match how {
                    NaHow::Any => nulls == 0,
                    NaHow::All => idx.is_empty() || nulls != idx.len(),
                };
                if keep {
                    rows.push(r.clone());
                }
            }
            let exp = make("t", names(&t), rows);
            finish(rng, t, Operator::DropNA { table: "t".into(), subset, how }, exp)
        }
        OpKind::MissingValueImputation => {
            let t = rand_table(rng, "t");
            let i = rng.gen_range(0..t.num_cols());
            let mode = if is_num(&t, i) { *ImputeMode::ALL.choose(rng).unwrap() } else { ImputeMode::Mode };
            let present: Vec<Value> = t.column_values(i).filter(|v| !v.is_null()).cloned().collect();
            let fill = if present.is_empty() {
                None
            } else {
                match mode {
                    ImputeMode::Mean => {
                        let mut s = 0.0;
                        for v in &present {
                            s += num(v).unwrap();
                        }
                        Some(Value::Real(s / present.len() as f64))
                    }
                    ImputeMode::Median => {
                        let mut sorted = present.clone();
                        // insertion sort
                        for a in 1..sorted.len() {
                            let mut b = a;
                            while b > 0 && sorted[b - 1] > sorted[b] {
                                sorted.swap(b - 1, b);
                                b -= 1;
                            }
                        }
                        Some(sorted[(sorted.len() - 1) / 2].clone())
                    }
                    ImputeMode::Mode => {
                        let mut best: Option<(Value, usize)> = None;
                        for v in &present {
                            let count = present.iter().filter(|w| *w == v).count();
                            let better = match &best {
                                None => true,
                                Some((bv, bc)) => count > *bc || (count == *bc && v < bv),
                            };
                            if better {
                                best = Some((v.clone(), count));
                            }
                        }
                        best.map(|(v, _)| v)
                    }
                }
            };
            let exp = fill.and_then(|fill| {
                let rows = t
                    .rows()
                    .iter()
                    .map(|r| {
                        let mut r = r.clone();
                        if r[i].is_null() {
                            r[i] = fill.clone();
                        }
                        r
                    })
                    .collect();
                make("t", names(&t), rows)
            });
            let column = t.columns()[i].name.clone();
            finish(rng, t, Operator::MissingValueImputation { table: "t".into(), column, mode }, exp)
        }
        OpKind::Deduplicate => {
            let t = rand_table(rng, "t");
            let subset = subset(rng, &names(&t), 0);
            let keep = *Keep::ALL.choose(rng).unwrap();
            let idx: Vec<usize> = if subset.is_empty() { (0..t.num_cols()).collect() } else { subset.iter().map(|c| pos(&t, c)).collect() };
            let same = |a: &[Value], b: &[Value]| idx.iter().all(|&i| a[i] == b[i]);
            let rows: Vec<Vec<Value>> = (0..t.num_rows())
                .filter(|&r| {
                    let others: Vec<usize> = match keep {
                        Keep::First => (0..r).collect(),
                        Keep::Last => (r + 1..t.num_rows()).collect(),
                    };
                    !others.iter().any(|&o| same(&t.rows()[o], &t.rows()[r]))
                })
                .map(|r| t.rows()[r].clone())
                .collect();
            let exp = make("t", names(&t), rows);
            finish(rng, t, Operator::Deduplicate { table: "t".into(), subset, keep }, exp)
        }
        OpKind::ErrorDetection => {
            let t = rand_table(rng, "t");
            let i = rng.gen_range(0..t.num_cols());
            let p = predicate(rng, &t);
            let column = t.columns()[i].name.clone();
            let exp = eval_all(&t, &p.f).and_then(|cells| append_col(&t, &format!("{column}_invalid"), cells));
            finish(rng, t.clone(), Operator::ErrorDetection { table: "t".into(), column, func: expr(&p.src) }, exp)
        }
        OpKind::OutlierDetection => {
            let t = rand_table(rng, "t");
            let i = rng.gen_range(0..t.num_cols());
            let action = *OutlierAction::ALL.choose(rng).unwrap();
            let column = t.columns()[i].name.clone();
            let exp = if !is_num(&t, i) {
                None
            } else {
                let xs: Vec<f64> = t.column_values(i).filter_map(num).collect();
                let mut flags = vec![false; t.num_rows()];
                let spread = xs.iter().any(|x| *x != xs[0]);
                if !xs.is_empty() && spread {
                    let n = xs.len() as f64;
                    let mean = xs.iter().sum::<f64>() / n;
                    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                    for (r, row) in t.rows().iter().enumerate() {
                        if let Some(x) = num(&row[i]) {
                            flags[r] = (x - mean).abs() > 3.0 * var.sqrt();
                        }
                    }
                }
                match action {
                    OutlierAction::Remove => {
                        let rows = t.rows().iter().zip(&flags).filter(|(_, f)| !**f).map(|(r, _)| r.clone()).collect();
                        make("t", names(&t), rows)
                    }
                    OutlierAction::Flag => {
                        append_col(&t, &format!("{column}_outlier"), flags.into_iter().map(Value::Bool).collect())
                    }
                }
            };
            finish(rng, t, Operator::OutlierDetection { table: "t".into(), column, action }, exp)
        }
        OpKind::ValueTransform => {
            let t = rand_table(rng, "t");
            let i = rng.gen_range(0..t.num_cols());
            let e = transform(rng, &t, i);
            let exp = eval_all(&t, &e.f).and_then(|cells| {
                let rows = t
                    .rows()
                    .iter()
                    .zip(cells)
                    .map(|(r, c)| {
                        let mut r = r.clone();
                        if !r[i].is_null() {
                            r[i] = c;
                        }
                        r
                    })
                    .collect();
                make("t", names(&t), rows)
            });
            let column = t.columns()[i].name.clone();
            finish(rng, t.clone(), Operator::ValueTransform { table: "t".into(), column, func: expr(&e.src) }, exp)
        }
        OpKind::StandardizeDatetime => gen_datetime(rng),
        OpKind::CastType => {
            let t = rand_table(rng, "t");
            let i = rng.gen_range(0..t.num_cols());
            let dtype = *DTYPES.choose(rng).unwrap();
            let cells: Option<Vec<Value>> = t.column_values(i).map(|v| ref_cast(v, dtype)).collect();
            let exp = cells.and_then(|cells| {
                let rows = t
                    .rows()
                    .iter()
                    .zip(cells)
                    .map(|(r, c)| {
                        let mut r = r.clone();
                        r[i] = c;
                        r
                    })
                    .collect();
                make("t", names(&t), rows)
            });
            let column = t.columns()[i].name.clone();
            finish(rng, t, Operator::CastType { table: "t".into(), column, dtype }, exp)
        }
        OpKind::RenameColumn => {
            let t = rand_table(rng, "t");
            let pool = ["c0", "c1", "c2", "c3", "n0", "n1"];
            let from = subset(rng, &names(&t), 1);
            let rename_map: Vec<(String, String)> =
                from.into_iter().map(|f| (f, pool.choose(rng).unwrap().to_string())).collect();
            let new_names: Vec<String> = names(&t)
                .into_iter()
                .map(|n| rename_map.iter().find(|(f, _)| *f == n).map_or(n, |(_, to)| to.clone()))
                .collect();
            let exp = make("t", new_names, t.rows().to_vec());
            finish(rng, t, Operator::RenameColumn { table: "t".into(), rename_map }, exp)
        }
        OpKind::AddNewColumn => {
            let t = rand_table(rng, "t");
            let name = ["c0", "new", "c3"].choose(rng).unwrap().to_string();
            let i = rng.gen_range(0..t.num_cols());
            let e = transform(rng, &t, i);
            let exp = eval_all(&t, &e.f).and_then(|cells| append_col(&t, &name, cells));
            finish(rng, t.clone(), Operator::AddNewColumn { table: "t".into(), name, func: expr(&e.src) }, exp)
        }
        OpKind::DropColumn | OpKind::SelectColumn => {
            let t = rand_table(rng, "t");
            let mut cols = subset(rng, &names(&t), 1);
            cols.shuffle(rng);
            if rng.gen_bool(0.1) {
                cols.push("zz".into());
            }
            let exp = if cols.iter().any(|c| t.column_index(c).is_none()) {
                None
            } else {
                let drop = kind == OpKind::DropColumn;
                let keep: Vec<usize> = (0..t.num_cols()).filter(|&i| cols.contains(&t.columns()[i].name) != drop).collect();
                let rows = t.rows().iter().map(|r| keep.iter().map(|&i| r[i].clone()).collect()).collect();
                make("t", keep.iter().map(|&i| t.columns()[i].name.clone()).collect(), rows)
            };
            let op = if kind == OpKind::DropColumn {
                Operator::DropColumn { table: "t".into(), columns: cols }
            } else {
                Operator::SelectColumn { table: "t".into(), columns: cols }
            };
            finish(rng, t, op, exp)
        }
        OpKind::SplitColumn => {
            let pool = ["a b", "c", "a b c", "d e"];
            let nrows = rng.gen_range(0..=8);
            let rows: Vec<Vec<Value>> = (0..nrows)
                .map(|_| {
                    let s = if rng.gen_bool(0.2) { Value::Null } else { Value::text(*pool.choose(rng).unwrap()) };
                    vec![Value::Int(rng.gen_range(0..4)), s]
                })
                .collect();
            let t = Table::infer("t", vec!["n".into(), "s".into()], rows).unwrap();
            let source = if rng.gen_bool(0.1) { "n" } else { "s" }.to_string();
            let target: Vec<String> = match rng.gen_range(0..3) {
                0 => vec!["p".into(), "q".into()],
                1 => vec!["p".into(), "q".into(), "r".into()],
                _ => vec![source.clone(), "q".into()],
            };
            let si = pos(&t, &source);
            let mut ok = true;
            let mut rows = Vec::new();
            for r in t.rows() {
                let parts: Vec<Value> = match &r[si] {
                    Value::Null => vec![Value::Null; target.len()],
                    Value::Text(s) => {
                        let mut p: Vec<Value> = s.split(' ').map(Value::text).collect();
                        if p.len() > target.len() {
                            ok = false;
                        }
                        while p.len() < target.len() {
                            p.push(Value::Null);
                        }
                        p
                    }
                    _ => {
                        ok = false;
                        vec![]
                    }
                };
                let mut out = Vec::new();
                for (c, v) in r.iter().enumerate() {
                    if c == si {
                        out.extend(parts.iter().cloned());
                    } else {
                        out.push(v.clone());
                    }
                }
                rows.push(out);
            }
            let mut cols = Vec::new();
            for (c, n) in names(&t).into_iter().enumerate() {
                if c == si {
                    cols.extend(target.iter().cloned());
                } else {
                    cols.push(n);
                }
            }
            let exp = if ok { make("t", cols, rows) } else { None };
            let func = expr(&format!("split(col(\"{source}\"), \" \")"));
            finish(rng, t, Operator::SplitColumn { table: "t".into(), source, target, func }, exp)
        }
        OpKind::Concatenate => {
            let cols = vec![("c0".to_string(), DType::Text), ("c1".to_string(), DType::Text), ("c2".to_string(), DType::Int)];
            let nrows = rng.gen_range(0..=8);
            let t = rand_table_with(rng, "t", &cols, nrows);
            let target = if rng.gen_bool(0.1) { "c2" } else { "cat" }.to_string();
            let (src, columns, f): (&str, Vec<String>, RowFn) = match rng.gen_range(0..3) {
                0 => (
                    r#"concat(col("c0"), col("c1"))"#,
                    vec!["c0".into(), "c1".into()],
                    Rc::new(|r: &[Value]| match (&r[0], &r[1]) {
                        (Value::Text(a), Value::Text(b)) => Some(Value::text(format!("{a}{b}"))),
                        _ => Some(Value::Null),
                    }),
                ),
                1 => (
                    r#"col("c0") + col("c1")"#,
                    vec!["c0".into(), "c1".into()],
                    Rc::new(|r: &[Value]| match (&r[0], &r[1]) {
                        (Value::Text(a), Value::Text(b)) => Some(Value::text(format!("{a}{b}"))),
                        _ => Some(Value::Null),
                    }),
                ),
                _ => (
                    r#"concat(col("c0"), "-", to_text(col("c2")))"#,
                    vec!["c0".into(), "c2".into()],
                    Rc::new(|r: &[Value]| match (&r[0], &r[2]) {
                        (Value::Text(a), Value::Int(b)) => Some(Value::text(format!("{a}-{b}"))),
                        _ => Some(Value::Null),
                    }),
                ),
            };
            let exp = eval_all(&t, &f).and_then(|cells| append_col(&t, &target, cells));
            finish(rng, t, Operator::Concatenate { table: "t".into(), columns, target, func: expr(src) }, exp)
        }
        OpKind::Subtitle => {
            let t = rand_table(rng, "t");
            let title = ["T", "Report 1"].choose(rng).unwrap().to_string();
            let target_col = if rng.gen_bool(0.1) { "c0" } else { "title" }.to_string();
            let exp = append_col(&t, &target_col, vec![Value::text(title.clone()); t.num_rows()]);
            finish(rng, t, Operator::Subtitle { table: "t".into(), title, target_col }, exp)
        }
        OpKind::Filter => {
            let t = rand_table(rng, "t");
            let p = predicate(rng, &t);
            let exp = eval_all(&t, &p.f).and_then(|keep| {
                let rows = t.rows().iter().zip(keep).filter(|(_, k)| *k == Value::Bool(true)).map(|(r, _)| r.clone()).collect();
                make("t", names(&t), rows)
            });
            finish(rng, t.clone(), Operator::Filter { table: "t".into(), func: expr(&p.src) }, exp)
        }
        OpKind::Sort => {
            let t = rand_table(rng, "t");
            let mut by = subset(rng, &names(&t), 1);
            by.truncate(2);
            by.shuffle(rng);
            let ascending = if rng.gen_bool(0.5) {
                Ascending::All(rng.gen())
            } else {
                let extra = usize::from(rng.gen_bool(0.1));
                Ascending::Each((0..by.len() + extra).map(|_| rng.gen()).collect())
            };
            let dirs: Option<Vec<bool>> = match &ascending {
                Ascending::All(a) => Some(vec![*a; by.len()]),
                Ascending::Each(v) if v.len() == by.len() => Some(v.clone()),
                Ascending::Each(_) => None,
            };
            let exp = dirs.and_then(|dirs| {
                let keys: Vec<usize> = by.iter().map(|c| pos(&t, c)).collect();
                let before = |a: &[Value], b: &[Value]| -> bool {
                    for (&k, &asc) in keys.iter().zip(&dirs) {
                        let o = if asc { a[k].cmp(&b[k]) } else { b[k].cmp(&a[k]) };
                        if o != Ordering::Equal {
                            return o == Ordering::Less;
                        }
                    }
                    false
                };
                // stable insertion sort
                let mut rows = t.rows().to_vec();
                for i in 1..rows.len() {
                    let mut j = i;
                    while j > 0 && before(&rows[j], &rows[j - 1]) {
                        rows.swap(j, j - 1);
                        j -= 1;
                    }
                }
                make("t", names(&t), rows)
            });
            finish(rng, t, Operator::Sort { table: "t".into(), by, ascending }, exp)
        }
        OpKind::TopK => {
            let t = rand_table(rng, "t");
            let k: i64 = rng.gen_range(-1..10);
            let exp = if k < 0 {
                None
            } else {
                make("t", names(&t), t.rows().iter().take(k as usize).cloned().collect())
            };
            finish(rng, t, Operator::TopK { table: "t".into(), k }, exp)
        }
        OpKind::GroupBy => {
            let t = rand_table(rng, "t");
            let mut by = subset(rng, &names(&t), 0);
            by.truncate(2);
            let mut agg_cols = subset(rng, &names(&t), 1);
            agg_cols.truncate(2);
            let agg: Vec<(String, Vec<AggFn>)> = agg_cols
                .into_iter()
                .map(|c| {
                    let numeric = is_num(&t, pos(&t, &c));
                    let allowed: Vec<AggFn> = AggFn::ALL
                        .iter()
                        .copied()
                        .filter(|f| *f != AggFn::FirstStrict && (numeric || !matches!(f, AggFn::Sum | AggFn::Avg)))
                        .collect();
                    let n = rng.gen_range(1..=2);
                    let mut fns: Vec<AggFn> = allowed.choose_multiple(rng, n).copied().collect();
                    if rng.gen_bool(0.05) && !numeric {
                        fns.push(AggFn::Sum);
                    }
                    (c, fns)
                })
                .collect();
            let keys: Vec<usize> = by.iter().map(|c| pos(&t, c)).collect();
            let mut groups = ref_groups(t.rows(), &keys);
            if keys.is_empty() && groups.is_empty() {
                groups.push((vec![], vec![]));
            }
            let mut cols = by.clone();
            for (c, fns) in &agg {
                for f in fns {
                    cols.push(format!("{c}_{f}"));
                }
            }
            let mut rows = Vec::new();
            let mut ok = agg.iter().all(|(c, fns)| {
                is_num(&t, pos(&t, c)) || !fns.iter().any(|f| matches!(f, AggFn::Sum | AggFn::Avg))
            });
            for (key, members) in &groups {
                let mut row = key.clone();
                for (c, fns) in &agg {
                    let i = pos(&t, c);
                    let cells: Vec<Value> = members.iter().map(|&r| t.rows()[r][i].clone()).collect();
                    for f in fns {
                        match ref_agg(*f, &cells, t.columns()[i].dtype == DType::Real) {
                            Some(v) => row.push(v),
                            None => ok = false,
                        }
                    }
                }
                rows.push(row);
            }
            let exp = if ok { make("t", cols, rows) } else { None };
            finish(rng, t, Operator::GroupBy { table: "t".into(), by, agg }, exp)
        }
        OpKind::Count => {
            let t = rand_table(rng, "t");
            let exp = make("t", vec!["count".into()], vec![vec![Value::Int(t.num_rows() as i64)]]);
            finish(rng, t, Operator::Count { table: "t".into() }, exp)
        }
        OpKind::CalculateStatistic => {
            let t = rand_table(rng, "t");
            let i = rng.gen_range(0..t.num_cols());
            let e = transform(rng, &t, i);
            let stat = *Stat::ALL.choose(rng).unwrap();
            let exp = eval_all(&t, &e.f).and_then(|vals| {
                let present: Vec<Value> = vals.into_iter().filter(|v| !v.is_null()).collect();
                let all_num = present.iter().all(|v| num(v).is_some());
                let v = match stat {
                    Stat::Sum => ref_sum(&present, false)?,
                    _ if present.is_empty() => return None,
                    Stat::Avg if !all_num => return None,
                    Stat::Avg => ref_agg(AggFn::Avg, &present, true)?,
                    Stat::Min => ref_agg(AggFn::Min, &present, false)?,
                    Stat::Max => ref_agg(AggFn::Max, &present, false)?,
                };
                make("t", vec![stat.as_str().into()], vec![vec![v]])
            });
            finish(rng, t.clone(), Operator::CalculateStatistic { table: "t".into(), stat, func: expr(&e.src) }, exp)
        }
        OpKind::Join => gen_join(rng),
        OpKind::Union | OpKind::Append => gen_union(rng, kind),
        OpKind::Pivot => gen_pivot(rng),
        OpKind::Stack => {
            let t = rand_table(rng, "t");
            let all = names(&t);
            let id_vars = subset(rng, &all, 0);
            let rest: Vec<String> = all.iter().filter(|c| !id_vars.contains(c)).cloned().collect();
            let value_vars = if rest.is_empty() { vec![] } else { subset(rng, &rest, 1) };
            let exp = if value_vars.is_empty() {
                None
            } else {
                let mut rows = Vec::new();
                for r in t.rows() {
                    for v in &value_vars {
                        let mut out: Vec<Value> = id_vars.iter().map(|c| r[pos(&t, c)].clone()).collect();
                        out.push(Value::text(v.clone()));
                        out.push(r[pos(&t, v)].clone());
                        rows.push(out);
                    }
                }
                let mut cols = id_vars.clone();
                cols.push("variable".into());
                cols.push("value".into());
                make("t_stack", cols, rows)
            };
            let op = Operator::Stack { table: "t".into(), id_vars, value_vars };
            let mut s = state_of(vec![t, bystander(rng)]);
            let expected = exp.map(|e| {
                let mut out = s.clone();
                out.insert(e);
                out
            });
            if rng.gen_bool(0.05) {
                // a pre-existing table under the derived name blocks the operator
                s.insert(Table::infer("t_stack", vec!["z".into()], vec![]).unwrap());
                return Case { state: s, op, expected: None };
            }
            Case { state: s, op, expected }
        }
        OpKind::WideToLong => gen_wide_to_long(rng),
        OpKind::Transpose => {
            let t = rand_table(rng, "t");
            let mut cols = vec!["column".to_string()];
            for r in 0..t.num_rows() {
                cols.push(format!("r{r}"));
            }
            let mut rows = Vec::new();
            for (c, spec) in t.columns().iter().enumerate() {
                let mut out = vec![Value::text(spec.name.clone())];
                for row in t.rows() {
                    out.push(if row[c].is_null() { Value::Null } else { Value::text(row[c].render()) });
                }
                rows.push(out);
            }
            let exp = make("t_transpose", cols, rows);
            let s = state_of(vec![t, bystander(rng)]);
            let expected = put(&s, exp);
            Case { state: s, op: Operator::Transpose { table: "t".into() }, expected }
        }
        OpKind::Explode => {
            let cols = vec![("id".to_string(), DType::Int), ("xs".to_string(), DType::List), ("c".to_string(), DType::Text)];
            let nrows = rng.gen_range(0..=8);
            let t = rand_table_with(rng, "t", &cols, nrows);
            let column = if rng.gen_bool(0.7) { "xs" } else { "c" }.to_string();
            let ci = pos(&t, &column);
            let mut rows = Vec::new();
            for r in t.rows() {
                match &r[ci] {
                    Value::List(items) if items.is_empty() => {
                        let mut o = r.clone();
                        o[ci] = Value::Null;
                        rows.push(o);
                    }
                    Value::List(items) => {
                        for it in items {
                            let mut o = r.clone();
                            o[ci] = it.clone();
                            rows.push(o);
                        }
                    }
                    _ => rows.push(r.clone()),
                }
            }
            let exp = make("t", names(&t), rows);
            finish(rng, t, Operator::Explode { table: "t".into(), column }, exp)
        }
        OpKind::ExeCode => panic!("ExeCode has no deterministic reference"),
    }
}

/// Wraps a single-table in-place case with a bystander table.
fn finish(rng: &mut ChaCha8Rng, t: Table, op: Operator, exp: Option<Table>) -> Case {
    let state = state_of(vec![t, bystander(rng)]);
    let expected = put(&state, exp);
    Case { state, op, expected }
}

fn gen_datetime(rng: &mut ChaCha8Rng) -> Case {
    let inputs = ["%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y", "%d-%m-%Y", "%B %d, %Y", "%d %b %Y"];
    let outputs = ["%Y-%m-%d", "%d/%m/%Y", "%Y%m%d", "%b %d %Y"];
    let format = outputs.choose(rng).unwrap().to_string();
    let nrows = rng.gen_range(0..=8);
    let mut ok = true;
    let mut rows = Vec::new();
    let mut expected_rows = Vec::new();
    for _ in 0..nrows {
        let k = Value::Int(rng.gen_range(0..4));
        if rng.gen_bool(0.15) {
            rows.push(vec![k.clone(), Value::Null]);
            expected_rows.push(vec![k, Value::Null]);
        } else if rng.gen_bool(0.05) {
            ok = false;
            rows.push(vec![k.clone(), Value::text("someday")]);
        } else {
            let d = NaiveDate::from_ymd_opt(rng.gen_range(1990..2030), rng.gen_range(1..=12), rng.gen_range(1..=28)).unwrap();
            let f = inputs.choose(rng).unwrap();
            rows.push(vec![k.clone(), Value::text(d.format(f).to_string())]);
            expected_rows.push(vec![k, Value::text(d.format(&format).to_string())]);
        }
    }
    let t = Table::infer("t", vec!["k".into(), "d".into()], rows).unwrap();
    let exp = if ok { make("t", vec!["k".into(), "d".into()], expected_rows) } else { None };
    finish(rng, t, Operator::StandardizeDatetime { table: "t".into(), column: "d".into(), format }, exp)
}

fn gen_join(rng: &mut ChaCha8Rng) -> Case {
    let mut lcols = vec![("k".to_string(), DType::Int)];
    for n in subset(rng, &["a".to_string(), "b".to_string()], 1) {
        lcols.push((n, *DTYPES.choose(rng).unwrap()));
    }
    let mut rcols = vec![("k".to_string(), DType::Int)];
    for n in subset(rng, &["b".to_string(), "c".to_string()], 1) {
        rcols.push((n, *DTYPES.choose(rng).unwrap()));
    }
    let (ln, rn) = (rng.gen_range(0..=8), rng.gen_range(0..=8));
    let l = rand_table_with(rng, "L", &lcols, ln);
    let r = rand_table_with(rng, "R", &rcols, rn);
    let how = *JoinHow::ALL.choose(rng).unwrap();

    let lk = pos(&l, "k");
    let rk = pos(&r, "k");
    let l_other: Vec<usize> = (0..l.num_cols()).filter(|&i| i != lk).collect();
    let r_other: Vec<usize> = (0..r.num_cols()).filter(|&i| i != rk).collect();
    let lname = |i: usize| l.columns()[i].name.clone();
    let rname = |i: usize| r.columns()[i].name.clone();
    let mut cols = vec!["k".to_string()];
    for &i in &l_other {
        let clash = r_other.iter().any(|&j| rname(j) == lname(i));
        cols.push(if clash { format!("{}_left", lname(i)) } else { lname(i) });
    }
    for &j in &r_other {
        let clash = l_other.iter().any(|&i| lname(i) == rname(j));
        cols.push(if clash { format!("{}_right", rname(j)) } else { rname(j) });
    }
    let mut rows = Vec::new();
    let mut right_used = vec![false; r.num_rows()];
    for lrow in l.rows() {
        let mut matched = false;
        for (j, rrow) in r.rows().iter().enumerate() {
            if !lrow[lk].is_null() && !rrow[rk].is_null() && lrow[lk] == rrow[rk] {
                matched = true;
                right_used[j] = true;
                let mut out = vec![lrow[lk].clone()];
                out.extend(l_other.iter().map(|&i| lrow[i].clone()));
                out.extend(r_other.iter().map(|&i| rrow[i].clone()));
                rows.push(out);
            }
        }
        if !matched && matches!(how, JoinHow::Left | JoinHow::Outer) {
            let mut out = vec![lrow[lk].clone()];
            out.extend(l_other.iter().map(|&i| lrow[i].clone()));
            out.extend(r_other.iter().map(|_| Value::Null));
            rows.push(out);
        }
    }
    if matches!(how, JoinHow::Right | JoinHow::Outer) {
        for (j, rrow) in r.rows().iter().enumerate() {
            if !right_used[j] {
                let mut out = vec![rrow[rk].clone()];
                out.extend(l_other.iter().map(|_| Value::Null));
                out.extend(r_other.iter().map(|&i| rrow[i].clone()));
                rows.push(out);
            }
        }
    }
    let exp = make("L_R_join", cols, rows);
    let state = state_of(vec![l, r, bystander(rng)]);
    let expected = exp.map(|e| {
        let mut s = state.clone();
        s.remove("L");
        s.remove("R");
        s.insert(e);
        s
    });
    Case { state, op: Operator::Join { left: "L".into(), right: "R".into(), on: vec!["k".into()], how }, expected }
}

fn gen_union(rng: &mut ChaCha8Rng, kind: OpKind) -> Case {
    let ncols = rng.gen_range(1..=3);
    let cols = rand_cols(rng, ncols);
    let (n1, n2) = (rng.gen_range(0..=8), rng.gen_range(0..=8));
    let t1 = rand_table_with(rng, "T1", &cols, n1);
    let mut cols2 = cols.clone();
    cols2.shuffle(rng);
    let mismatch = rng.gen_bool(0.1);
    if mismatch {
        cols2[0].0 = "zz".into();
    }
    let t2 = rand_table_with(rng, "T2", &cols2, n2);
    let names1 = names(&t1);
    let reorder = |t: &Table| -> Vec<Vec<Value>> {
        t.rows().iter().map(|r| names1.iter().map(|c| r[pos(t, c)].clone()).collect()).collect()
    };
    let how = if kind == OpKind::Union { *UnionHow::ALL.choose(rng).unwrap() } else { UnionHow::All };
    let self_union = kind == OpKind::Union && rng.gen_bool(0.15);
    let exp = if mismatch && !self_union {
        None
    } else {
        let mut rows = t1.rows().to_vec();
        rows.extend(if self_union { t1.rows().to_vec() } else { reorder(&t2) });
        if how == UnionHow::Distinct {
            let mut kept: Vec<Vec<Value>> = Vec::new();
            for r in rows {
                if !kept.contains(&r) {
                    kept.push(r);
                }
            }
            rows = kept;
        }
        // mixed dtypes across the inputs make the result invalid
        make("T1", names1.clone(), rows)
    };
    let state = state_of(vec![t1, t2, bystander(rng)]);
    let expected = exp.map(|e| {
        let mut s = state.clone();
        if !self_union {
            s.remove("T2");
        }
        s.insert(e);
        s
    });
    let op = match kind {
        OpKind::Union if self_union => Operator::Union { tables: vec!["T1".into(), "T1".into()], how },
        OpKind::Union => Operator::Union { tables: vec!["T1".into(), "T2".into()], how },
        _ => Operator::Append { table: "T1".into(), other: "T2".into() },
    };
    Case { state, op, expected }
}

fn gen_pivot(rng: &mut ChaCha8Rng) -> Case {
    let vdtype = *[DType::Int, DType::Real, DType::Text].choose(rng).unwrap();
    let nrows = rng.gen_range(0..=8);
    let mut rows = Vec::new();
    for _ in 0..nrows {
        let id = if rng.gen_bool(0.1) { Value::Null } else { Value::Int(rng.gen_range(0..3)) };
        let k = if rng.gen_bool(0.15) { Value::Null } else { Value::text(*["x", "y", "z"].choose(rng).unwrap()) };
        rows.push(vec![id, k, rand_value(rng, vdtype)]);
    }
    let t = Table::infer("p", vec!["id".into(), "k".into(), "v".into()], rows).unwrap();
    let index: Vec<String> = if rng.gen_bool(0.85) { vec!["id".into()] } else { vec![] };
    let aggfunc = *AggFn::ALL.choose(rng).unwrap();
    let numeric = is_num(&t, 2);

    let kept: Vec<Vec<Value>> = t.rows().iter().filter(|r| !r[1].is_null()).cloned().collect();
    let mut headers: Vec<String> = Vec::new();
    for r in &kept {
        let h = r[1].render();
        if !headers.contains(&h) {
            headers.push(h);
        }
    }
    let keys: Vec<usize> = if index.is_empty() { vec![] } else { vec![0] };
    let groups = ref_groups(&kept, &keys);
    let mut ok = numeric || !matches!(aggfunc, AggFn::Sum | AggFn::Avg);
    let mut out_rows = Vec::new();
    for (key, members) in &groups {
        let mut row = key.clone();
        for h in &headers {
            let cells: Vec<Value> = members.iter().filter(|&&m| kept[m][1].render() == *h).map(|&m| kept[m][2].clone()).collect();
            if cells.is_empty() {
                row.push(Value::Null);
            } else {
                match ref_agg(aggfunc, &cells, t.columns()[2].dtype == DType::Real) {
                    Some(v) => row.push(v),
                    None => ok = false,
                }
            }
        }
        out_rows.push(row);
    }
    let mut cols = index.clone();
    cols.extend(headers);
    let exp = if ok { make("p_pivot", cols, out_rows) } else { None };
    let state = state_of(vec![t, bystander(rng)]);
    let expected = put(&state, exp);
    let op = Operator::Pivot { table: "p".into(), index, columns: "k".into(), values: "v".into(), aggfunc };
    Case { state, op, expected }
}

fn gen_wide_to_long(rng: &mut ChaCha8Rng) -> Case {
    let candidates: Vec<String> = ["s_1", "s_2", "t_1", "t_2", "s3", "other"].iter().map(|s| s.to_string()).collect();
    let wide = subset(rng, &candidates, 1);
    let mut cols = vec![("id".to_string(), DType::Int)];
    let dt = *[DType::Int, DType::Text].choose(rng).unwrap();
    for w in &wide {
        cols.push((w.clone(), dt));
    }
    let nrows = rng.gen_range(0..=8);
    let t = rand_table_with(rng, "w", &cols, nrows);
    let stubnames: Vec<String> = if rng.gen_bool(0.5) { vec!["s".into(), "t".into()] } else { vec!["s".into()] };

    let mut suffixes: Vec<String> = Vec::new();
    let mut cell_of: Vec<(usize, String, usize)> = Vec::new();
    for (c, spec) in t.columns().iter().enumerate() {
        if spec.name == "id" {
            continue;
        }
        for (si, stub) in stubnames.iter().enumerate() {
            if let Some(rest) = spec.name.strip_prefix(stub.as_str()) {
                let suffix = rest.strip_prefix('_').unwrap_or(rest).to_string();
                if suffix.is_empty() {
                    continue;
                }
                if !suffixes.contains(&suffix) {
                    suffixes.push(suffix.clone());
                }
                cell_of.push((si, suffix, c));
            }
        }
    }
    let exp = if suffixes.is_empty() {
        None
    } else {
        let mut rows = Vec::new();
        for r in t.rows() {
            for suf in &suffixes {
                let mut out = vec![r[0].clone(), Value::text(suf.clone())];
                for si in 0..stubnames.len() {
                    let found = cell_of.iter().find(|(s, x, _)| *s == si && x == suf);
                    out.push(found.map_or(Value::Null, |(_, _, c)| r[*c].clone()));
                }
                rows.push(out);
            }
        }
        let mut cols = vec!["id".to_string(), "n".to_string()];
        cols.extend(stubnames.iter().cloned());
        make("w_long", cols, rows)
    };
    let state = state_of(vec![t, bystander(rng)]);
    let expected = put(&state, exp);
    let op = Operator::WideToLong { table: "w".into(), stubnames, i: vec!["id".into()], j: "n".into() };
    Case { state, op, expected }
}
