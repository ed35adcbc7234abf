use std::collections::{HashMap, HashSet};

use super::util::{self, build, columns, store_derived, Failure, OpResult};
use super::{JoinHow, Operator, UnionHow};
use crate::table::{Table, TableSet};
use crate::value::{DType, Value};

pub(super) fn apply(op: &Operator, state: &TableSet) -> OpResult {
    match op {
        Operator::Join { left, right, on, how } => {
            let l = util::table(state, left)?;
            let r = util::table(state, right)?;
            let out = join(l, r, on, *how, &op.output_table())?;
            store_derived(state, out, &[left, right], &[left, right])
        }
        Operator::Union { tables, how } => {
            let Some(first) = tables.first() else {
                return Err(Failure::invalid("no tables to union"));
            };
            let parts = tables.iter().map(|n| util::table(state, n).map(|t| t.as_ref())).collect::<Result<Vec<_>, _>>()?;
            let mut out = stack_rows(&parts)?;
            if *how == UnionHow::Distinct {
                let mut seen = HashSet::new();
                out.1.retain(|row| seen.insert(row.clone()));
            }
            let t = finish(parts[0], out)?;
            let inputs: Vec<&str> = tables.iter().map(String::as_str).collect();
            store_derived(state, t, &[first], &inputs)
        }
        Operator::Append { table, other } => {
            let a = util::table(state, table)?;
            let b = util::table(state, other)?;
            let t = finish(a, stack_rows(&[a, b])?)?;
            store_derived(state, t, &[table], &[other])
        }
        _ => unreachable!("not a combination operator"),
    }
}

/// Concatenates rows of tables sharing one column-name set, in the first
/// table's column order.
fn stack_rows(parts: &[&Table]) -> Result<(Vec<String>, Vec<Vec<Value>>), Failure> {
    let names: Vec<String> = parts[0].column_names().into_iter().map(str::to_string).collect();
    let wanted: HashSet<&str> = names.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    for t in parts {
        let theirs: HashSet<&str> = t.column_names().into_iter().collect();
        if theirs != wanted {
            let mut diff: Vec<&str> = wanted.symmetric_difference(&theirs).copied().collect();
            diff.sort_unstable();
            return Err(Failure::invalid(format!(
                "table {} does not match the columns of {} (differs in {})",
                t.name(),
                parts[0].name(),
                diff.join(", ")
            ))
            .about(diff[0]));
        }
        let order = columns(t, &names)?;
        rows.extend(t.rows().iter().map(|r| order.iter().map(|&i| r[i].clone()).collect::<Vec<_>>()));
    }
    Ok((names, rows))
}

fn finish(first: &Table, (names, rows): (Vec<String>, Vec<Vec<Value>>)) -> Result<Table, Failure> {
    util::rebuild(first, names, rows)
}

fn join(l: &Table, r: &Table, on: &[String], how: JoinHow, name: &str) -> Result<Table, Failure> {
    if on.is_empty() {
        return Err(Failure::invalid("join needs at least one key column"));
    }
    let lk = columns(l, on)?;
    let rk = columns(r, on)?;
    let l_rest: Vec<usize> = (0..l.num_cols()).filter(|i| !lk.contains(i)).collect();
    let r_rest: Vec<usize> = (0..r.num_cols()).filter(|i| !rk.contains(i)).collect();
    let l_names: HashSet<&str> = l_rest.iter().map(|&i| l.columns()[i].name.as_str()).collect();
    let r_names: HashSet<&str> = r_rest.iter().map(|&i| r.columns()[i].name.as_str()).collect();

    let mut names: Vec<String> = on.to_vec();
    let mut hints: Vec<Option<DType>> = lk.iter().map(|&i| Some(l.columns()[i].dtype)).collect();
    for &i in &l_rest {
        let n = &l.columns()[i].name;
        names.push(if r_names.contains(n.as_str()) { format!("{n}_left") } else { n.clone() });
        hints.push(Some(l.columns()[i].dtype));
    }
    for &i in &r_rest {
        let n = &r.columns()[i].name;
        names.push(if l_names.contains(n.as_str()) { format!("{n}_right") } else { n.clone() });
        hints.push(Some(r.columns()[i].dtype));
    }

    let key = |row: &[Value], idx: &[usize]| -> Option<Vec<Value>> {
        let k: Vec<Value> = idx.iter().map(|&i| row[i].clone()).collect();
        // SQL semantics: a null key never matches
        (!k.iter().any(Value::is_null)).then_some(k)
    };
    let mut index: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
    for (j, row) in r.rows().iter().enumerate() {
        if let Some(k) = key(row, &rk) {
            index.entry(k).or_default().push(j);
        }
    }

    let mut matched_right = vec![false; r.num_rows()];
    let mut rows = Vec::new();
    let emit = |lrow: Option<&[Value]>, rrow: Option<&[Value]>| -> Vec<Value> {
        let mut out = Vec::with_capacity(names.len());
        for (&li, &ri) in lk.iter().zip(&rk) {
            out.push(match (lrow, rrow) {
                (Some(a), _) => a[li].clone(),
                (None, Some(b)) => b[ri].clone(),
                (None, None) => Value::Null,
            });
        }
        out.extend(l_rest.iter().map(|&i| lrow.map_or(Value::Null, |a| a[i].clone())));
        out.extend(r_rest.iter().map(|&i| rrow.map_or(Value::Null, |b| b[i].clone())));
        out
    };
    for lrow in l.rows() {
        let matches = key(lrow, &lk).and_then(|k| index.get(&k)).map(Vec::as_slice).unwrap_or(&[]);
        for &j in matches {
            matched_right[j] = true;
            rows.push(emit(Some(lrow), Some(&r.rows()[j])));
        }
        if matches.is_empty() && matches!(how, JoinHow::Left | JoinHow::Outer) {
            rows.push(emit(Some(lrow), None));
        }
    }
    if matches!(how, JoinHow::Right | JoinHow::Outer) {
        for (j, rrow) in r.rows().iter().enumerate() {
            if !matched_right[j] {
                rows.push(emit(None, Some(rrow)));
            }
        }
    }
    build(name, names, rows, &hints)
}
