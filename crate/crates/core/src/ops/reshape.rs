use std::collections::HashMap;

use super::aggregate::{aggregate, check_agg, group_rows};
use super::util::{self, build, column, columns, replace, store_derived, Failure, OpResult};
use super::{AggFn, Operator};
use crate::table::{Table, TableSet};
use crate::value::{DType, Value};

pub(super) fn apply(op: &Operator, state: &TableSet) -> OpResult {
    let derived = |t: Table| {
        let inputs = op.input_tables();
        store_derived(state, t, &inputs, &[])
    };
    match op {
        Operator::Pivot { table, index, columns: pivot_col, values, aggfunc } => {
            let t = util::table(state, table)?;
            derived(pivot(t, index, pivot_col, values, *aggfunc, &op.output_table())?)
        }
        Operator::Stack { table, id_vars, value_vars } => {
            let t = util::table(state, table)?;
            derived(stack(t, id_vars, value_vars, &op.output_table())?)
        }
        Operator::WideToLong { table, stubnames, i, j } => {
            let t = util::table(state, table)?;
            derived(wide_to_long(t, stubnames, i, j, &op.output_table())?)
        }
        Operator::Transpose { table } => {
            let t = util::table(state, table)?;
            derived(transpose(t, &op.output_table())?)
        }
        Operator::Explode { table, column: col } => {
            let t = util::table(state, table)?;
            let c = column(t, col)?;
            let mut rows = Vec::with_capacity(t.num_rows());
            for row in t.rows() {
                match &row[c] {
                    Value::List(items) if items.is_empty() => {
                        let mut r = row.clone();
                        r[c] = Value::Null;
                        rows.push(r);
                    }
                    Value::List(items) => {
                        for item in items {
                            let mut r = row.clone();
                            r[c] = item.clone();
                            rows.push(r);
                        }
                    }
                    _ => rows.push(row.clone()),
                }
            }
            let names: Vec<String> = t.column_names().into_iter().map(str::to_string).collect();
            let mut hints = vec![None; names.len()];
            hints[c] = Some(if t.columns()[c].dtype == DType::List { DType::Text } else { t.columns()[c].dtype });
            Ok(replace(state, util::rebuild_hinted(t, names, rows, &hints)?))
        }
        _ => unreachable!("not a reshaping operator"),
    }
}

fn pivot(t: &Table, index: &[String], pivot_col: &str, values: &str, f: AggFn, name: &str) -> Result<Table, Failure> {
    let idx = columns(t, index)?;
    let pc = column(t, pivot_col)?;
    let vc = column(t, values)?;
    check_agg(t, vc, f)?;
    let vdtype = t.columns()[vc].dtype;

    // rows with no pivot value cannot be placed in any output column
    let kept: Vec<Vec<Value>> = t.rows().iter().filter(|r| !r[pc].is_null()).cloned().collect();
    let filtered = Table::new(t.schema().clone(), kept)?;

    let mut headers: Vec<String> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    for row in filtered.rows() {
        let h = row[pc].render();
        if !slot.contains_key(&h) {
            slot.insert(h.clone(), headers.len());
            headers.push(h);
        }
    }

    let mut names: Vec<String> = index.to_vec();
    names.extend(headers.iter().cloned());
    let mut hints: Vec<Option<DType>> = idx.iter().map(|&i| Some(t.columns()[i].dtype)).collect();
    let cell_dtype = match f {
        AggFn::Avg => DType::Real,
        AggFn::Count | AggFn::CountDistinct => DType::Int,
        AggFn::Concat => DType::List,
        _ => vdtype,
    };
    hints.extend(headers.iter().map(|_| Some(cell_dtype)));

    let mut rows = Vec::new();
    for (key, members) in group_rows(&filtered, &idx) {
        if members.is_empty() {
            continue;
        }
        let mut buckets: Vec<Vec<&Value>> = vec![Vec::new(); headers.len()];
        for &r in &members {
            let row = &filtered.rows()[r];
            buckets[slot[&row[pc].render()]].push(&row[vc]);
        }
        let mut out = key;
        for b in buckets {
            out.push(if b.is_empty() { Value::Null } else { aggregate(f, vdtype, &b)? });
        }
        rows.push(out);
    }
    build(name, names, rows, &hints)
}

fn stack(t: &Table, id_vars: &[String], value_vars: &[String], name: &str) -> Result<Table, Failure> {
    let ids = columns(t, id_vars)?;
    let vals = columns(t, value_vars)?;
    if vals.is_empty() {
        return Err(Failure::invalid("no value columns to stack"));
    }
    let mut names = id_vars.to_vec();
    names.push("variable".into());
    names.push("value".into());
    let mut hints: Vec<Option<DType>> = ids.iter().map(|&i| Some(t.columns()[i].dtype)).collect();
    hints.push(Some(DType::Text));
    hints.push(Some(t.columns()[vals[0]].dtype));
    let mut rows = Vec::with_capacity(t.num_rows() * vals.len());
    for row in t.rows() {
        for (&v, var) in vals.iter().zip(value_vars) {
            let mut out: Vec<Value> = ids.iter().map(|&i| row[i].clone()).collect();
            out.push(Value::Text(var.clone()));
            out.push(row[v].clone());
            rows.push(out);
        }
    }
    build(name, names, rows, &hints)
}

/// Splits `col` into (stub, suffix) for the longest matching stub. One `_`
/// between stub and suffix is dropped.
fn match_stub<'a>(col: &'a str, stubs: &[String]) -> Option<(usize, &'a str)> {
    let mut best: Option<(usize, &str)> = None;
    for (s, stub) in stubs.iter().enumerate() {
        if let Some(rest) = col.strip_prefix(stub.as_str()) {
            let suffix = rest.strip_prefix('_').unwrap_or(rest);
            let longer = best.is_none_or(|(b, _)| stubs[b].len() < stub.len());
            if !suffix.is_empty() && longer {
                best = Some((s, suffix));
            }
        }
    }
    best
}

fn wide_to_long(t: &Table, stubs: &[String], i: &[String], j: &str, name: &str) -> Result<Table, Failure> {
    let ids = columns(t, i)?;
    if stubs.is_empty() {
        return Err(Failure::invalid("no stub names"));
    }
    let mut suffixes: Vec<String> = Vec::new();
    let mut cell: HashMap<(usize, String), usize> = HashMap::new();
    let mut stub_dtype: Vec<Option<DType>> = vec![None; stubs.len()];
    for (c, spec) in t.columns().iter().enumerate() {
        if ids.contains(&c) {
            continue;
        }
        if let Some((s, suffix)) = match_stub(&spec.name, stubs) {
            if !suffixes.iter().any(|x| x == suffix) {
                suffixes.push(suffix.to_string());
            }
            cell.insert((s, suffix.to_string()), c);
            stub_dtype[s].get_or_insert(spec.dtype);
        }
    }
    if suffixes.is_empty() {
        return Err(Failure::invalid(format!("no column matches stubs {}", stubs.join(", "))));
    }
    let mut names = i.to_vec();
    names.push(j.to_string());
    names.extend(stubs.iter().cloned());
    let mut hints: Vec<Option<DType>> = ids.iter().map(|&c| Some(t.columns()[c].dtype)).collect();
    hints.push(Some(DType::Text));
    hints.extend(stub_dtype);
    let mut rows = Vec::with_capacity(t.num_rows() * suffixes.len());
    for row in t.rows() {
        for suffix in &suffixes {
            let mut out: Vec<Value> = ids.iter().map(|&c| row[c].clone()).collect();
            out.push(Value::Text(suffix.clone()));
            for s in 0..stubs.len() {
                out.push(cell.get(&(s, suffix.clone())).map_or(Value::Null, |&c| row[c].clone()));
            }
            rows.push(out);
        }
    }
    build(name, names, rows, &hints)
}

fn transpose(t: &Table, name: &str) -> Result<Table, Failure> {
    let mut names = vec!["column".to_string()];
    names.extend((0..t.num_rows()).map(|r| format!("r{r}")));
    let rows = t
        .columns()
        .iter()
        .enumerate()
        .map(|(c, spec)| {
            let mut out = vec![Value::Text(spec.name.clone())];
            out.extend(t.rows().iter().map(|row| match &row[c] {
                Value::Null => Value::Null,
                v => Value::Text(v.render()),
            }));
            out
        })
        .collect();
    let hints = vec![Some(DType::Text); names.len()];
    build(name, names, rows, &hints)
}
