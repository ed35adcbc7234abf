use std::collections::HashSet;

use super::util::{self, column, columns, ensure_absent, eval_rows, rebuild_hinted, replace, Failure, OpResult};
use super::Operator;
use crate::table::{Table, TableSet};
use crate::value::{DType, Value};

pub(super) fn apply(op: &Operator, state: &TableSet) -> OpResult {
    match op {
        Operator::RenameColumn { table, rename_map } => {
            let t = util::table(state, table)?;
            let mut schema = t.schema().clone();
            let mut seen = HashSet::new();
            for (from, to) in rename_map {
                let i = column(t, from)?;
                if !seen.insert(from) {
                    return Err(Failure::invalid(format!("column {from} renamed twice")).about(from.as_str()));
                }
                schema.columns[i].name = to.clone();
            }
            Ok(replace(state, Table::new(schema, t.rows().to_vec())?))
        }
        Operator::AddNewColumn { table, name, func } => {
            let t = util::table(state, table)?;
            ensure_absent(t, name)?;
            let cells = eval_rows(t, func)?;
            append(state, t, vec![(name.clone(), cells, None)])
        }
        Operator::DropColumn { table, columns: cols } => {
            let t = util::table(state, table)?;
            let drop = columns(t, cols)?;
            let keep: Vec<usize> = (0..t.num_cols()).filter(|i| !drop.contains(i)).collect();
            Ok(replace(state, project(t, &keep)?))
        }
        Operator::SelectColumn { table, columns: cols } => {
            let t = util::table(state, table)?;
            let mut keep = columns(t, cols)?;
            keep.sort_unstable();
            keep.dedup();
            Ok(replace(state, project(t, &keep)?))
        }
        Operator::SplitColumn { table, source, target, func } => {
            let t = util::table(state, table)?;
            let src = column(t, source)?;
            if target.is_empty() {
                return Err(Failure::invalid("no target columns"));
            }
            let mut seen = HashSet::new();
            for name in target {
                if !seen.insert(name) {
                    return Err(Failure::duplicate_column(name));
                }
                if name != source {
                    ensure_absent(t, name)?;
                }
            }
            let parts = eval_rows(t, func)?;
            let width = target.len();
            let mut split = Vec::with_capacity(parts.len());
            for (r, v) in parts.into_iter().enumerate() {
                split.push(match v {
                    Value::Null => vec![Value::Null; width],
                    Value::List(mut items) if items.len() <= width => {
                        items.resize(width, Value::Null);
                        items
                    }
                    Value::List(items) => {
                        return Err(Failure::invalid(format!(
                            "row {r}: split produced {} parts for {width} target columns",
                            items.len()
                        )))
                    }
                    other => {
                        return Err(Failure::type_error(format!(
                            "row {r}: split function returned {}, expected list",
                            other.kind_name()
                        )))
                    }
                });
            }
            let mut names: Vec<String> = Vec::new();
            for (i, c) in t.columns().iter().enumerate() {
                if i == src {
                    names.extend(target.iter().cloned());
                } else {
                    names.push(c.name.clone());
                }
            }
            let rows = t
                .rows()
                .iter()
                .zip(split)
                .map(|(row, parts)| {
                    let mut out = Vec::with_capacity(names.len());
                    out.extend_from_slice(&row[..src]);
                    out.extend(parts);
                    out.extend_from_slice(&row[src + 1..]);
                    out
                })
                .collect();
            let hints: Vec<Option<DType>> = names
                .iter()
                .map(|n| if target.contains(n) { Some(DType::Text) } else { None })
                .collect();
            Ok(replace(state, rebuild_hinted(t, names, rows, &hints)?))
        }
        Operator::Concatenate { table, columns: cols, target, func } => {
            let t = util::table(state, table)?;
            columns(t, cols)?;
            ensure_absent(t, target)?;
            let cells = eval_rows(t, func)?;
            append(state, t, vec![(target.clone(), cells, Some(DType::Text))])
        }
        Operator::Subtitle { table, title, target_col } => {
            let t = util::table(state, table)?;
            ensure_absent(t, target_col)?;
            let cells = vec![Value::Text(title.clone()); t.num_rows()];
            append(state, t, vec![(target_col.clone(), cells, Some(DType::Text))])
        }
        _ => unreachable!("not a schema-editing operator"),
    }
}

fn project(t: &Table, keep: &[usize]) -> Result<Table, Failure> {
    let mut schema = t.schema().clone();
    schema.columns = keep.iter().map(|&i| t.columns()[i].clone()).collect();
    let rows = t.rows().iter().map(|r| keep.iter().map(|&i| r[i].clone()).collect()).collect();
    Ok(Table::new(schema, rows)?)
}

fn append(state: &TableSet, t: &Table, new: Vec<(String, Vec<Value>, Option<DType>)>) -> OpResult {
    let mut names: Vec<String> = t.column_names().into_iter().map(str::to_string).collect();
    let mut hints: Vec<Option<DType>> = vec![None; names.len()];
    let mut rows: Vec<Vec<Value>> = t.rows().to_vec();
    for (name, cells, hint) in new {
        names.push(name);
        hints.push(hint);
        for (row, c) in rows.iter_mut().zip(cells) {
            row.push(c);
        }
    }
    Ok(replace(state, rebuild_hinted(t, names, rows, &hints)?))
}
