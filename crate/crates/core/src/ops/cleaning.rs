use std::collections::{HashMap, HashSet};

use super::util::{self, column, columns, ensure_absent, eval_rows, is_numeric, rebuild_hinted, replace, Failure, OpResult};
use super::{ExecErrorKind, ImputeMode, Keep, NaHow, Operator, OutlierAction};
use crate::table::{Table, TableSet};
use crate::value::{DType, Value};

pub(super) fn apply(op: &Operator, state: &TableSet) -> OpResult {
    match op {
        Operator::DropNA { table, subset, how } => {
            let t = util::table(state, table)?;
            let idx = key_columns(t, subset)?;
            let rows = t
                .rows()
                .iter()
                .filter(|r| {
                    let nulls = idx.iter().filter(|&&i| r[i].is_null()).count();
                    match how {
                        NaHow::Any => nulls == 0,
                        NaHow::All => idx.is_empty() || nulls < idx.len(),
                    }
                })
                .cloned()
                .collect();
            Ok(replace(state, same_schema(t, rows)?))
        }
        Operator::MissingValueImputation { table, column: col, mode } => {
            let t = util::table(state, table)?;
            let i = column(t, col)?;
            impute(t, i, *mode).map(|t| replace(state, t))
        }
        Operator::Deduplicate { table, subset, keep } => {
            let t = util::table(state, table)?;
            let idx = key_columns(t, subset)?;
            let key = |r: &[Value]| idx.iter().map(|&i| r[i].clone()).collect::<Vec<_>>();
            let mut seen = HashSet::new();
            let mut kept: Vec<usize> = match keep {
                Keep::First => (0..t.num_rows()).filter(|&r| seen.insert(key(&t.rows()[r]))).collect(),
                Keep::Last => (0..t.num_rows()).rev().filter(|&r| seen.insert(key(&t.rows()[r]))).collect(),
            };
            kept.sort_unstable();
            let rows = kept.into_iter().map(|r| t.rows()[r].clone()).collect();
            Ok(replace(state, same_schema(t, rows)?))
        }
        Operator::ErrorDetection { table, column: col, func } => {
            let t = util::table(state, table)?;
            column(t, col)?;
            let flag = format!("{col}_invalid");
            ensure_absent(t, &flag)?;
            let flags = eval_rows(t, func)?;
            if let Some(bad) = flags.iter().position(|v| !matches!(v, Value::Bool(_) | Value::Null)) {
                return Err(Failure::type_error(format!(
                    "row {bad}: predicate returned {}, expected bool",
                    flags[bad].kind_name()
                )));
            }
            append_column(state, t, flag, flags, DType::Bool)
        }
        Operator::OutlierDetection { table, column: col, action } => {
            let t = util::table(state, table)?;
            let i = column(t, col)?;
            if !is_numeric(t, i) {
                return Err(Failure::type_error(format!("column {col} is {}, expected numeric", t.columns()[i].dtype))
                    .about(col.as_str()));
            }
            let flags = outliers(t, i);
            match action {
                OutlierAction::Remove => {
                    let rows = t.rows().iter().zip(&flags).filter(|(_, f)| !**f).map(|(r, _)| r.clone()).collect();
                    Ok(replace(state, same_schema(t, rows)?))
                }
                OutlierAction::Flag => {
                    let name = format!("{col}_outlier");
                    ensure_absent(t, &name)?;
                    append_column(state, t, name, flags.into_iter().map(Value::Bool).collect(), DType::Bool)
                }
            }
        }
        _ => unreachable!("not a cleaning operator"),
    }
}

/// Column indices for `subset`; an empty subset means every column.
fn key_columns(t: &Table, subset: &[String]) -> Result<Vec<usize>, Failure> {
    if subset.is_empty() {
        Ok((0..t.num_cols()).collect())
    } else {
        columns(t, subset)
    }
}

fn same_schema(t: &Table, rows: Vec<Vec<Value>>) -> Result<Table, Failure> {
    Ok(Table::new(t.schema().clone(), rows)?)
}

fn append_column(state: &TableSet, t: &Table, name: String, cells: Vec<Value>, dtype: DType) -> OpResult {
    let mut names: Vec<String> = t.column_names().into_iter().map(str::to_string).collect();
    names.push(name);
    let rows = t
        .rows()
        .iter()
        .zip(cells)
        .map(|(r, c)| {
            let mut r = r.clone();
            r.push(c);
            r
        })
        .collect();
    let mut hints: Vec<Option<DType>> = t.columns().iter().map(|c| Some(c.dtype)).collect();
    hints.push(Some(dtype));
    Ok(replace(state, rebuild_hinted(t, names, rows, &hints)?))
}

fn impute(t: &Table, i: usize, mode: ImputeMode) -> Result<Table, Failure> {
    let name = &t.columns()[i].name;
    let present: Vec<&Value> = t.column_values(i).filter(|v| !v.is_null()).collect();
    if present.is_empty() {
        return Err(Failure::new(ExecErrorKind::EmptyInput, format!("column {name} has no non-null values"))
            .about(name.as_str()));
    }
    if mode != ImputeMode::Mode && !is_numeric(t, i) {
        return Err(Failure::type_error(format!(
            "{mode} imputation needs a numeric column, {name} is {}",
            t.columns()[i].dtype
        ))
        .about(name.as_str()));
    }
    let fill = match mode {
        ImputeMode::Mean => {
            let sum: f64 = present.iter().filter_map(|v| v.as_f64()).sum();
            Value::Real(sum / present.len() as f64)
        }
        ImputeMode::Median => {
            let mut sorted = present.clone();
            sorted.sort();
            sorted[(sorted.len() - 1) / 2].clone()
        }
        ImputeMode::Mode => {
            let mut counts: HashMap<&Value, usize> = HashMap::new();
            for v in &present {
                *counts.entry(v).or_default() += 1;
            }
            let best = counts.values().copied().max().unwrap_or(0);
            counts.into_iter().filter(|(_, c)| *c == best).map(|(v, _)| v).min().cloned().unwrap_or(Value::Null)
        }
    };
    let to_real = mode == ImputeMode::Mean;
    let rows = t
        .rows()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if r[i].is_null() {
                r[i] = fill.clone();
            } else if to_real {
                if let Value::Int(k) = r[i] {
                    r[i] = Value::Real(k as f64);
                }
            }
            r
        })
        .collect();
    let mut schema = t.schema().clone();
    if to_real {
        schema.columns[i].dtype = DType::Real;
    }
    Ok(Table::new(schema, rows)?)
}

/// Cells more than three population standard deviations from the mean.
/// Null cells are never outliers.
fn outliers(t: &Table, i: usize) -> Vec<bool> {
    let xs: Vec<f64> = t.column_values(i).filter_map(Value::as_f64).collect();
    let n = xs.len() as f64;
    let constant = xs.windows(2).all(|w| w[0] == w[1]);
    if xs.is_empty() || constant {
        return vec![false; t.num_rows()];
    }
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    t.column_values(i)
        .map(|v| v.as_f64().is_some_and(|x| (x - mean).abs() > 3.0 * sd))
        .collect()
}
