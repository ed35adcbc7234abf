use std::collections::{HashMap, HashSet};

use super::util::{self, column, columns, eval_rows, is_numeric, replace, Failure, OpResult};
use super::{AggFn, ExecErrorKind, Operator, Stat};
use crate::table::{ColumnSpec, Schema, Table, TableSet};
use crate::value::{DType, Value};

pub(super) fn apply(op: &Operator, state: &TableSet) -> OpResult {
    match op {
        Operator::GroupBy { table, by, agg } => {
            let t = util::table(state, table)?;
            let keys = columns(t, by)?;
            let mut specs: Vec<(usize, AggFn)> = Vec::new();
            for (col, fns) in agg {
                let i = column(t, col)?;
                for f in fns {
                    check_agg(t, i, *f)?;
                    specs.push((i, *f));
                }
            }
            let groups = group_rows(t, &keys);
            let mut names: Vec<String> = by.clone();
            let mut hints: Vec<Option<DType>> = keys.iter().map(|&k| Some(t.columns()[k].dtype)).collect();
            for &(i, f) in &specs {
                names.push(format!("{}_{}", t.columns()[i].name, f));
                hints.push(Some(agg_dtype(t.columns()[i].dtype, f)));
            }
            let mut rows = Vec::with_capacity(groups.len());
            for (key, members) in groups {
                let mut row = key;
                for &(i, f) in &specs {
                    let cells: Vec<&Value> = members.iter().map(|&r| &t.rows()[r][i]).collect();
                    row.push(aggregate(f, t.columns()[i].dtype, &cells)?);
                }
                rows.push(row);
            }
            let out = util::build(table, names, rows, &hints)?;
            Ok(replace(state, out))
        }
        Operator::Count { table } => {
            let t = util::table(state, table)?;
            let schema = Schema::new(table.clone(), vec![ColumnSpec::new("count", DType::Int)]);
            Ok(replace(state, Table::new(schema, vec![vec![Value::Int(t.num_rows() as i64)]])?))
        }
        Operator::CalculateStatistic { table, stat, func } => {
            let t = util::table(state, table)?;
            let values: Vec<Value> = eval_rows(t, func)?.into_iter().filter(|v| !v.is_null()).collect();
            let result = statistic(*stat, &values)?;
            let dtype = result.dtype().unwrap_or(DType::Int);
            let schema = Schema::new(table.clone(), vec![ColumnSpec::new(stat.as_str(), dtype)]);
            Ok(replace(state, Table::new(schema, vec![vec![result]])?))
        }
        _ => unreachable!("not an aggregation operator"),
    }
}

/// Partitions row indices by key, groups in order of first appearance.
/// Null keys group together.
pub(super) fn group_rows(t: &Table, keys: &[usize]) -> Vec<(Vec<Value>, Vec<usize>)> {
    let mut index: HashMap<Vec<Value>, usize> = HashMap::new();
    let mut groups: Vec<(Vec<Value>, Vec<usize>)> = Vec::new();
    for (r, row) in t.rows().iter().enumerate() {
        let key: Vec<Value> = keys.iter().map(|&k| row[k].clone()).collect();
        match index.get(&key) {
            Some(&g) => groups[g].1.push(r),
            None => {
                index.insert(key.clone(), groups.len());
                groups.push((key, vec![r]));
            }
        }
    }
    // no key columns means one group over the whole table, even when empty
    if keys.is_empty() && groups.is_empty() {
        groups.push((Vec::new(), Vec::new()));
    }
    groups
}

pub(super) fn check_agg(t: &Table, i: usize, f: AggFn) -> Result<(), Failure> {
    let numeric_only = matches!(f, AggFn::Sum | AggFn::Avg);
    let col = &t.columns()[i];
    if numeric_only && !is_numeric(t, i) {
        return Err(Failure::type_error(format!("{f} needs a numeric column, {} is {}", col.name, col.dtype))
            .about(col.name.as_str()));
    }
    if f == AggFn::Concat && col.dtype == DType::List {
        return Err(Failure::type_error(format!("concat cannot nest list column {}", col.name)).about(col.name.as_str()));
    }
    Ok(())
}

fn agg_dtype(src: DType, f: AggFn) -> DType {
    match f {
        AggFn::Avg => DType::Real,
        AggFn::Count | AggFn::CountDistinct => DType::Int,
        AggFn::Concat => DType::List,
        _ => src,
    }
}

/// Folds one group's cells. Nulls are skipped by every function.
pub(super) fn aggregate(f: AggFn, dtype: DType, cells: &[&Value]) -> Result<Value, Failure> {
    let present: Vec<&Value> = cells.iter().copied().filter(|v| !v.is_null()).collect();
    Ok(match f {
        AggFn::Sum => sum(&present, dtype == DType::Real)?,
        AggFn::Avg if present.is_empty() => Value::Null,
        AggFn::Avg => {
            let s: f64 = present.iter().filter_map(|v| v.as_f64()).sum();
            Value::Real(s / present.len() as f64)
        }
        AggFn::Min => present.iter().min().map(|v| (*v).clone()).unwrap_or(Value::Null),
        AggFn::Max => present.iter().max().map(|v| (*v).clone()).unwrap_or(Value::Null),
        AggFn::Count => Value::Int(present.len() as i64),
        AggFn::CountDistinct => Value::Int(present.iter().collect::<HashSet<_>>().len() as i64),
        AggFn::First => present.first().map(|v| (*v).clone()).unwrap_or(Value::Null),
        AggFn::Last => present.last().map(|v| (*v).clone()).unwrap_or(Value::Null),
        AggFn::Concat => Value::List(present.into_iter().cloned().collect()),
        AggFn::FirstStrict => match present.as_slice() {
            [] => Value::Null,
            [one] => (*one).clone(),
            _ => {
                return Err(Failure::invalid(format!(
                    "first_strict found {} values for one cell",
                    present.len()
                )))
            }
        },
    })
}

fn sum(values: &[&Value], real: bool) -> Result<Value, Failure> {
    if real || values.iter().any(|v| matches!(v, Value::Real(_))) {
        let mut s = 0.0;
        for v in values {
            s += v.as_f64().ok_or_else(|| Failure::type_error(format!("cannot sum {}", v.kind_name())))?;
        }
        return Value::real(s).map_err(|_| Failure::new(ExecErrorKind::Evaluation, "sum overflowed"));
    }
    let mut s: i64 = 0;
    for v in values {
        let Value::Int(k) = v else {
            return Err(Failure::type_error(format!("cannot sum {}", v.kind_name())));
        };
        s = s.checked_add(*k).ok_or_else(|| Failure::new(ExecErrorKind::Evaluation, "sum overflowed"))?;
    }
    Ok(Value::Int(s))
}

fn statistic(stat: Stat, values: &[Value]) -> Result<Value, Failure> {
    let refs: Vec<&Value> = values.iter().collect();
    if stat != Stat::Sum && values.is_empty() {
        return Err(Failure::new(ExecErrorKind::EmptyInput, format!("{stat} of no values")));
    }
    let numeric = values.iter().all(|v| matches!(v, Value::Int(_) | Value::Real(_)));
    if matches!(stat, Stat::Sum | Stat::Avg) && !numeric {
        return Err(Failure::type_error(format!("{stat} needs numeric values")));
    }
    if !numeric {
        if let Some(w) = values.windows(2).find(|w| w[0].dtype() != w[1].dtype()) {
            return Err(Failure::type_error(format!("cannot compare {} with {}", w[0].kind_name(), w[1].kind_name())));
        }
    }
    Ok(match stat {
        Stat::Sum => sum(&refs, false)?,
        Stat::Avg => aggregate(AggFn::Avg, DType::Real, &refs)?,
        Stat::Min => aggregate(AggFn::Min, DType::Real, &refs)?,
        Stat::Max => aggregate(AggFn::Max, DType::Real, &refs)?,
    })
}
