use std::cmp::Ordering;

use super::util::{self, columns, eval_rows, replace, Failure, OpResult};
use super::{Ascending, Operator};
use crate::table::{Table, TableSet};
use crate::value::Value;

pub(super) fn apply(op: &Operator, state: &TableSet) -> OpResult {
    match op {
        Operator::Filter { table, func } => {
            let t = util::table(state, table)?;
            let keep = eval_rows(t, func)?;
            let mut rows = Vec::new();
            for (r, (row, k)) in t.rows().iter().zip(keep).enumerate() {
                match k {
                    Value::Bool(true) => rows.push(row.clone()),
                    Value::Bool(false) | Value::Null => {}
                    other => {
                        return Err(Failure::type_error(format!(
                            "row {r}: predicate returned {}, expected bool",
                            other.kind_name()
                        )))
                    }
                }
            }
            Ok(replace(state, Table::new(t.schema().clone(), rows)?))
        }
        Operator::Sort { table, by, ascending } => {
            let t = util::table(state, table)?;
            let keys = columns(t, by)?;
            let dirs = match ascending {
                Ascending::All(a) => vec![*a; keys.len()],
                Ascending::Each(v) if v.len() == keys.len() => v.clone(),
                Ascending::Each(v) => {
                    return Err(Failure::invalid(format!(
                        "{} sort directions for {} sort keys",
                        v.len(),
                        keys.len()
                    )))
                }
            };
            let mut rows = t.rows().to_vec();
            // Vec::sort_by is stable
            rows.sort_by(|a, b| {
                keys.iter()
                    .zip(&dirs)
                    .map(|(&k, &asc)| if asc { a[k].cmp(&b[k]) } else { b[k].cmp(&a[k]) })
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            });
            Ok(replace(state, Table::new(t.schema().clone(), rows)?))
        }
        Operator::TopK { table, k } => {
            let t = util::table(state, table)?;
            if *k < 0 {
                return Err(Failure::invalid(format!("k must be non-negative, got {k}")));
            }
            let n = (*k as usize).min(t.num_rows());
            Ok(replace(state, Table::new(t.schema().clone(), t.rows()[..n].to_vec())?))
        }
        _ => unreachable!("not a row-selection operator"),
    }
}
