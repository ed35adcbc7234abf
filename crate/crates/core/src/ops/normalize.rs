use super::util::{self, column, eval_rows, rebuild_hinted, replace, Failure, OpResult};
use super::{ExecErrorKind, Operator};
use crate::datetime;
use crate::table::{Table, TableSet};
use crate::value::{cast, DType, Value};

pub(super) fn apply(op: &Operator, state: &TableSet) -> OpResult {
    match op {
        Operator::ValueTransform { table, column: col, func } => {
            let t = util::table(state, table)?;
            let i = column(t, col)?;
            let out = eval_rows(t, func)?;
            // null cells are left alone rather than fed to the function
            let cells = t.column_values(i).zip(out).map(|(old, new)| if old.is_null() { Value::Null } else { new });
            set_column(state, t, i, cells.collect(), None)
        }
        Operator::StandardizeDatetime { table, column: col, format } => {
            let t = util::table(state, table)?;
            let i = column(t, col)?;
            datetime::validate_format(format).map_err(Failure::invalid)?;
            let mut cells = Vec::with_capacity(t.num_rows());
            for (r, v) in t.column_values(i).enumerate() {
                cells.push(match v {
                    Value::Null => Value::Null,
                    Value::Text(s) => {
                        let dt = datetime::parse_any(s).ok_or_else(|| {
                            Failure::new(
                                ExecErrorKind::Evaluation,
                                format!("row {r}: cannot parse {s:?} as a date in column {col}"),
                            )
                            .about(col.as_str())
                        })?;
                        Value::Text(datetime::render(&dt, format).map_err(Failure::invalid)?)
                    }
                    other => {
                        return Err(Failure::type_error(format!(
                            "row {r}: column {col} holds {}, expected text",
                            other.kind_name()
                        ))
                        .about(col.as_str()))
                    }
                });
            }
            set_column(state, t, i, cells, Some(DType::Text))
        }
        Operator::CastType { table, column: col, dtype } => {
            let t = util::table(state, table)?;
            let i = column(t, col)?;
            let cells = t
                .column_values(i)
                .enumerate()
                .map(|(r, v)| {
                    cast(v, *dtype).map_err(|e| {
                        Failure::new(ExecErrorKind::TypeError, format!("row {r}: {e}")).about(col.as_str())
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            set_column(state, t, i, cells, Some(*dtype))
        }
        _ => unreachable!("not a normalization operator"),
    }
}

/// Replaces column `i` with `cells`. With `dtype` set, the column takes that
/// dtype; otherwise it is re-inferred, keeping the old dtype if all null.
fn set_column(state: &TableSet, t: &Table, i: usize, cells: Vec<Value>, dtype: Option<DType>) -> OpResult {
    let names: Vec<String> = t.column_names().into_iter().map(str::to_string).collect();
    let rows: Vec<Vec<Value>> = t
        .rows()
        .iter()
        .zip(cells)
        .map(|(r, c)| {
            let mut r = r.clone();
            r[i] = c;
            r
        })
        .collect();
    let table = match dtype {
        Some(d) => {
            let mut schema = t.schema().clone();
            schema.columns[i].dtype = d;
            Table::new(schema, rows)?
        }
        // all-null results keep the old dtype through the source fallback
        None => rebuild_hinted(t, names, rows, &[])?,
    };
    Ok(replace(state, table))
}
