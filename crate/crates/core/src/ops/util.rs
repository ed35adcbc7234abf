use std::sync::Arc;

use super::{ExecError, ExecErrorKind, Operator};
use crate::expr::{eval_expr, EvalErrorKind, Expr, Row};
use crate::table::{Table, TableError, TableSet};
use crate::value::{DType, Value};

/// Error raised inside an operator body, before it is tied to the operator.
#[derive(Debug)]
pub(crate) struct Failure {
    pub kind: ExecErrorKind,
    pub detail: String,
    pub subject: Option<String>,
}

impl Failure {
    pub fn new(kind: ExecErrorKind, detail: impl Into<String>) -> Self {
        Failure { kind, detail: detail.into(), subject: None }
    }

    pub fn about(mut self, subject: impl Into<String>) -> Self {
        self.subject = Some(subject.into());
        self
    }

    pub fn missing_table(name: &str) -> Self {
        Failure::new(ExecErrorKind::MissingTable, format!("missing table {name}")).about(name)
    }

    pub fn missing_column(name: &str) -> Self {
        Failure::new(ExecErrorKind::MissingColumn, format!("missing column {name}")).about(name)
    }

    pub fn duplicate_column(name: &str) -> Self {
        Failure::new(ExecErrorKind::DuplicateColumn, format!("column {name} already exists")).about(name)
    }

    pub fn type_error(detail: impl Into<String>) -> Self {
        Failure::new(ExecErrorKind::TypeError, detail)
    }

    pub fn invalid(detail: impl Into<String>) -> Self {
        Failure::new(ExecErrorKind::InvalidArgument, detail)
    }

    pub fn into_exec_error(self, op: &Operator) -> ExecError {
        ExecError {
            message: format!("{} failed on {}: {}", op.kind(), op.input_tables().join(", "), self.detail),
            operator: op.clone(),
            kind: self.kind,
            detail: self.detail,
            subject: self.subject,
        }
    }
}

impl From<TableError> for Failure {
    fn from(e: TableError) -> Self {
        match e {
            TableError::DuplicateColumn(c) => Failure::duplicate_column(&c),
            TableError::EmptyColumnName => Failure::invalid("empty column name"),
            other => Failure::type_error(other.to_string()),
        }
    }
}

pub(crate) type OpResult = Result<TableSet, Failure>;

pub(crate) fn table<'a>(state: &'a TableSet, name: &str) -> Result<&'a Arc<Table>, Failure> {
    state.get_shared(name).ok_or_else(|| Failure::missing_table(name))
}

pub(crate) fn column(t: &Table, name: &str) -> Result<usize, Failure> {
    t.column_index(name).ok_or_else(|| Failure::missing_column(name))
}

pub(crate) fn columns(t: &Table, names: &[String]) -> Result<Vec<usize>, Failure> {
    names.iter().map(|n| column(t, n)).collect()
}

pub(crate) fn ensure_absent(t: &Table, name: &str) -> Result<(), Failure> {
    if t.column_index(name).is_some() {
        Err(Failure::duplicate_column(name))
    } else {
        Ok(())
    }
}

pub(crate) fn is_numeric(t: &Table, idx: usize) -> bool {
    matches!(t.columns()[idx].dtype, DType::Int | DType::Real)
}

/// Returns `state` with `table` stored under its own name.
pub(crate) fn replace(state: &TableSet, table: Table) -> TableSet {
    let mut next = state.clone();
    next.insert(table);
    next
}

/// Stores a derived table under a fresh name, refusing to overwrite a table
/// that is not among the operator's inputs.
pub(crate) fn store_derived(state: &TableSet, table: Table, inputs: &[&str], consume: &[&str]) -> OpResult {
    let name = table.name().to_string();
    if state.contains(&name) && !inputs.contains(&name.as_str()) {
        return Err(Failure::invalid(format!("output table {name} already exists")).about(name));
    }
    let mut next = state.clone();
    for c in consume {
        next.remove(c);
    }
    next.insert(table);
    Ok(next)
}

/// Builds a table, inferring dtypes and falling back to `hints` for
/// all-null columns.
pub(crate) fn build(
    name: &str,
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
    hints: &[Option<DType>],
) -> Result<Table, Failure> {
    Ok(Table::infer_with_hints(name, columns, rows, hints)?)
}

/// Like [`build`] but keeps the given source descriptions for columns whose
/// names survive.
pub(crate) fn rebuild(src: &Table, columns: Vec<String>, rows: Vec<Vec<Value>>) -> Result<Table, Failure> {
    rebuild_hinted(src, columns, rows, &[])
}

/// [`rebuild`] with explicit dtype hints for new columns; a missing hint
/// falls back to the source column of the same name.
pub(crate) fn rebuild_hinted(
    src: &Table,
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
    hints: &[Option<DType>],
) -> Result<Table, Failure> {
    let hints: Vec<Option<DType>> = columns
        .iter()
        .enumerate()
        .map(|(j, c)| hints.get(j).copied().flatten().or_else(|| src.column_index(c).map(|i| src.columns()[i].dtype)))
        .collect();
    let t = build(src.name(), columns, rows, &hints)?;
    let (mut schema, rows) = t.into_parts();
    schema.description = src.schema().description.clone();
    for spec in schema.columns.iter_mut() {
        if let Some(i) = src.column_index(&spec.name) {
            spec.description = src.columns()[i].description.clone();
        }
    }
    Ok(Table::new(schema, rows)?)
}

pub(crate) fn check_expr_columns(t: &Table, e: &Expr) -> Result<(), Failure> {
    for c in e.columns() {
        column(t, c)?;
    }
    Ok(())
}

/// Evaluates `e` on every row.
pub(crate) fn eval_rows(t: &Table, e: &Expr) -> Result<Vec<Value>, Failure> {
    check_expr_columns(t, e)?;
    t.rows()
        .iter()
        .enumerate()
        .map(|(i, values)| {
            eval_expr(e, &Row { columns: t.columns(), values }).map_err(|err| {
                let kind = match err.kind {
                    EvalErrorKind::UnknownColumn(_) => ExecErrorKind::MissingColumn,
                    EvalErrorKind::TypeMismatch(_) => ExecErrorKind::TypeError,
                    _ => ExecErrorKind::Evaluation,
                };
                Failure::new(kind, format!("row {i}: {err}"))
            })
        })
        .collect()
}
