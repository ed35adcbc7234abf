//! Tables, schemas and table sets.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::value::{DType, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub dtype: DType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, dtype: DType) -> Self {
        ColumnSpec { name: name.into(), dtype, description: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub table_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(table_name: impl Into<String>, columns: Vec<ColumnSpec>) -> Self {
        Schema { table_name: table_name.into(), description: None, columns }
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn validate(&self) -> Result<(), TableError> {
        let mut seen = HashSet::new();
        for c in &self.columns {
            if c.name.is_empty() {
                return Err(TableError::EmptyColumnName);
            }
            if !seen.insert(c.name.as_str()) {
                return Err(TableError::DuplicateColumn(c.name.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("empty column name")]
    EmptyColumnName,
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("column {column:?} row {row}: {found} value in {expected} column")]
    TypeMismatch { column: String, row: usize, expected: DType, found: &'static str },
    #[error("column {column:?} row {row}: non-finite real")]
    NonFinite { column: String, row: usize },
    #[error("column {column:?} row {row}: lists may not nest")]
    NestedList { column: String, row: usize },
    #[error("column {column:?} mixes {first} and {second} values")]
    MixedColumn { column: String, first: DType, second: DType },
}

/// An immutable, validated table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Schema,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(schema: Schema, rows: Vec<Vec<Value>>) -> Result<Table, TableError> {
        schema.validate()?;
        let width = schema.columns.len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(TableError::RaggedRow { row: r, expected: width, found: row.len() });
            }
            for (cell, col) in row.iter().zip(&schema.columns) {
                check_cell(cell, col, r)?;
            }
        }
        Ok(Table { schema, rows })
    }

    /// Builds a table inferring each column's dtype from its cells.
    /// All-null columns become `Text`.
    pub fn infer(
        name: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
    ) -> Result<Table, TableError> {
        let hints = vec![None; columns.len()];
        Table::infer_with_hints(name, columns, rows, &hints)
    }

    /// Like [`Table::infer`], but an all-null column takes its hint dtype.
    /// Integer cells in a column that also holds reals are promoted.
    pub fn infer_with_hints(
        name: impl Into<String>,
        columns: Vec<String>,
        mut rows: Vec<Vec<Value>>,
        hints: &[Option<DType>],
    ) -> Result<Table, TableError> {
        let width = columns.len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(TableError::RaggedRow { row: r, expected: width, found: row.len() });
            }
        }
        let mut specs = Vec::with_capacity(width);
        for (j, col) in columns.into_iter().enumerate() {
            let dtype = infer_dtype(&col, rows.iter().map(|r| &r[j]))?
                .or_else(|| hints.get(j).copied().flatten())
                .unwrap_or(DType::Text);
            if dtype == DType::Real {
                for row in rows.iter_mut() {
                    if let Value::Int(i) = row[j] {
                        row[j] = Value::Real(i as f64);
                    }
                }
            }
            specs.push(ColumnSpec::new(col, dtype));
        }
        Table::new(Schema::new(name, specs), rows)
    }

    pub fn empty(schema: Schema) -> Result<Table, TableError> {
        Table::new(schema, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.schema.table_name
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.schema.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.schema.column_names()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.columns.iter().position(|c| c.name == name)
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.schema.columns.len()
    }

    pub fn column_values(&self, idx: usize) -> impl Iterator<Item = &Value> {
        self.rows.iter().map(move |r| &r[idx])
    }

    pub fn with_name(&self, name: impl Into<String>) -> Table {
        let mut t = self.clone();
        t.schema.table_name = name.into();
        t
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Table {
        self.schema.description = Some(description.into());
        self
    }

    pub fn into_parts(self) -> (Schema, Vec<Vec<Value>>) {
        (self.schema, self.rows)
    }
}

fn check_cell(cell: &Value, col: &ColumnSpec, row: usize) -> Result<(), TableError> {
    match cell {
        Value::Null => Ok(()),
        Value::Real(x) if !x.is_finite() => {
            Err(TableError::NonFinite { column: col.name.clone(), row })
        }
        Value::List(items) => {
            if col.dtype != DType::List {
                return Err(TableError::TypeMismatch {
                    column: col.name.clone(),
                    row,
                    expected: col.dtype,
                    found: "list",
                });
            }
            for item in items {
                match item {
                    Value::List(_) => {
                        return Err(TableError::NestedList { column: col.name.clone(), row })
                    }
                    Value::Real(x) if !x.is_finite() => {
                        return Err(TableError::NonFinite { column: col.name.clone(), row })
                    }
                    _ => {}
                }
            }
            Ok(())
        }
        other => {
            if other.dtype() == Some(col.dtype) {
                Ok(())
            } else {
                Err(TableError::TypeMismatch {
                    column: col.name.clone(),
                    row,
                    expected: col.dtype,
                    found: other.kind_name(),
                })
            }
        }
    }
}

/// Common dtype of a run of cells, ignoring nulls. `Int` and `Real` unify to
/// `Real`; any other mix is an error.
pub fn infer_dtype<'a>(
    column: &str,
    cells: impl IntoIterator<Item = &'a Value>,
) -> Result<Option<DType>, TableError> {
    let mut acc: Option<DType> = None;
    for cell in cells {
        let Some(k) = cell.dtype() else { continue };
        acc = Some(match acc {
            None => k,
            Some(a) if a == k => a,
            Some(DType::Int) if k == DType::Real => DType::Real,
            Some(DType::Real) if k == DType::Int => DType::Real,
            Some(a) => {
                return Err(TableError::MixedColumn { column: column.to_string(), first: a, second: k })
            }
        });
    }
    Ok(acc)
}

/// A named collection of tables. Tables are shared by reference so that
/// untouched tables survive an operator as the same allocation.
#[derive(Debug, Clone, Default)]
pub struct TableSet {
    tables: BTreeMap<String, Arc<Table>>,
}

impl TableSet {
    pub fn new() -> Self {
        TableSet::default()
    }

    pub fn from_tables(tables: impl IntoIterator<Item = Table>) -> Self {
        let mut set = TableSet::new();
        for t in tables {
            set.insert(t);
        }
        set
    }

    /// Inserts or replaces the table under its schema name.
    pub fn insert(&mut self, table: Table) {
        self.tables.insert(table.name().to_string(), Arc::new(table));
    }

    pub fn insert_shared(&mut self, table: Arc<Table>) {
        self.tables.insert(table.name().to_string(), table);
    }

    pub fn remove(&mut self, name: &str) -> Option<Arc<Table>> {
        self.tables.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&Table> {
        self.tables.get(name).map(|t| t.as_ref())
    }

    pub fn get_shared(&self, name: &str) -> Option<&Arc<Table>> {
        self.tables.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tables.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Table> {
        self.tables.values().map(|t| t.as_ref())
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Same table names and pairwise [`crate::tables_equal`] contents.
    pub fn equivalent(&self, other: &TableSet) -> bool {
        self.tables.len() == other.tables.len()
            && self.tables.iter().all(|(name, t)| {
                other.get(name).is_some_and(|o| crate::canon::tables_equal(t, o))
            })
    }
}
