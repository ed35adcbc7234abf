//! CSV and JSON-rows table files with optional sidecar schemas.
//!
//! A sidecar lives next to the data file as `<stem>.schema.json` and holds a
//! serialized [`Schema`]. Without one, column dtypes are inferred from the
//! cell text (integer, then real, then boolean, then text) and the table
//! takes the file stem as its name. Empty CSV cells are read as `Null`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value as Json;

use crate::table::{ColumnSpec, Schema, Table, TableError, TableSet};
use crate::value::{DType, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    JsonRows,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" | "jsonl" => Some(Format::JsonRows),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs { path: String, source: std::io::Error },
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("duplicate header {0:?}")]
    DuplicateHeader(String),
    #[error("missing header line")]
    MissingHeader,
    #[error("column {column:?} line {line}: cannot read {text:?} as {dtype}")]
    BadCell { column: String, line: usize, text: String, dtype: DType },
    #[error("header does not match sidecar schema: {0}")]
    SchemaMismatch(String),
    #[error("json rows: {0}")]
    BadJson(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs { path: path.display().to_string(), source }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    path.with_file_name(format!("{stem}.schema.json"))
}

fn stem_name(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string()
}

pub fn read_schema(path: &Path) -> Result<Schema, IoError> {
    let text = fs::read_to_string(path).map_err(fs_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_schema(path: &Path, schema: &Schema) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(schema)?;
    fs::write(path, text + "\n").map_err(fs_err(path))
}

/// Reads a table, honoring a sidecar schema when one exists.
pub fn read_table(path: &Path, format: Format) -> Result<Table, IoError> {
    let sidecar = sidecar_path(path);
    let schema = if sidecar.exists() { Some(read_schema(&sidecar)?) } else { None };
    let text = fs::read_to_string(path).map_err(fs_err(path))?;
    match format {
        Format::Csv => csv_from_str(&stem_name(path), &text, schema.as_ref()),
        Format::JsonRows => json_rows_from_str(&stem_name(path), &text, schema.as_ref()),
    }
}

/// Reads every `.csv`/`.json`/`.jsonl` table in `dir` (sidecars excluded),
/// in file-name order.
pub fn read_table_dir(dir: &Path) -> Result<TableSet, IoError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(fs_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| Format::from_path(p).is_some() && !p.to_string_lossy().ends_with(".schema.json"))
        .collect();
    paths.sort();
    let mut set = TableSet::new();
    for p in paths {
        let format = Format::from_path(&p).expect("filtered above");
        set.insert(read_table(&p, format)?);
    }
    Ok(set)
}

/// Writes the data file and its sidecar schema.
pub fn write_table(path: &Path, table: &Table, format: Format) -> Result<(), IoError> {
    let body = match format {
        Format::Csv => csv_to_string(table)?,
        Format::JsonRows => json_rows_to_string(table)?,
    };
    fs::write(path, body).map_err(fs_err(path))?;
    write_schema(&sidecar_path(path), table.schema())
}

pub fn csv_to_string(table: &Table) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(table.column_names())?;
    for row in table.rows() {
        w.write_record(row.iter().map(Value::render))?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8 for utf-8 input"))
}

pub fn csv_from_str(name: &str, text: &str, schema: Option<&Schema>) -> Result<Table, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(rec) => rec?.iter().map(str::to_string).collect(),
        None => return Err(IoError::MissingHeader),
    };
    check_unique(&header)?;
    let mut raw: Vec<Vec<String>> = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(IoError::Ragged { line: i + 2, expected: header.len(), found: rec.len() });
        }
        raw.push(rec.iter().map(str::to_string).collect());
    }

    match schema {
        Some(schema) => {
            let names = schema.column_names();
            if names != header.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(IoError::SchemaMismatch(format!("file has {header:?}, schema has {names:?}")));
            }
            let mut rows = Vec::with_capacity(raw.len());
            for (i, rec) in raw.iter().enumerate() {
                let mut row = Vec::with_capacity(rec.len());
                for (text, col) in rec.iter().zip(&schema.columns) {
                    row.push(parse_typed(text, col.dtype).ok_or_else(|| IoError::BadCell {
                        column: col.name.clone(),
                        line: i + 2,
                        text: text.clone(),
                        dtype: col.dtype,
                    })?);
                }
                rows.push(row);
            }
            Ok(Table::new(schema.clone(), rows)?)
        }
        None => {
            let dtypes: Vec<DType> =
                (0..header.len()).map(|j| infer_text_column(raw.iter().map(|r| r[j].as_str()))).collect();
            let rows = raw
                .iter()
                .map(|rec| {
                    rec.iter()
                        .zip(&dtypes)
                        .map(|(text, d)| parse_typed(text, *d).expect("inferred dtype parses its own column"))
                        .collect()
                })
                .collect();
            let specs = header.into_iter().zip(dtypes).map(|(h, d)| ColumnSpec::new(h, d)).collect();
            Ok(Table::new(Schema::new(name, specs), rows)?)
        }
    }
}

fn check_unique(header: &[String]) -> Result<(), IoError> {
    let mut seen = std::collections::HashSet::new();
    for h in header {
        if !seen.insert(h.as_str()) {
            return Err(IoError::DuplicateHeader(h.clone()));
        }
    }
    Ok(())
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "True" | "TRUE" => Some(true),
        "false" | "False" | "FALSE" => Some(false),
        _ => None,
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Dtype for a column of raw text cells; empty cells are ignored.
pub fn infer_text_column<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> DType {
    let present = || cells.clone().filter(|s| !s.is_empty());
    if present().next().is_none() {
        DType::Text
    } else if present().all(|s| s.parse::<i64>().is_ok()) {
        DType::Int
    } else if present().all(|s| parse_real(s).is_some()) {
        DType::Real
    } else if present().all(|s| parse_bool(s).is_some()) {
        DType::Bool
    } else {
        DType::Text
    }
}

/// Parses one cell as the given dtype; the empty string is `Null`.
pub fn parse_typed(text: &str, dtype: DType) -> Option<Value> {
    if text.is_empty() {
        return Some(Value::Null);
    }
    Some(match dtype {
        DType::Int => Value::Int(text.parse().ok()?),
        DType::Real => Value::Real(parse_real(text)?),
        DType::Bool => Value::Bool(parse_bool(text)?),
        DType::Text => Value::Text(text.to_string()),
        DType::List => match Value::from_json(&serde_json::from_str(text).ok()?)? {
            v @ Value::List(_) => v,
            _ => return None,
        },
    })
}

pub fn json_rows_to_string(table: &Table) -> Result<String, IoError> {
    let rows: Vec<Json> = table
        .rows()
        .iter()
        .map(|row| {
            let obj = table
                .columns()
                .iter()
                .zip(row)
                .map(|(c, v)| (c.name.clone(), v.to_json()))
                .collect::<serde_json::Map<_, _>>();
            Json::Object(obj)
        })
        .collect();
    Ok(serde_json::to_string_pretty(&Json::Array(rows))? + "\n")
}

pub fn json_rows_from_str(name: &str, text: &str, schema: Option<&Schema>) -> Result<Table, IoError> {
    let json: Json = serde_json::from_str(text)?;
    let Json::Array(items) = json else {
        return Err(IoError::BadJson("top level must be an array of objects".into()));
    };
    let objects = items
        .iter()
        .map(|v| v.as_object().ok_or_else(|| IoError::BadJson("row is not an object".into())))
        .collect::<Result<Vec<_>, _>>()?;

    let columns: Vec<String> = match schema {
        Some(s) => s.column_names().into_iter().map(str::to_string).collect(),
        None => {
            let mut names = std::collections::BTreeSet::new();
            for o in &objects {
                names.extend(o.keys().cloned());
            }
            names.into_iter().collect()
        }
    };
    let mut rows = Vec::with_capacity(objects.len());
    for (i, o) in objects.iter().enumerate() {
        if let Some(extra) = o.keys().find(|k| !columns.contains(k)) {
            return Err(IoError::BadJson(format!("row {i}: unknown column {extra:?}")));
        }
        let mut row = Vec::with_capacity(columns.len());
        for c in &columns {
            let v = o.get(c).unwrap_or(&Json::Null);
            row.push(Value::from_json(v).ok_or_else(|| IoError::BadJson(format!("row {i}: bad value for {c:?}")))?);
        }
        rows.push(row);
    }
    match schema {
        Some(s) => {
            for row in rows.iter_mut() {
                for (cell, col) in row.iter_mut().zip(&s.columns) {
                    if let (DType::Real, Value::Int(i)) = (col.dtype, &*cell) {
                        *cell = Value::Real(*i as f64);
                    }
                }
            }
            Ok(Table::new(s.clone(), rows)?)
        }
        None => Ok(Table::infer(name, columns, rows)?),
    }
}
