//! Markdown rendering of tables for observations.

use std::fmt::Write;

use crate::table::Table;
use crate::value::Value;

fn cell(v: &Value) -> String {
    let s = match v {
        Value::Text(s) => s.clone(),
        other => other.to_string(),
    };
    s.replace('\\', "\\\\").replace('|', "\\|").replace('\n', "\\n").replace('\r', "\\r")
}

/// Renders a header line, a dtype line, the first `sample_rows` rows in
/// stored order and a `rows: N` footer.
pub fn serialize_table(t: &Table, sample_rows: usize) -> String {
    let mut out = String::new();
    let header: Vec<String> = t.columns().iter().map(|c| cell(&Value::text(c.name.as_str()))).collect();
    let dtypes: Vec<&str> = t.columns().iter().map(|c| c.dtype.as_str()).collect();
    line(&mut out, header.iter().map(String::as_str));
    line(&mut out, dtypes.into_iter());
    for row in t.rows().iter().take(sample_rows) {
        let cells: Vec<String> = row.iter().map(cell).collect();
        line(&mut out, cells.iter().map(String::as_str));
    }
    let _ = writeln!(out, "rows: {}", t.num_rows());
    out
}

fn line<'a>(out: &mut String, cells: impl Iterator<Item = &'a str>) {
    out.push('|');
    for c in cells {
        out.push(' ');
        out.push_str(c);
        out.push_str(" |");
    }
    out.push('\n');
}
