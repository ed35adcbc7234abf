//! Tabular data model, row expression language, data-preparation operators,
//! pipelines and reversible task synthesis.

pub mod canon;
pub mod datetime;
pub mod expr;
pub mod io;
pub mod ops;
pub mod pipeline;
pub mod render;
pub mod synthesis;
pub mod table;
pub mod value;

pub use canon::{canonicalize, tables_equal};
pub use render::serialize_table;
pub use table::{ColumnSpec, Schema, Table, TableError, TableSet};
pub use value::{DType, Value};
