//! Data-preparation operators: the closed registry, the textual call syntax
//! and the execution engine.
//!
//! Every operator is a pure function from a [`TableSet`] to a new
//! [`TableSet`]. Tables the operator does not touch are carried over as the
//! same shared allocation.

mod aggregate;
mod cleaning;
mod combine;
mod normalize;
mod reshape;
mod rows;
mod schema_edit;
pub mod script;
mod syntax;
mod util;

use std::fmt;
use std::sync::Arc;

pub use script::{ScriptBackend, ScriptError, SubprocessBackend};
pub use syntax::{parse_operator_call, parse_operator_sequence, OpParseError};

use crate::expr::Expr;
use crate::table::TableSet;
use crate::value::DType;

macro_rules! str_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            pub fn parse(s: &str) -> Option<$name> {
                match s { $($text => Some($name::$variant),)+ _ => None }
            }

            pub fn choices() -> String {
                [$($text),+].join("|")
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

str_enum!(NaHow { Any => "any", All => "all" });
str_enum!(ImputeMode { Mean => "mean", Median => "median", Mode => "mode" });
str_enum!(Keep { First => "first", Last => "last" });
str_enum!(OutlierAction { Remove => "remove", Flag => "flag" });
str_enum!(Stat { Sum => "sum", Avg => "avg", Min => "min", Max => "max" });
str_enum!(JoinHow { Inner => "inner", Left => "left", Right => "right", Outer => "outer" });
str_enum!(UnionHow { All => "all", Distinct => "distinct" });
str_enum!(
    /// Aggregation functions shared by GroupBy and Pivot. `first_strict`
    /// is only meaningful for Pivot, where it rejects duplicate cells.
    AggFn {
        Sum => "sum",
        Avg => "avg",
        Min => "min",
        Max => "max",
        Count => "count",
        CountDistinct => "count_distinct",
        First => "first",
        Last => "last",
        Concat => "concat",
        FirstStrict => "first_strict",
    }
);

str_enum!(
    /// The closed operator registry.
    OpKind {
        DropNA => "DropNA",
        MissingValueImputation => "MissingValueImputation",
        Deduplicate => "Deduplicate",
        ErrorDetection => "ErrorDetection",
        OutlierDetection => "OutlierDetection",
        ValueTransform => "ValueTransform",
        StandardizeDatetime => "StandardizeDatetime",
        CastType => "CastType",
        RenameColumn => "RenameColumn",
        AddNewColumn => "AddNewColumn",
        DropColumn => "DropColumn",
        SplitColumn => "SplitColumn",
        Concatenate => "Concatenate",
        SelectColumn => "SelectColumn",
        Subtitle => "Subtitle",
        Filter => "Filter",
        Sort => "Sort",
        TopK => "TopK",
        GroupBy => "GroupBy",
        Count => "Count",
        CalculateStatistic => "CalculateStatistic",
        Join => "Join",
        Union => "Union",
        Append => "Append",
        Pivot => "Pivot",
        Stack => "Stack",
        WideToLong => "WideToLong",
        Transpose => "Transpose",
        Explode => "Explode",
        ExeCode => "ExeCode",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Cleaning,
    Normalization,
    SchemaEditing,
    RowSelection,
    Aggregation,
    Combination,
    Reshaping,
    ProgramSynthesis,
}

impl OpKind {
    /// Positional parameter names.
    pub fn signature(self) -> &'static [&'static str] {
        use OpKind::*;
        match self {
            DropNA => &["table", "subset", "how"],
            MissingValueImputation => &["table", "column", "mode"],
            Deduplicate => &["table", "subset", "keep"],
            ErrorDetection => &["table", "column", "func"],
            OutlierDetection => &["table", "column", "action"],
            ValueTransform => &["table", "column", "func"],
            StandardizeDatetime => &["table", "column", "format"],
            CastType => &["table", "column", "dtype"],
            RenameColumn => &["table", "rename_map"],
            AddNewColumn => &["table", "name", "func"],
            DropColumn => &["table", "columns"],
            SplitColumn => &["table", "source", "target", "func"],
            Concatenate => &["table", "columns", "target", "func"],
            SelectColumn => &["table", "columns"],
            Subtitle => &["table", "title", "target_col"],
            Filter => &["table", "func"],
            Sort => &["table", "by", "ascending"],
            TopK => &["table", "k"],
            GroupBy => &["table", "by", "agg"],
            Count => &["table"],
            CalculateStatistic => &["table", "stat", "func"],
            Join => &["left", "right", "on", "how"],
            Union => &["tables", "how"],
            Append => &["table", "other"],
            Pivot => &["table", "index", "columns", "values", "aggfunc"],
            Stack => &["table", "id_vars", "value_vars"],
            WideToLong => &["table", "stubnames", "i", "j"],
            Transpose => &["table"],
            Explode => &["table", "column"],
            ExeCode => &["tables", "target", "func"],
        }
    }

    pub fn category(self) -> Category {
        use OpKind::*;
        match self {
            DropNA | MissingValueImputation | Deduplicate | ErrorDetection | OutlierDetection => Category::Cleaning,
            ValueTransform | StandardizeDatetime | CastType => Category::Normalization,
            RenameColumn | AddNewColumn | DropColumn | SplitColumn | Concatenate | SelectColumn | Subtitle => {
                Category::SchemaEditing
            }
            Filter | Sort | TopK => Category::RowSelection,
            GroupBy | Count | CalculateStatistic => Category::Aggregation,
            Join | Union | Append => Category::Combination,
            Pivot | Stack | WideToLong | Transpose | Explode => Category::Reshaping,
            ExeCode => Category::ProgramSynthesis,
        }
    }
}

/// Sort direction: one flag for every key, or one per key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ascending {
    All(bool),
    Each(Vec<bool>),
}

/// An operator type bound to its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    DropNA { table: String, subset: Vec<String>, how: NaHow },
    MissingValueImputation { table: String, column: String, mode: ImputeMode },
    Deduplicate { table: String, subset: Vec<String>, keep: Keep },
    ErrorDetection { table: String, column: String, func: Expr },
    OutlierDetection { table: String, column: String, action: OutlierAction },
    ValueTransform { table: String, column: String, func: Expr },
    StandardizeDatetime { table: String, column: String, format: String },
    CastType { table: String, column: String, dtype: DType },
    RenameColumn { table: String, rename_map: Vec<(String, String)> },
    AddNewColumn { table: String, name: String, func: Expr },
    DropColumn { table: String, columns: Vec<String> },
    SplitColumn { table: String, source: String, target: Vec<String>, func: Expr },
    Concatenate { table: String, columns: Vec<String>, target: String, func: Expr },
    SelectColumn { table: String, columns: Vec<String> },
    Subtitle { table: String, title: String, target_col: String },
    Filter { table: String, func: Expr },
    Sort { table: String, by: Vec<String>, ascending: Ascending },
    TopK { table: String, k: i64 },
    GroupBy { table: String, by: Vec<String>, agg: Vec<(String, Vec<AggFn>)> },
    Count { table: String },
    CalculateStatistic { table: String, stat: Stat, func: Expr },
    Join { left: String, right: String, on: Vec<String>, how: JoinHow },
    Union { tables: Vec<String>, how: UnionHow },
    Append { table: String, other: String },
    Pivot { table: String, index: Vec<String>, columns: String, values: String, aggfunc: AggFn },
    Stack { table: String, id_vars: Vec<String>, value_vars: Vec<String> },
    WideToLong { table: String, stubnames: Vec<String>, i: Vec<String>, j: String },
    Transpose { table: String },
    Explode { table: String, column: String },
    /// `func` is script source handed to the configured [`ScriptBackend`].
    ExeCode { tables: Vec<String>, target: String, func: String },
}

impl Operator {
    pub fn kind(&self) -> OpKind {
        use Operator as O;
        match self {
            O::DropNA { .. } => OpKind::DropNA,
            O::MissingValueImputation { .. } => OpKind::MissingValueImputation,
            O::Deduplicate { .. } => OpKind::Deduplicate,
            O::ErrorDetection { .. } => OpKind::ErrorDetection,
            O::OutlierDetection { .. } => OpKind::OutlierDetection,
            O::ValueTransform { .. } => OpKind::ValueTransform,
            O::StandardizeDatetime { .. } => OpKind::StandardizeDatetime,
            O::CastType { .. } => OpKind::CastType,
            O::RenameColumn { .. } => OpKind::RenameColumn,
            O::AddNewColumn { .. } => OpKind::AddNewColumn,
            O::DropColumn { .. } => OpKind::DropColumn,
            O::SplitColumn { .. } => OpKind::SplitColumn,
            O::Concatenate { .. } => OpKind::Concatenate,
            O::SelectColumn { .. } => OpKind::SelectColumn,
            O::Subtitle { .. } => OpKind::Subtitle,
            O::Filter { .. } => OpKind::Filter,
            O::Sort { .. } => OpKind::Sort,
            O::TopK { .. } => OpKind::TopK,
            O::GroupBy { .. } => OpKind::GroupBy,
            O::Count { .. } => OpKind::Count,
            O::CalculateStatistic { .. } => OpKind::CalculateStatistic,
            O::Join { .. } => OpKind::Join,
            O::Union { .. } => OpKind::Union,
            O::Append { .. } => OpKind::Append,
            O::Pivot { .. } => OpKind::Pivot,
            O::Stack { .. } => OpKind::Stack,
            O::WideToLong { .. } => OpKind::WideToLong,
            O::Transpose { .. } => OpKind::Transpose,
            O::Explode { .. } => OpKind::Explode,
            O::ExeCode { .. } => OpKind::ExeCode,
        }
    }

    /// Tables the operator reads.
    pub fn input_tables(&self) -> Vec<&str> {
        use Operator as O;
        match self {
            O::Join { left, right, .. } => vec![left.as_str(), right.as_str()],
            O::Union { tables, .. } | O::ExeCode { tables, .. } => tables.iter().map(String::as_str).collect(),
            O::Append { table, other } => vec![table.as_str(), other.as_str()],
            O::DropNA { table, .. }
            | O::MissingValueImputation { table, .. }
            | O::Deduplicate { table, .. }
            | O::ErrorDetection { table, .. }
            | O::OutlierDetection { table, .. }
            | O::ValueTransform { table, .. }
            | O::StandardizeDatetime { table, .. }
            | O::CastType { table, .. }
            | O::RenameColumn { table, .. }
            | O::AddNewColumn { table, .. }
            | O::DropColumn { table, .. }
            | O::SplitColumn { table, .. }
            | O::Concatenate { table, .. }
            | O::SelectColumn { table, .. }
            | O::Subtitle { table, .. }
            | O::Filter { table, .. }
            | O::Sort { table, .. }
            | O::TopK { table, .. }
            | O::GroupBy { table, .. }
            | O::Count { table }
            | O::CalculateStatistic { table, .. }
            | O::Pivot { table, .. }
            | O::Stack { table, .. }
            | O::WideToLong { table, .. }
            | O::Transpose { table }
            | O::Explode { table, .. } => vec![table.as_str()],
        }
    }

    /// Name of the table the operator produces.
    pub fn output_table(&self) -> String {
        use Operator as O;
        match self {
            O::Join { left, right, .. } => format!("{left}_{right}_join"),
            O::Union { tables, .. } => tables.first().cloned().unwrap_or_default(),
            O::Pivot { table, .. } => format!("{table}_pivot"),
            O::Stack { table, .. } => format!("{table}_stack"),
            O::WideToLong { table, .. } => format!("{table}_long"),
            O::Transpose { table } => format!("{table}_transpose"),
            O::ExeCode { target, .. } => target.clone(),
            other => other.input_tables()[0].to_string(),
        }
    }

    /// Pre-existing columns named by the parameters, excluding names the
    /// operator creates and columns referenced only inside expressions.
    pub fn referenced_columns(&self) -> Vec<&str> {
        fn v(xs: &[String]) -> Vec<&str> {
            xs.iter().map(String::as_str).collect()
        }
        use Operator as O;
        match self {
            O::DropNA { subset, .. } | O::Deduplicate { subset, .. } => v(subset),
            O::MissingValueImputation { column, .. }
            | O::ErrorDetection { column, .. }
            | O::OutlierDetection { column, .. }
            | O::ValueTransform { column, .. }
            | O::StandardizeDatetime { column, .. }
            | O::CastType { column, .. }
            | O::Explode { column, .. } => vec![column.as_str()],
            O::RenameColumn { rename_map, .. } => rename_map.iter().map(|(k, _)| k.as_str()).collect(),
            O::DropColumn { columns, .. } | O::SelectColumn { columns, .. } | O::Concatenate { columns, .. } => {
                v(columns)
            }
            O::SplitColumn { source, .. } => vec![source.as_str()],
            O::Sort { by, .. } => v(by),
            O::GroupBy { by, agg, .. } => {
                let mut out = v(by);
                out.extend(agg.iter().map(|(c, _)| c.as_str()));
                out
            }
            O::Join { on, .. } => v(on),
            O::Pivot { index, columns, values, .. } => {
                let mut out = v(index);
                out.push(columns);
                out.push(values);
                out
            }
            O::Stack { id_vars, value_vars, .. } => {
                let mut out = v(id_vars);
                out.extend(v(value_vars));
                out
            }
            O::WideToLong { i, .. } => v(i),
            _ => Vec::new(),
        }
    }

    /// Row expressions carried in the parameters.
    pub fn expressions(&self) -> Vec<&Expr> {
        use Operator as O;
        match self {
            O::ErrorDetection { func, .. }
            | O::ValueTransform { func, .. }
            | O::AddNewColumn { func, .. }
            | O::SplitColumn { func, .. }
            | O::Concatenate { func, .. }
            | O::Filter { func, .. }
            | O::CalculateStatistic { func, .. } => vec![func],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        syntax::write_call(f, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecErrorKind {
    MissingTable,
    MissingColumn,
    DuplicateColumn,
    TypeError,
    Evaluation,
    EmptyInput,
    InvalidArgument,
    Backend,
}

/// A failed operator execution.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct ExecError {
    pub operator: Operator,
    pub kind: ExecErrorKind,
    /// Full human-readable description.
    pub message: String,
    /// Short cause, e.g. `missing column x`.
    pub detail: String,
    /// The offending identifier, when there is one.
    pub subject: Option<String>,
}

/// Executes operators. The default engine has no script backend, so
/// `ExeCode` fails with `backend disabled`.
#[derive(Clone, Default)]
pub struct Engine {
    script: Option<Arc<dyn ScriptBackend>>,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine").field("script_backend", &self.script.is_some()).finish()
    }
}

impl Engine {
    pub fn new() -> Self {
        Engine::default()
    }

    pub fn with_script_backend(backend: Arc<dyn ScriptBackend>) -> Self {
        Engine { script: Some(backend) }
    }

    pub fn execute(&self, op: &Operator, state: &TableSet) -> Result<TableSet, ExecError> {
        let result = match op.kind().category() {
            Category::Cleaning => cleaning::apply(op, state),
            Category::Normalization => normalize::apply(op, state),
            Category::SchemaEditing => schema_edit::apply(op, state),
            Category::RowSelection => rows::apply(op, state),
            Category::Aggregation => aggregate::apply(op, state),
            Category::Combination => combine::apply(op, state),
            Category::Reshaping => reshape::apply(op, state),
            Category::ProgramSynthesis => script::apply(self.script.as_deref(), op, state),
        };
        result.map_err(|f| f.into_exec_error(op))
    }
}

/// Executes with the default engine.
pub fn execute_operator(op: &Operator, state: &TableSet) -> Result<TableSet, ExecError> {
    Engine::default().execute(op, state)
}
