//! Row-level expression language used for operator `func` parameters.
//!
//! ```text
//! expr     := or
//! or       := and ("or" and)*
//! and      := cmp ("and" cmp)*
//! cmp      := additive (("==" | "!=" | "<" | "<=" | ">" | ">=") additive)?
//! additive := mult (("+" | "-") mult)*
//! mult     := unary (("*" | "/" | "%") unary)*
//! unary    := ("-" | "not") unary | primary
//! primary  := literal | "col" "(" string ")" | name "(" args ")" | "(" expr ")"
//! ```

mod eval;
mod parse;

use std::fmt;

pub use eval::{eval_expr, EvalError, EvalErrorKind, Row, RowBinding};
pub use parse::{parse_expr, ParseError};

use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

/// Builtin functions. Arity is checked at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    If,
    Lower,
    Upper,
    Trim,
    Concat,
    Split,
    Replace,
    Substr,
    Contains,
    StartsWith,
    EndsWith,
    Length,
    IsNull,
    Coalesce,
    ToInt,
    ToReal,
    ToText,
    At,
    ParseDate,
    FormatDate,
    Abs,
    Round,
}

/// Minimum and maximum argument counts; `None` means variadic.
pub struct Arity(pub usize, pub Option<usize>);

impl Func {
    pub const ALL: [Func; 22] = [
        Func::If,
        Func::Lower,
        Func::Upper,
        Func::Trim,
        Func::Concat,
        Func::Split,
        Func::Replace,
        Func::Substr,
        Func::Contains,
        Func::StartsWith,
        Func::EndsWith,
        Func::Length,
        Func::IsNull,
        Func::Coalesce,
        Func::ToInt,
        Func::ToReal,
        Func::ToText,
        Func::At,
        Func::ParseDate,
        Func::FormatDate,
        Func::Abs,
        Func::Round,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::If => "if",
            Func::Lower => "lower",
            Func::Upper => "upper",
            Func::Trim => "trim",
            Func::Concat => "concat",
            Func::Split => "split",
            Func::Replace => "replace",
            Func::Substr => "substr",
            Func::Contains => "contains",
            Func::StartsWith => "starts_with",
            Func::EndsWith => "ends_with",
            Func::Length => "length",
            Func::IsNull => "is_null",
            Func::Coalesce => "coalesce",
            Func::ToInt => "to_int",
            Func::ToReal => "to_real",
            Func::ToText => "to_text",
            Func::At => "at",
            Func::ParseDate => "parse_date",
            Func::FormatDate => "format_date",
            Func::Abs => "abs",
            Func::Round => "round",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> Arity {
        match self {
            Func::If | Func::Replace | Func::Substr => Arity(3, Some(3)),
            Func::Split
            | Func::Contains
            | Func::StartsWith
            | Func::EndsWith
            | Func::At
            | Func::ParseDate
            | Func::FormatDate => Arity(2, Some(2)),
            Func::Concat | Func::Coalesce => Arity(1, None),
            Func::Round => Arity(1, Some(2)),
            _ => Arity(1, Some(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Col(String),
    /// Scalar literal: null, int, real, text or bool.
    Lit(Value),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn col(name: impl Into<String>) -> Expr {
        Expr::Col(name.into())
    }

    pub fn lit(v: impl Into<Value>) -> Expr {
        Expr::Lit(v.into())
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Column names referenced anywhere in the tree, in first-seen order.
    pub fn columns(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Col(c) => {
                if !out.contains(&c.as_str()) {
                    out.push(c);
                }
            }
            Expr::Lit(_) => {}
            Expr::Unary(_, e) => e.collect_columns(out),
            Expr::Binary(_, l, r) => {
                l.collect_columns(out);
                r.collect_columns(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_columns(out)),
        }
    }
}

pub(crate) fn write_string_literal(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

fn write_literal(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    match v {
        Value::Null => f.write_str("null"),
        Value::Bool(b) => write!(f, "{b}"),
        Value::Int(i) => write!(f, "{i}"),
        // Debug keeps a `.` or exponent so the literal re-lexes as real
        Value::Real(r) => write!(f, "{r:?}"),
        Value::Text(s) => write_string_literal(f, s),
        Value::List(items) => {
            // not producible by the parser; printed for diagnostics only
            f.write_str("[")?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_literal(f, item)?;
            }
            f.write_str("]")
        }
    }
}

/// Canonical, fully parenthesized source form.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Col(c) => {
                f.write_str("col(")?;
                write_string_literal(f, c)?;
                f.write_str(")")
            }
            Expr::Lit(v) => write_literal(f, v),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "-({e})"),
            Expr::Unary(UnaryOp::Not, e) => write!(f, "not ({e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
