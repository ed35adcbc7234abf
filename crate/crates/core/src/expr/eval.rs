use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::{BinOp, Expr, Func, UnaryOp};
use crate::datetime;
use crate::table::ColumnSpec;
use crate::value::{cast, DType, Value};

/// Column lookup for one row.
pub trait RowBinding {
    fn get(&self, column: &str) -> Option<&Value>;
}

/// A borrowed table row.
#[derive(Clone, Copy)]
pub struct Row<'a> {
    pub columns: &'a [ColumnSpec],
    pub values: &'a [Value],
}

impl RowBinding for Row<'_> {
    fn get(&self, column: &str) -> Option<&Value> {
        self.columns.iter().position(|c| c.name == column).map(|i| &self.values[i])
    }
}

impl RowBinding for HashMap<String, Value> {
    fn get(&self, column: &str) -> Option<&Value> {
        HashMap::get(self, column)
    }
}

impl RowBinding for BTreeMap<String, Value> {
    fn get(&self, column: &str) -> Option<&Value> {
        BTreeMap::get(self, column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalErrorKind {
    UnknownColumn(String),
    TypeMismatch(String),
    DivisionByZero,
    CastFailure(String),
    DateParse(String),
    Overflow,
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalErrorKind::UnknownColumn(c) => write!(f, "unknown column {c}"),
            EvalErrorKind::TypeMismatch(m) => write!(f, "type mismatch: {m}"),
            EvalErrorKind::DivisionByZero => f.write_str("division by zero"),
            EvalErrorKind::CastFailure(m) => write!(f, "cast failure: {m}"),
            EvalErrorKind::DateParse(m) => write!(f, "date parse failure: {m}"),
            EvalErrorKind::Overflow => f.write_str("integer overflow"),
        }
    }
}

/// Evaluation failure, carrying the source text of the failing sub-expression.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} in `{expr}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub expr: String,
}

type EvalResult = Result<Value, EvalError>;

fn fail(e: &Expr, kind: EvalErrorKind) -> EvalError {
    EvalError { kind, expr: e.to_string() }
}

fn mismatch(e: &Expr, msg: String) -> EvalError {
    fail(e, EvalErrorKind::TypeMismatch(msg))
}

fn finite(e: &Expr, x: f64) -> EvalResult {
    Value::real(x).map_err(|_| fail(e, EvalErrorKind::Overflow))
}

pub fn eval_expr(e: &Expr, row: &impl RowBinding) -> EvalResult {
    match e {
        Expr::Col(c) => row.get(c).cloned().ok_or_else(|| fail(e, EvalErrorKind::UnknownColumn(c.clone()))),
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Unary(op, inner) => {
            let v = eval_expr(inner, row)?;
            match (op, v) {
                (_, Value::Null) => Ok(Value::Null),
                (UnaryOp::Neg, Value::Int(i)) => i.checked_neg().map(Value::Int).ok_or_else(|| fail(e, EvalErrorKind::Overflow)),
                (UnaryOp::Neg, Value::Real(r)) => Ok(Value::Real(-r)),
                (UnaryOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (op, v) => Err(mismatch(e, format!("cannot apply {op:?} to {}", v.kind_name()))),
            }
        }
        Expr::Binary(op, l, r) => {
            let a = eval_expr(l, row)?;
            let b = eval_expr(r, row)?;
            binary(e, *op, a, b)
        }
        Expr::Call(func, args) => call(e, *func, args, row),
    }
}

fn binary(e: &Expr, op: BinOp, a: Value, b: Value) -> EvalResult {
    use Value::*;
    if matches!(op, BinOp::And | BinOp::Or) {
        let as_logic = |v: &Value| match v {
            Null => Ok(None),
            Bool(x) => Ok(Some(*x)),
            other => Err(mismatch(e, format!("`{}` needs bool operands, got {}", op.symbol(), other.kind_name()))),
        };
        let (x, y) = (as_logic(&a)?, as_logic(&b)?);
        return Ok(match (op, x, y) {
            (BinOp::And, Some(false), _) | (BinOp::And, _, Some(false)) => Bool(false),
            (BinOp::And, Some(true), Some(true)) => Bool(true),
            (BinOp::Or, Some(true), _) | (BinOp::Or, _, Some(true)) => Bool(true),
            (BinOp::Or, Some(false), Some(false)) => Bool(false),
            _ => Null,
        });
    }
    if a.is_null() || b.is_null() {
        return Ok(Null);
    }
    if op.is_comparison() {
        return compare(e, op, &a, &b);
    }
    match (op, &a, &b) {
        (BinOp::Add, Text(x), Text(y)) => Ok(Text(format!("{x}{y}"))),
        (BinOp::Div, _, _) if b.as_f64() == Some(0.0) => Err(fail(e, EvalErrorKind::DivisionByZero)),
        (BinOp::Rem, _, _) if b.as_f64() == Some(0.0) => Err(fail(e, EvalErrorKind::DivisionByZero)),
        (_, Int(x), Int(y)) if op != BinOp::Div => {
            let r = match op {
                BinOp::Add => x.checked_add(*y),
                BinOp::Sub => x.checked_sub(*y),
                BinOp::Mul => x.checked_mul(*y),
                _ => x.checked_rem(*y),
            };
            r.map(Int).ok_or_else(|| fail(e, EvalErrorKind::Overflow))
        }
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => finite(
                e,
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    _ => x % y,
                },
            ),
            _ => Err(mismatch(e, format!("cannot apply `{}` to {} and {}", op.symbol(), a.kind_name(), b.kind_name()))),
        },
    }
}

fn compare(e: &Expr, op: BinOp, a: &Value, b: &Value) -> EvalResult {
    let comparable = matches!(
        (a, b),
        (Value::Int(_) | Value::Real(_), Value::Int(_) | Value::Real(_))
            | (Value::Text(_), Value::Text(_))
            | (Value::Bool(_), Value::Bool(_))
            | (Value::List(_), Value::List(_))
    );
    let ord = a.cmp(b);
    let result = match op {
        BinOp::Eq => return Ok(Value::Bool(comparable && ord.is_eq())),
        BinOp::Ne => return Ok(Value::Bool(!(comparable && ord.is_eq()))),
        _ if !comparable => {
            return Err(mismatch(e, format!("cannot order {} against {}", a.kind_name(), b.kind_name())))
        }
        BinOp::Lt => ord.is_lt(),
        BinOp::Le => ord.is_le(),
        BinOp::Gt => ord.is_gt(),
        _ => ord.is_ge(),
    };
    Ok(Value::Bool(result))
}

fn text_arg<'v>(e: &Expr, f: Func, v: &'v Value) -> Result<&'v str, EvalError> {
    v.as_str().ok_or_else(|| mismatch(e, format!("{} expects text, got {}", f.name(), v.kind_name())))
}

fn int_arg(e: &Expr, f: Func, v: &Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(i) => Ok(*i),
        other => Err(mismatch(e, format!("{} expects an integer, got {}", f.name(), other.kind_name()))),
    }
}

fn call(e: &Expr, f: Func, args: &[Expr], row: &impl RowBinding) -> EvalResult {
    // lazy forms first
    match f {
        Func::If => {
            return match eval_expr(&args[0], row)? {
                Value::Bool(true) => eval_expr(&args[1], row),
                Value::Bool(false) | Value::Null => eval_expr(&args[2], row),
                other => Err(mismatch(e, format!("if condition must be bool, got {}", other.kind_name()))),
            }
        }
        Func::Coalesce => {
            for a in args {
                let v = eval_expr(a, row)?;
                if !v.is_null() {
                    return Ok(v);
                }
            }
            return Ok(Value::Null);
        }
        Func::IsNull => return Ok(Value::Bool(eval_expr(&args[0], row)?.is_null())),
        _ => {}
    }

    let vals = args.iter().map(|a| eval_expr(a, row)).collect::<Result<Vec<_>, _>>()?;
    if vals.iter().any(Value::is_null) {
        return Ok(Value::Null);
    }
    let v0 = &vals[0];
    Ok(match f {
        Func::Lower => Value::Text(text_arg(e, f, v0)?.to_lowercase()),
        Func::Upper => Value::Text(text_arg(e, f, v0)?.to_uppercase()),
        Func::Trim => Value::Text(text_arg(e, f, v0)?.trim().to_string()),
        Func::Concat => {
            let mut out = String::new();
            for v in &vals {
                if matches!(v, Value::List(_)) {
                    return Err(mismatch(e, "concat expects scalars".into()));
                }
                out.push_str(&v.render());
            }
            Value::Text(out)
        }
        Func::Split => {
            let s = text_arg(e, f, v0)?;
            let sep = text_arg(e, f, &vals[1])?;
            if sep.is_empty() {
                return Err(mismatch(e, "split separator is empty".into()));
            }
            Value::List(s.split(sep).map(Value::text).collect())
        }
        Func::Replace => {
            let s = text_arg(e, f, v0)?;
            let from = text_arg(e, f, &vals[1])?;
            let to = text_arg(e, f, &vals[2])?;
            if from.is_empty() {
                return Err(mismatch(e, "replace pattern is empty".into()));
            }
            Value::Text(s.replace(from, to))
        }
        Func::Substr => {
            let s = text_arg(e, f, v0)?;
            let start = int_arg(e, f, &vals[1])?;
            let len = int_arg(e, f, &vals[2])?;
            if start < 0 || len < 0 {
                return Err(mismatch(e, "substr bounds must be non-negative".into()));
            }
            Value::Text(s.chars().skip(start as usize).take(len as usize).collect())
        }
        Func::Contains => match v0 {
            Value::List(items) => Value::Bool(items.contains(&vals[1])),
            _ => Value::Bool(text_arg(e, f, v0)?.contains(text_arg(e, f, &vals[1])?)),
        },
        Func::StartsWith => Value::Bool(text_arg(e, f, v0)?.starts_with(text_arg(e, f, &vals[1])?)),
        Func::EndsWith => Value::Bool(text_arg(e, f, v0)?.ends_with(text_arg(e, f, &vals[1])?)),
        Func::Length => match v0 {
            Value::List(items) => Value::Int(items.len() as i64),
            _ => Value::Int(text_arg(e, f, v0)?.chars().count() as i64),
        },
        Func::ToInt | Func::ToReal | Func::ToText => {
            let to = match f {
                Func::ToInt => DType::Int,
                Func::ToReal => DType::Real,
                _ => DType::Text,
            };
            cast(v0, to).map_err(|m| fail(e, EvalErrorKind::CastFailure(m)))?
        }
        Func::At => {
            let Value::List(items) = v0 else {
                return Err(mismatch(e, format!("at expects a list, got {}", v0.kind_name())));
            };
            let i = int_arg(e, f, &vals[1])?;
            let idx = if i < 0 { items.len() as i64 + i } else { i };
            usize::try_from(idx).ok().and_then(|i| items.get(i)).cloned().unwrap_or(Value::Null)
        }
        Func::ParseDate => {
            let s = text_arg(e, f, v0)?;
            let fmt = text_arg(e, f, &vals[1])?;
            datetime::validate_format(fmt).map_err(|m| fail(e, EvalErrorKind::DateParse(m)))?;
            let (dt, has_time) = datetime::parse_with(s, fmt)
                .ok_or_else(|| fail(e, EvalErrorKind::DateParse(format!("{s:?} does not match {fmt:?}"))))?;
            Value::Text(datetime::to_iso(&dt, has_time))
        }
        Func::FormatDate => {
            let s = text_arg(e, f, v0)?;
            let fmt = text_arg(e, f, &vals[1])?;
            let dt = datetime::from_iso(s)
                .ok_or_else(|| fail(e, EvalErrorKind::DateParse(format!("{s:?} is not an ISO date"))))?;
            Value::Text(datetime::render(&dt, fmt).map_err(|m| fail(e, EvalErrorKind::DateParse(m)))?)
        }
        Func::Abs => match v0 {
            Value::Int(i) => Value::Int(i.checked_abs().ok_or_else(|| fail(e, EvalErrorKind::Overflow))?),
            Value::Real(r) => Value::Real(r.abs()),
            other => return Err(mismatch(e, format!("abs expects a number, got {}", other.kind_name()))),
        },
        Func::Round => {
            let digits = match vals.get(1) {
                Some(v) => int_arg(e, f, v)?,
                None => 0,
            };
            match v0 {
                Value::Int(i) => Value::Int(*i),
                Value::Real(r) => {
                    let scale = 10f64.powi(digits.clamp(-300, 300) as i32);
                    finite(e, (r * scale).round() / scale)?
                }
                other => return Err(mismatch(e, format!("round expects a number, got {}", other.kind_name()))),
            }
        }
        Func::If | Func::Coalesce | Func::IsNull => unreachable!("handled above"),
    })
}
