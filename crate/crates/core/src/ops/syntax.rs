//! Operator call syntax: `Kind(arg, ...)`.
//!
//! Arguments are positional and must match the signature exactly. An
//! argument is a string (double or single quoted), a bare identifier (read
//! as a string), a number, `true`/`false`/`null`, a list `[a, b]` or a map
//! `{key: value}`. Expression parameters are strings holding DSL source and
//! are parsed as soon as the call is read.

use std::fmt;

use super::{AggFn, Ascending, ImputeMode, JoinHow, Keep, NaHow, OpKind, Operator, OutlierAction, Stat, UnionHow};
use crate::expr::{parse_expr, write_string_literal, Expr, ParseError};
use crate::value::DType;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OpParseError {
    #[error("syntax error at offset {pos}: expected {expected}, found {found}")]
    Syntax { pos: usize, expected: String, found: String },
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("{kind} expects {expected} argument(s) ({}), got {found}", kind.signature().join(", "))]
    Arity { kind: OpKind, expected: usize, found: usize },
    #[error("{kind}: parameter `{param}` expects {expected}, got {found}")]
    BadArgument { kind: OpKind, param: &'static str, expected: String, found: String },
    #[error("{kind}: parameter `{param}` is not a valid expression: {source}")]
    Expr { kind: OpKind, param: &'static str, source: ParseError },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Str(String),
    Ident(String),
    Int(i64),
    Real(f64),
    Punct(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Real(r) => write!(f, "{r}"),
            Tok::Punct(c) => write!(f, "`{c}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn syntax(pos: usize, expected: &str, found: impl fmt::Display) -> OpParseError {
    OpParseError::Syntax { pos, expected: expected.to_string(), found: found.to_string() }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, OpParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = src[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        if "()[]{},:;".contains(c) {
            out.push((start, Tok::Punct(c)));
            i += 1;
        } else if c == '"' || c == '\'' {
            let mut s = String::new();
            i += 1;
            loop {
                let Some(ch) = src[i..].chars().next() else {
                    return Err(syntax(start, "closing quote", "end of input"));
                };
                i += ch.len_utf8();
                if ch == c {
                    break;
                }
                if ch == '\\' {
                    let Some(e) = src[i..].chars().next() else {
                        return Err(syntax(i, "escape", "end of input"));
                    };
                    i += e.len_utf8();
                    s.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        other => other,
                    });
                } else {
                    s.push(ch);
                }
            }
            out.push((start, Tok::Str(s)));
        } else if c.is_ascii_digit() || (c == '-' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let mut real = false;
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                real = true;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    real = true;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let tok = if real {
                Tok::Real(text.parse().map_err(|_| syntax(start, "number", text))?)
            } else {
                Tok::Int(text.parse().map_err(|_| syntax(start, "integer in range", text))?)
            };
            out.push((start, tok));
        } else if c.is_alphabetic() || c == '_' {
            while let Some(ch) = src[i..].chars().next() {
                if ch.is_alphanumeric() || ch == '_' {
                    i += ch.len_utf8();
                } else {
                    break;
                }
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            return Err(syntax(start, "argument", format!("`{c}`")));
        }
    }
    out.push((src.len(), Tok::Eof));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Arg {
    Str(String),
    Ident(String),
    Int(i64),
    Real(f64),
    Bool(bool),
    Null,
    List(Vec<Arg>),
    Map(Vec<(String, Arg)>),
}

impl Arg {
    fn describe(&self) -> String {
        match self {
            Arg::Str(s) => format!("string {s:?}"),
            Arg::Ident(s) => format!("identifier `{s}`"),
            Arg::Int(i) => format!("integer {i}"),
            Arg::Real(r) => format!("number {r}"),
            Arg::Bool(b) => format!("boolean {b}"),
            Arg::Null => "null".to_string(),
            Arg::List(_) => "a list".to_string(),
            Arg::Map(_) => "a map".to_string(),
        }
    }

    fn as_string(&self) -> Option<&str> {
        match self {
            Arg::Str(s) | Arg::Ident(s) => Some(s),
            _ => None,
        }
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<(), OpParseError> {
        if *self.peek() == Tok::Punct(c) {
            self.next();
            Ok(())
        } else {
            Err(syntax(self.offset(), &format!("`{c}`"), self.peek()))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn call(&mut self) -> Result<Operator, OpParseError> {
        let name = match self.next() {
            Tok::Ident(name) => name,
            other => return Err(syntax(self.toks[self.pos.saturating_sub(1)].0, "operator name", other)),
        };
        let kind = OpKind::parse(&name).ok_or(OpParseError::UnknownOperator(name))?;
        self.expect('(')?;
        let args = self.sequence(')')?;
        build(kind, args)
    }

    fn sequence(&mut self, close: char) -> Result<Vec<Arg>, OpParseError> {
        let mut items = Vec::new();
        if self.eat(close) {
            return Ok(items);
        }
        loop {
            items.push(self.arg()?);
            if self.eat(close) {
                return Ok(items);
            }
            self.expect(',')?;
            // trailing comma
            if self.eat(close) {
                return Ok(items);
            }
        }
    }

    fn arg(&mut self) -> Result<Arg, OpParseError> {
        let at = self.offset();
        Ok(match self.next() {
            Tok::Str(s) => Arg::Str(s),
            Tok::Int(i) => Arg::Int(i),
            Tok::Real(r) => Arg::Real(r),
            Tok::Ident(s) => match s.as_str() {
                "true" => Arg::Bool(true),
                "false" => Arg::Bool(false),
                "null" => Arg::Null,
                _ => Arg::Ident(s),
            },
            Tok::Punct('[') => Arg::List(self.sequence(']')?),
            Tok::Punct('{') => {
                let mut entries = Vec::new();
                if !self.eat('}') {
                    loop {
                        let key_at = self.offset();
                        let key = match self.next() {
                            Tok::Str(s) | Tok::Ident(s) => s,
                            other => return Err(syntax(key_at, "map key", other)),
                        };
                        self.expect(':')?;
                        entries.push((key, self.arg()?));
                        if self.eat('}') {
                            break;
                        }
                        self.expect(',')?;
                        if self.eat('}') {
                            break;
                        }
                    }
                }
                Arg::Map(entries)
            }
            other => return Err(syntax(at, "argument", other)),
        })
    }
}

/// Parses exactly one operator call.
pub fn parse_operator_call(src: &str) -> Result<Operator, OpParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let op = p.call()?;
    p.eat(';');
    if *p.peek() != Tok::Eof {
        return Err(syntax(p.offset(), "end of input", p.peek()));
    }
    Ok(op)
}

/// Parses calls separated by `;`. An empty input yields an empty sequence.
pub fn parse_operator_sequence(src: &str) -> Result<Vec<Operator>, OpParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let mut ops = Vec::new();
    while *p.peek() != Tok::Eof {
        ops.push(p.call()?);
        if !p.eat(';') && *p.peek() != Tok::Eof {
            return Err(syntax(p.offset(), "`;` or end of input", p.peek()));
        }
    }
    Ok(ops)
}

struct Args {
    kind: OpKind,
    items: Vec<Arg>,
}

impl Args {
    fn bad(&self, i: usize, expected: &str) -> OpParseError {
        OpParseError::BadArgument {
            kind: self.kind,
            param: self.kind.signature()[i],
            expected: expected.to_string(),
            found: self.items[i].describe(),
        }
    }

    fn string(&self, i: usize) -> Result<String, OpParseError> {
        self.items[i].as_string().map(str::to_string).ok_or_else(|| self.bad(i, "a string"))
    }

    /// A list of strings; a lone string is accepted as a one-element list.
    fn strings(&self, i: usize) -> Result<Vec<String>, OpParseError> {
        match &self.items[i] {
            Arg::List(items) => items
                .iter()
                .map(|a| a.as_string().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| self.bad(i, "a list of strings")),
            Arg::Str(s) | Arg::Ident(s) => Ok(vec![s.clone()]),
            _ => Err(self.bad(i, "a list of strings")),
        }
    }

    fn choice<T>(&self, i: usize, parse: fn(&str) -> Option<T>, choices: String) -> Result<T, OpParseError> {
        self.items[i].as_string().and_then(parse).ok_or_else(|| self.bad(i, &format!("one of {choices}")))
    }

    fn expr(&self, i: usize) -> Result<Expr, OpParseError> {
        let src = self.items[i].as_string().ok_or_else(|| self.bad(i, "an expression string"))?;
        parse_expr(src).map_err(|source| OpParseError::Expr { kind: self.kind, param: self.kind.signature()[i], source })
    }

    fn int(&self, i: usize) -> Result<i64, OpParseError> {
        match self.items[i] {
            Arg::Int(k) => Ok(k),
            _ => Err(self.bad(i, "an integer")),
        }
    }

    fn string_map(&self, i: usize) -> Result<Vec<(String, String)>, OpParseError> {
        match &self.items[i] {
            Arg::Map(entries) => entries
                .iter()
                .map(|(k, v)| v.as_string().map(|v| (k.clone(), v.to_string())))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| self.bad(i, "a map of strings")),
            _ => Err(self.bad(i, "a map of strings")),
        }
    }

    fn agg_map(&self, i: usize) -> Result<Vec<(String, Vec<AggFn>)>, OpParseError> {
        let expected = format!("a map from column to function(s) in {}", AggFn::choices());
        let Arg::Map(entries) = &self.items[i] else {
            return Err(self.bad(i, &expected));
        };
        let mut out = Vec::with_capacity(entries.len());
        for (col, v) in entries {
            let names: Vec<&Arg> = match v {
                Arg::List(items) => items.iter().collect(),
                single => vec![single],
            };
            let fns = names
                .into_iter()
                .map(|a| a.as_string().and_then(AggFn::parse).filter(|f| *f != AggFn::FirstStrict))
                .collect::<Option<Vec<_>>>()
                .filter(|fns| !fns.is_empty())
                .ok_or_else(|| self.bad(i, &expected))?;
            out.push((col.clone(), fns));
        }
        Ok(out)
    }

    fn ascending(&self, i: usize) -> Result<Ascending, OpParseError> {
        match &self.items[i] {
            Arg::Bool(b) => Ok(Ascending::All(*b)),
            Arg::List(items) => items
                .iter()
                .map(|a| match a {
                    Arg::Bool(b) => Some(*b),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .map(Ascending::Each)
                .ok_or_else(|| self.bad(i, "a boolean or list of booleans")),
            _ => Err(self.bad(i, "a boolean or list of booleans")),
        }
    }
}

fn build(kind: OpKind, items: Vec<Arg>) -> Result<Operator, OpParseError> {
    let expected = kind.signature().len();
    if items.len() != expected {
        return Err(OpParseError::Arity { kind, expected, found: items.len() });
    }
    let a = Args { kind, items };
    use Operator as O;
    Ok(match kind {
        OpKind::DropNA => O::DropNA {
            table: a.string(0)?,
            subset: a.strings(1)?,
            how: a.choice(2, NaHow::parse, NaHow::choices())?,
        },
        OpKind::MissingValueImputation => O::MissingValueImputation {
            table: a.string(0)?,
            column: a.string(1)?,
            mode: a.choice(2, ImputeMode::parse, ImputeMode::choices())?,
        },
        OpKind::Deduplicate => O::Deduplicate {
            table: a.string(0)?,
            subset: a.strings(1)?,
            keep: a.choice(2, Keep::parse, Keep::choices())?,
        },
        OpKind::ErrorDetection => O::ErrorDetection { table: a.string(0)?, column: a.string(1)?, func: a.expr(2)? },
        OpKind::OutlierDetection => O::OutlierDetection {
            table: a.string(0)?,
            column: a.string(1)?,
            action: a.choice(2, OutlierAction::parse, OutlierAction::choices())?,
        },
        OpKind::ValueTransform => O::ValueTransform { table: a.string(0)?, column: a.string(1)?, func: a.expr(2)? },
        OpKind::StandardizeDatetime => {
            O::StandardizeDatetime { table: a.string(0)?, column: a.string(1)?, format: a.string(2)? }
        }
        OpKind::CastType => O::CastType {
            table: a.string(0)?,
            column: a.string(1)?,
            dtype: a.choice(2, DType::parse, "int|real|text|bool|list".to_string())?,
        },
        OpKind::RenameColumn => O::RenameColumn { table: a.string(0)?, rename_map: a.string_map(1)? },
        OpKind::AddNewColumn => O::AddNewColumn { table: a.string(0)?, name: a.string(1)?, func: a.expr(2)? },
        OpKind::DropColumn => O::DropColumn { table: a.string(0)?, columns: a.strings(1)? },
        OpKind::SplitColumn => O::SplitColumn {
            table: a.string(0)?,
            source: a.string(1)?,
            target: a.strings(2)?,
            func: a.expr(3)?,
        },
        OpKind::Concatenate => O::Concatenate {
            table: a.string(0)?,
            columns: a.strings(1)?,
            target: a.string(2)?,
            func: a.expr(3)?,
        },
        OpKind::SelectColumn => O::SelectColumn { table: a.string(0)?, columns: a.strings(1)? },
        OpKind::Subtitle => O::Subtitle { table: a.string(0)?, title: a.string(1)?, target_col: a.string(2)? },
        OpKind::Filter => O::Filter { table: a.string(0)?, func: a.expr(1)? },
        OpKind::Sort => O::Sort { table: a.string(0)?, by: a.strings(1)?, ascending: a.ascending(2)? },
        OpKind::TopK => O::TopK { table: a.string(0)?, k: a.int(1)? },
        OpKind::GroupBy => O::GroupBy { table: a.string(0)?, by: a.strings(1)?, agg: a.agg_map(2)? },
        OpKind::Count => O::Count { table: a.string(0)? },
        OpKind::CalculateStatistic => O::CalculateStatistic {
            table: a.string(0)?,
            stat: a.choice(1, Stat::parse, Stat::choices())?,
            func: a.expr(2)?,
        },
        OpKind::Join => O::Join {
            left: a.string(0)?,
            right: a.string(1)?,
            on: a.strings(2)?,
            how: a.choice(3, JoinHow::parse, JoinHow::choices())?,
        },
        OpKind::Union => O::Union { tables: a.strings(0)?, how: a.choice(1, UnionHow::parse, UnionHow::choices())? },
        OpKind::Append => O::Append { table: a.string(0)?, other: a.string(1)? },
        OpKind::Pivot => O::Pivot {
            table: a.string(0)?,
            index: a.strings(1)?,
            columns: a.string(2)?,
            values: a.string(3)?,
            aggfunc: a.choice(4, AggFn::parse, AggFn::choices())?,
        },
        OpKind::Stack => O::Stack { table: a.string(0)?, id_vars: a.strings(1)?, value_vars: a.strings(2)? },
        OpKind::WideToLong => O::WideToLong {
            table: a.string(0)?,
            stubnames: a.strings(1)?,
            i: a.strings(2)?,
            j: a.string(3)?,
        },
        OpKind::Transpose => O::Transpose { table: a.string(0)? },
        OpKind::Explode => O::Explode { table: a.string(0)?, column: a.string(1)? },
        OpKind::ExeCode => O::ExeCode { tables: a.strings(0)?, target: a.string(1)?, func: a.string(2)? },
    })
}

enum Out<'a> {
    S(&'a str),
    L(&'a [String]),
    E(&'a Expr),
    I(i64),
    Asc(&'a Ascending),
    M(&'a [(String, String)]),
    Agg(&'a [(String, Vec<AggFn>)]),
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[String]) -> fmt::Result {
    f.write_str("[")?;
    for (i, s) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_string_literal(f, s)?;
    }
    f.write_str("]")
}

fn write_out(f: &mut fmt::Formatter<'_>, out: &Out<'_>) -> fmt::Result {
    match out {
        Out::S(s) => write_string_literal(f, s),
        Out::L(items) => write_list(f, items),
        Out::E(e) => write_string_literal(f, &e.to_string()),
        Out::I(k) => write!(f, "{k}"),
        Out::Asc(Ascending::All(b)) => write!(f, "{b}"),
        Out::Asc(Ascending::Each(bs)) => {
            let parts: Vec<String> = bs.iter().map(bool::to_string).collect();
            write!(f, "[{}]", parts.join(", "))
        }
        Out::M(entries) => {
            f.write_str("{")?;
            for (i, (k, v)) in entries.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_string_literal(f, k)?;
                f.write_str(": ")?;
                write_string_literal(f, v)?;
            }
            f.write_str("}")
        }
        Out::Agg(entries) => {
            f.write_str("{")?;
            for (i, (k, fns)) in entries.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_string_literal(f, k)?;
                f.write_str(": ")?;
                if let [single] = fns.as_slice() {
                    write_string_literal(f, single.as_str())?;
                } else {
                    let names: Vec<String> = fns.iter().map(|a| a.as_str().to_string()).collect();
                    write_list(f, &names)?;
                }
            }
            f.write_str("}")
        }
    }
}

pub(super) fn write_call(f: &mut fmt::Formatter<'_>, op: &Operator) -> fmt::Result {
    use Operator as O;
    use Out::*;
    let args: Vec<Out<'_>> = match op {
        O::DropNA { table, subset, how } => vec![S(table), L(subset), S(how.as_str())],
        O::MissingValueImputation { table, column, mode } => vec![S(table), S(column), S(mode.as_str())],
        O::Deduplicate { table, subset, keep } => vec![S(table), L(subset), S(keep.as_str())],
        O::ErrorDetection { table, column, func } => vec![S(table), S(column), E(func)],
        O::OutlierDetection { table, column, action } => vec![S(table), S(column), S(action.as_str())],
        O::ValueTransform { table, column, func } => vec![S(table), S(column), E(func)],
        O::StandardizeDatetime { table, column, format } => vec![S(table), S(column), S(format)],
        O::CastType { table, column, dtype } => vec![S(table), S(column), S(dtype.as_str())],
        O::RenameColumn { table, rename_map } => vec![S(table), M(rename_map)],
        O::AddNewColumn { table, name, func } => vec![S(table), S(name), E(func)],
        O::DropColumn { table, columns } => vec![S(table), L(columns)],
        O::SplitColumn { table, source, target, func } => vec![S(table), S(source), L(target), E(func)],
        O::Concatenate { table, columns, target, func } => vec![S(table), L(columns), S(target), E(func)],
        O::SelectColumn { table, columns } => vec![S(table), L(columns)],
        O::Subtitle { table, title, target_col } => vec![S(table), S(title), S(target_col)],
        O::Filter { table, func } => vec![S(table), E(func)],
        O::Sort { table, by, ascending } => vec![S(table), L(by), Asc(ascending)],
        O::TopK { table, k } => vec![S(table), I(*k)],
        O::GroupBy { table, by, agg } => vec![S(table), L(by), Agg(agg)],
        O::Count { table } => vec![S(table)],
        O::CalculateStatistic { table, stat, func } => vec![S(table), S(stat.as_str()), E(func)],
        O::Join { left, right, on, how } => vec![S(left), S(right), L(on), S(how.as_str())],
        O::Union { tables, how } => vec![L(tables), S(how.as_str())],
        O::Append { table, other } => vec![S(table), S(other)],
        O::Pivot { table, index, columns, values, aggfunc } => {
            vec![S(table), L(index), S(columns), S(values), S(aggfunc.as_str())]
        }
        O::Stack { table, id_vars, value_vars } => vec![S(table), L(id_vars), L(value_vars)],
        O::WideToLong { table, stubnames, i, j } => vec![S(table), L(stubnames), L(i), S(j)],
        O::Transpose { table } => vec![S(table)],
        O::Explode { table, column } => vec![S(table), S(column)],
        O::ExeCode { tables, target, func } => vec![L(tables), S(target), S(func)],
    };
    write!(f, "{}(", op.kind())?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_out(f, a)?;
    }
    f.write_str(")")
}
