use super::{BinOp, Expr, Func, UnaryOp};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: expected {expected}, found {found}")]
    Syntax { pos: usize, expected: String, found: String },
    #[error("unknown function `{name}` at offset {pos}")]
    UnknownFunction { pos: usize, name: String },
    #[error("`{name}` at offset {pos} takes {expected} argument(s), got {found}")]
    Arity { pos: usize, name: String, expected: String, found: usize },
}

impl ParseError {
    pub fn pos(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownFunction { pos, .. }
            | ParseError::Arity { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(String),
    Real(f64),
    Str(String),
    Ident(String),
    Sym(&'static str),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(s) => format!("number `{s}`"),
            Tok::Real(r) => format!("number `{r}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::End => "end of input".into(),
        }
    }
}

const SYMBOLS: [&str; 16] = ["==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "%", "(", ")", ",", "[", "]"];

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
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
            if real {
                let v: f64 = text.parse().map_err(|_| syntax(start, "number", text))?;
                if !v.is_finite() {
                    return Err(syntax(start, "finite number", text));
                }
                out.push((start, Tok::Real(v)));
            } else {
                out.push((start, Tok::Int(text.to_string())));
            }
        } else if c == b'"' {
            i += 1;
            let mut s = String::new();
            loop {
                let Some(ch) = src[i..].chars().next() else {
                    return Err(syntax(start, "closing `\"`", "end of input"));
                };
                i += ch.len_utf8();
                match ch {
                    '"' => break,
                    '\\' => {
                        let Some(esc) = src[i..].chars().next() else {
                            return Err(syntax(i, "escape character", "end of input"));
                        };
                        i += esc.len_utf8();
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            '"' => '"',
                            '\\' => '\\',
                            other => return Err(syntax(i - 1, "escape character", &format!("`{other}`"))),
                        });
                    }
                    ch => s.push(ch),
                }
            }
            out.push((start, Tok::Str(s)));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            i += sym.len();
            out.push((start, Tok::Sym(sym)));
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(syntax(start, "expression", &format!("`{ch}`")));
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

fn syntax(pos: usize, expected: &str, found: &str) -> ParseError {
    ParseError::Syntax { pos, expected: expected.to_string(), found: found.to_string() }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        syntax(self.pos(), expected, &self.peek().describe())
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err(&format!("`{s}`")))
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(x) if x == kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and()?;
        while self.eat_keyword("or") {
            lhs = Expr::binary(BinOp::Or, lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.cmp()?;
        while self.eat_keyword("and") {
            lhs = Expr::binary(BinOp::And, lhs, self.cmp()?);
        }
        Ok(lhs)
    }

    fn cmp(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        Ok(Expr::binary(op, lhs, self.additive()?))
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.mult()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.mult()?);
        }
    }

    fn mult(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                Tok::Sym("%") => BinOp::Rem,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("-") {
            // a minus directly on a numeric literal folds into the literal
            let pos = self.pos();
            match self.peek().clone() {
                Tok::Int(digits) => {
                    self.bump();
                    let v: i128 = digits.parse().map_err(|_| syntax(pos, "integer", &digits))?;
                    let v = i64::try_from(-v).map_err(|_| syntax(pos, "64-bit integer", &digits))?;
                    return Ok(Expr::Lit(Value::Int(v)));
                }
                Tok::Real(r) => {
                    self.bump();
                    return Ok(Expr::Lit(Value::Real(-r)));
                }
                _ => return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?))),
            }
        }
        if self.eat_keyword("not") {
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(digits) => {
                self.bump();
                let v: i64 = digits.parse().map_err(|_| syntax(pos, "64-bit integer", &digits))?;
                Ok(Expr::Lit(Value::Int(v)))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(Expr::Lit(Value::Real(r)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Value::Text(s)))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.or()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "true" => return Ok(Expr::Lit(Value::Bool(true))),
                    "false" => return Ok(Expr::Lit(Value::Bool(false))),
                    "null" => return Ok(Expr::Lit(Value::Null)),
                    "and" | "or" | "not" => return Err(syntax(pos, "expression", &format!("keyword `{name}`"))),
                    _ => {}
                }
                if name == "col" {
                    self.expect_sym("(")?;
                    let Tok::Str(col) = self.peek().clone() else {
                        return Err(self.err("string literal"));
                    };
                    self.bump();
                    self.expect_sym(")")?;
                    return Ok(Expr::Col(col));
                }
                let Some(func) = Func::from_name(&name) else {
                    if matches!(self.peek(), Tok::Sym("(")) {
                        return Err(ParseError::UnknownFunction { pos, name });
                    }
                    return Err(syntax(pos, "expression", &format!("identifier `{name}`")));
                };
                self.expect_sym("(")?;
                let mut args = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        args.push(self.or()?);
                        if self.eat_sym(")") {
                            break;
                        }
                        self.expect_sym(",")?;
                    }
                }
                let super::Arity(min, max) = func.arity();
                if args.len() < min || max.is_some_and(|m| args.len() > m) {
                    let expected = match max {
                        Some(m) if m == min => min.to_string(),
                        Some(m) => format!("{min} to {m}"),
                        None => format!("at least {min}"),
                    };
                    return Err(ParseError::Arity { pos, name, expected, found: args.len() });
                }
                Ok(Expr::Call(func, args))
            }
            _ => Err(self.err("expression")),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, at: 0 };
    if matches!(p.peek(), Tok::End) {
        return Err(p.err("expression"));
    }
    let e = p.or()?;
    if !matches!(p.peek(), Tok::End) {
        return Err(p.err("end of input"));
    }
    Ok(e)
}
