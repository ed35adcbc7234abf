//! Cell values and their total order.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

/// Declared kind of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    Int,
    Real,
    Text,
    Bool,
    List,
}

impl DType {
    pub fn as_str(self) -> &'static str {
        match self {
            DType::Int => "int",
            DType::Real => "real",
            DType::Text => "text",
            DType::Bool => "bool",
            DType::List => "list",
        }
    }

    /// Accepts the canonical names plus a few common aliases.
    pub fn parse(s: &str) -> Option<DType> {
        match s.trim().to_ascii_lowercase().as_str() {
            "int" | "integer" | "int64" => Some(DType::Int),
            "real" | "float" | "float64" | "double" => Some(DType::Real),
            "text" | "str" | "string" => Some(DType::Text),
            "bool" | "boolean" => Some(DType::Bool),
            "list" => Some(DType::List),
            _ => None,
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single table cell.
///
/// `Real` values are always finite inside a valid [`crate::Table`]; use
/// [`Value::real`] to construct one with that check. Integers and reals
/// compare and hash numerically, so `Int(2) == Real(2.0)`.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
    List(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("non-finite real value {0}")]
pub struct NonFinite(pub f64);

impl Value {
    pub fn real(x: f64) -> Result<Value, NonFinite> {
        if x.is_finite() {
            Ok(Value::Real(x))
        } else {
            Err(NonFinite(x))
        }
    }

    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Kind of a non-null value.
    pub fn dtype(&self) -> Option<DType> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some(DType::Int),
            Value::Real(_) => Some(DType::Real),
            Value::Text(_) => Some(DType::Text),
            Value::Bool(_) => Some(DType::Bool),
            Value::List(_) => Some(DType::List),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        self.dtype().map_or("null", DType::as_str)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Bool(_) => 1,
            Value::Int(_) | Value::Real(_) => 2,
            Value::Text(_) => 3,
            Value::List(_) => 4,
        }
    }

    /// Plain-text rendering used for casts, pivot headers and CSV cells.
    /// `Null` renders as the empty string.
    pub fn render(&self) -> String {
        match self {
            Value::Null => String::new(),
            Value::Int(i) => i.to_string(),
            Value::Real(r) => r.to_string(),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::List(_) => self.to_json().to_string(),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Null => Json::Null,
            Value::Int(i) => Json::from(*i),
            Value::Real(r) => serde_json::Number::from_f64(*r).map_or(Json::Null, Json::Number),
            Value::Text(s) => Json::String(s.clone()),
            Value::Bool(b) => Json::Bool(*b),
            Value::List(items) => Json::Array(items.iter().map(Value::to_json).collect()),
        }
    }

    /// Converts a JSON value; objects and nested arrays are rejected.
    pub fn from_json(json: &Json) -> Option<Value> {
        Self::from_json_depth(json, 0)
    }

    fn from_json_depth(json: &Json, depth: usize) -> Option<Value> {
        Some(match json {
            Json::Null => Value::Null,
            Json::Bool(b) => Value::Bool(*b),
            Json::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => Value::real(n.as_f64()?).ok()?,
            },
            Json::String(s) => Value::Text(s.clone()),
            Json::Array(items) if depth == 0 => Value::List(
                items
                    .iter()
                    .map(|v| Self::from_json_depth(v, 1))
                    .collect::<Option<Vec<_>>>()?,
            ),
            _ => return None,
        })
    }
}

fn cmp_int_real(i: i64, r: f64) -> Ordering {
    const TWO_63: f64 = 9_223_372_036_854_775_808.0;
    match (i as f64).partial_cmp(&r) {
        Some(Ordering::Equal) => {
            // r is integral and within one rounding step of i
            if r >= TWO_63 {
                Ordering::Less
            } else {
                i.cmp(&(r as i64))
            }
        }
        Some(o) => o,
        None => Ordering::Less,
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        use Value::*;
        match (self, other) {
            (Null, Null) => Ordering::Equal,
            (Bool(a), Bool(b)) => a.cmp(b),
            (Int(a), Int(b)) => a.cmp(b),
            (Real(a), Real(b)) => a.partial_cmp(b).unwrap_or_else(|| a.total_cmp(b)),
            (Int(a), Real(b)) => cmp_int_real(*a, *b),
            (Real(a), Int(b)) => cmp_int_real(*b, *a).reverse(),
            (Text(a), Text(b)) => a.as_bytes().cmp(b.as_bytes()),
            (List(a), List(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        const TWO_63: f64 = 9_223_372_036_854_775_808.0;
        match self {
            Value::Null => 0u8.hash(state),
            Value::Bool(b) => {
                1u8.hash(state);
                b.hash(state);
            }
            Value::Int(i) => {
                2u8.hash(state);
                i.hash(state);
            }
            Value::Real(r) => {
                if r.fract() == 0.0 && *r >= -TWO_63 && *r < TWO_63 {
                    2u8.hash(state);
                    (*r as i64).hash(state);
                } else {
                    5u8.hash(state);
                    r.to_bits().hash(state);
                }
            }
            Value::Text(s) => {
                3u8.hash(state);
                s.hash(state);
            }
            Value::List(items) => {
                4u8.hash(state);
                items.hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    /// Display form used in markdown observations: `null` for missing cells.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            other => f.write_str(&other.render()),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

/// Converts a non-null value to `to`. `Null` passes through.
///
/// Reals only cast to int when integral; text is trimmed before parsing.
pub fn cast(v: &Value, to: DType) -> Result<Value, String> {
    let fail = || format!("cannot cast {} {} to {}", v.kind_name(), v.to_json(), to);
    Ok(match (v, to) {
        (Value::Null, _) => Value::Null,
        (Value::Int(_), DType::Int)
        | (Value::Real(_), DType::Real)
        | (Value::Text(_), DType::Text)
        | (Value::Bool(_), DType::Bool)
        | (Value::List(_), DType::List) => v.clone(),
        (Value::Int(i), DType::Real) => Value::Real(*i as f64),
        (Value::Real(r), DType::Int) => real_to_int(*r).ok_or_else(fail)?,
        (Value::Bool(b), DType::Int) => Value::Int(*b as i64),
        (Value::Bool(b), DType::Real) => Value::Real(if *b { 1.0 } else { 0.0 }),
        (Value::Int(i), DType::Bool) => match i {
            0 => Value::Bool(false),
            1 => Value::Bool(true),
            _ => return Err(fail()),
        },
        (Value::Real(r), DType::Bool) => match r {
            x if *x == 0.0 => Value::Bool(false),
            x if *x == 1.0 => Value::Bool(true),
            _ => return Err(fail()),
        },
        (Value::Text(s), DType::Int) => {
            let t = s.trim();
            match t.parse::<i64>() {
                Ok(i) => Value::Int(i),
                Err(_) => t.parse::<f64>().ok().and_then(real_to_int).ok_or_else(fail)?,
            }
        }
        (Value::Text(s), DType::Real) => match s.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => Value::Real(x),
            _ => return Err(fail()),
        },
        (Value::Text(s), DType::Bool) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" => Value::Bool(true),
            "false" | "0" | "no" => Value::Bool(false),
            _ => return Err(fail()),
        },
        (_, DType::Text) => Value::Text(v.render()),
        _ => return Err(fail()),
    })
}

fn real_to_int(r: f64) -> Option<Value> {
    const TWO_63: f64 = 9_223_372_036_854_775_808.0;
    (r.is_finite() && r.fract() == 0.0 && (-TWO_63..TWO_63).contains(&r)).then_some(Value::Int(r as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::hash_map::DefaultHasher;

    fn hash_of(v: &Value) -> u64 {
        let mut h = DefaultHasher::new();
        v.hash(&mut h);
        h.finish()
    }

    #[test]
    fn int_real_cross_equality() {
        assert_eq!(Value::Int(2), Value::Real(2.0));
        assert_eq!(hash_of(&Value::Int(2)), hash_of(&Value::Real(2.0)));
        assert_eq!(hash_of(&Value::Real(0.0)), hash_of(&Value::Real(-0.0)));
        assert!(Value::Int(2) < Value::Real(2.5));
        assert!(Value::Real(-0.5) < Value::Int(0));
        assert!(Value::Int(i64::MAX) < Value::Real(9_223_372_036_854_775_808.0));
    }

    #[test]
    fn kind_order() {
        let ordered = [
            Value::Null,
            Value::Bool(false),
            Value::Bool(true),
            Value::Int(-3),
            Value::Real(1.5),
            Value::text("A"),
            Value::text("a"),
            Value::List(vec![]),
            Value::List(vec![Value::Int(1)]),
        ];
        for w in ordered.windows(2) {
            assert!(w[0] < w[1], "{:?} < {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn casts() {
        assert_eq!(cast(&Value::text(" 12 "), DType::Int), Ok(Value::Int(12)));
        assert_eq!(cast(&Value::text("3.0"), DType::Int), Ok(Value::Int(3)));
        assert!(cast(&Value::text("12x"), DType::Int).is_err());
        assert!(cast(&Value::Real(2.5), DType::Int).is_err());
        assert_eq!(cast(&Value::Real(2.5), DType::Text), Ok(Value::text("2.5")));
        assert_eq!(cast(&Value::text("yes"), DType::Bool), Ok(Value::Bool(true)));
        assert_eq!(cast(&Value::Null, DType::Int), Ok(Value::Null));
        assert!(cast(&Value::text("inf"), DType::Real).is_err());
    }

    #[test]
    fn real_rejects_nan() {
        assert!(Value::real(f64::NAN).is_err());
        assert!(Value::real(f64::INFINITY).is_err());
    }

    #[test]
    fn json_round_trip_keeps_kinds() {
        let v = Value::List(vec![Value::Int(1), Value::Real(1.0), Value::text("x"), Value::Null]);
        let back = Value::from_json(&v.to_json()).unwrap();
        match back {
            Value::List(items) => {
                assert!(matches!(items[0], Value::Int(1)));
                assert!(matches!(items[1], Value::Real(_)));
            }
            _ => panic!(),
        }
        assert!(Value::from_json(&serde_json::json!([[1]])).is_none());
    }
}
