use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::rational::{format_exact, parse_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    Bool,
    Int,
    Rat,
    #[serde(rename = "string")]
    Str,
}

impl VarType {
    pub fn is_numeric(self) -> bool {
        matches!(self, VarType::Int | VarType::Rat)
    }

    pub fn name(self) -> &'static str {
        match self {
            VarType::Bool => "bool",
            VarType::Int => "int",
            VarType::Rat => "rat",
            VarType::Str => "string",
        }
    }

    pub fn parse(name: &str) -> Option<VarType> {
        Some(match name {
            "bool" | "boolean" => VarType::Bool,
            "int" | "integer" => VarType::Int,
            "rat" | "rational" | "real" => VarType::Rat,
            "string" | "str" => VarType::Str,
            _ => return None,
        })
    }
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A typed constant. Rationals are exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Rat(Rational),
    Str(String),
}

/// Total assignment (or partial, depending on context) from variable names to values.
pub type Assignment = BTreeMap<String, Value>;

impl Value {
    pub fn var_type(&self) -> VarType {
        match self {
            Value::Bool(_) => VarType::Bool,
            Value::Int(_) => VarType::Int,
            Value::Rat(_) => VarType::Rat,
            Value::Str(_) => VarType::Str,
        }
    }

    /// Numeric view used for arithmetic; `None` for booleans and strings.
    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Value::Int(i) => Some(Rational::from_integer((*i).into())),
            Value::Rat(q) => Some(q.clone()),
            _ => None,
        }
    }

    /// Converts to `ty` when lossless (ints widen to rationals, integral rationals narrow).
    pub fn coerce(&self, ty: VarType) -> Option<Value> {
        match (self, ty) {
            (v, t) if v.var_type() == t => Some(v.clone()),
            (Value::Int(i), VarType::Rat) => Some(Value::Rat(Rational::from_integer((*i).into()))),
            (Value::Rat(q), VarType::Int) if q.is_integer() => q.to_integer().to_i64().map(Value::Int),
            _ => None,
        }
    }

    /// Builds a value from JSON. Numbers with a fractional part and `"p/q"` strings
    /// become rationals; strings stay strings unless `ty` asks for a number.
    pub fn from_json(json: &serde_json::Value, ty: Option<VarType>) -> Option<Value> {
        let raw = match json {
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => Value::Rat(parse_rational(&n.to_string()).ok()?),
            },
            serde_json::Value::String(s) => match ty {
                Some(t) if t.is_numeric() => Value::Rat(parse_rational(s).ok()?),
                _ => Value::Str(s.clone()),
            },
            _ => return None,
        };
        match ty {
            Some(t) => raw.coerce(t),
            None => Some(raw),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Rat(q) if q.is_integer() => match q.to_integer().to_i64() {
                Some(i) => serde_json::Value::from(i),
                None => serde_json::Value::String(format_exact(q)),
            },
            Value::Rat(q) => serde_json::Value::String(format_exact(q)),
            Value::Str(s) => serde_json::Value::String(s.clone()),
        }
    }

    /// Same-type ordering; numbers compare across int/rat.
    pub fn partial_cmp_value(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            (a, b) => Some(a.as_rational()?.cmp(&b.as_rational()?)),
        }
    }

    /// Equality that identifies `Int(2)` with `Rat(2)`.
    pub fn same(&self, other: &Value) -> bool {
        self.partial_cmp_value(other) == Some(Ordering::Equal)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Rat(q) => f.write_str(&format_exact(q)),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}
