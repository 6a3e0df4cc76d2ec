//! Guard language: constraints over read (`v^r`) and written (`v^w`) variables.
//!
//! Guards are stored as a single expression tree. Type checking enforces the
//! grammar: arithmetic and ordering over `int`/`rat` only, booleans and strings
//! under (in)equality only, and homogeneous comparisons. Integer literals used in
//! a rational context are widened when the guard is resolved against a net.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;
use serde_json::json;

use super::value::{Assignment, Value, VarType};
use crate::rational::{format_exact, parse_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Annot {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn from_symbol(s: &str) -> Option<CmpOp> {
        Some(match s {
            "=" | "==" => CmpOp::Eq,
            "!=" | "<>" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }

    fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Value),
    Var { name: String, annot: Annot },
    Add(Vec<Expr>),
    Neg(Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GuardError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{name}` ({annot:?}) is not covered by the given assignment")]
    Uncovered { name: String, annot: Annot },
    #[error("type mismatch: {0}")]
    Type(String),
    #[error("malformed guard syntax: {0}")]
    Syntax(String),
}

impl Expr {
    pub fn truth() -> Expr {
        Expr::And(Vec::new())
    }

    pub fn rvar(name: &str) -> Expr {
        Expr::Var { name: name.to_string(), annot: Annot::Read }
    }

    pub fn wvar(name: &str) -> Expr {
        Expr::Var { name: name.to_string(), annot: Annot::Write }
    }

    pub fn int(i: i64) -> Expr {
        Expr::Const(Value::Int(i))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn is_trivially_true(&self) -> bool {
        matches!(self, Expr::And(v) if v.is_empty()) || matches!(self, Expr::Const(Value::Bool(true)))
    }

    /// Visits every variable occurrence.
    pub fn for_each_var(&self, f: &mut impl FnMut(&str, Annot)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var { name, annot } => f(name, *annot),
            Expr::Add(xs) | Expr::And(xs) | Expr::Or(xs) => xs.iter().for_each(|x| x.for_each_var(f)),
            Expr::Neg(x) | Expr::Not(x) => x.for_each_var(f),
            Expr::Cmp(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }

    /// Variables occurring with a write annotation.
    pub fn written_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_var(&mut |n, a| {
            if a == Annot::Write {
                out.insert(n.to_string());
            }
        });
        out
    }

    pub fn constants(&self) -> Vec<Value> {
        let mut out = Vec::new();
        self.collect_constants(&mut out);
        out
    }

    fn collect_constants(&self, out: &mut Vec<Value>) {
        match self {
            Expr::Const(v) => out.push(v.clone()),
            Expr::Var { .. } => {}
            Expr::Add(xs) | Expr::And(xs) | Expr::Or(xs) => xs.iter().for_each(|x| x.collect_constants(out)),
            Expr::Neg(x) | Expr::Not(x) => x.collect_constants(out),
            Expr::Cmp(_, a, b) => {
                a.collect_constants(out);
                b.collect_constants(out);
            }
        }
    }

    /// Type-checks against the variable declarations and returns a copy in which
    /// integer literals in rational contexts are widened. The result is a
    /// constraint (boolean-typed).
    pub fn resolve(&self, vars: &BTreeMap<String, VarType>) -> Result<Expr, GuardError> {
        let (e, ty) = self.resolve_term(vars)?;
        if ty != VarType::Bool {
            return Err(GuardError::Type(format!("guard has type {ty}, expected bool")));
        }
        Ok(e)
    }

    fn resolve_term(&self, vars: &BTreeMap<String, VarType>) -> Result<(Expr, VarType), GuardError> {
        match self {
            Expr::Const(v) => Ok((self.clone(), v.var_type())),
            Expr::Var { name, .. } => {
                let ty = vars.get(name).ok_or_else(|| GuardError::UnknownVariable(name.clone()))?;
                Ok((self.clone(), *ty))
            }
            Expr::Add(xs) => {
                let parts = xs.iter().map(|x| x.resolve_term(vars)).collect::<Result<Vec<_>, _>>()?;
                let ty = unify_numeric(parts.iter().map(|(e, t)| (e, *t)))?;
                Ok((Expr::Add(parts.into_iter().map(|(e, _)| widen(e, ty)).collect()), ty))
            }
            Expr::Neg(x) => {
                let (e, ty) = x.resolve_term(vars)?;
                if !ty.is_numeric() {
                    return Err(GuardError::Type(format!("negation of {ty}")));
                }
                Ok((Expr::Neg(Box::new(e)), ty))
            }
            Expr::Cmp(op, a, b) => {
                let (ea, ta) = a.resolve_term(vars)?;
                let (eb, tb) = b.resolve_term(vars)?;
                if ta.is_numeric() && tb.is_numeric() {
                    let ty = unify_numeric([(&ea, ta), (&eb, tb)].into_iter())?;
                    Ok((Expr::Cmp(*op, Box::new(widen(ea, ty)), Box::new(widen(eb, ty))), VarType::Bool))
                } else if ta == tb && op.is_equality() {
                    Ok((Expr::Cmp(*op, Box::new(ea), Box::new(eb)), VarType::Bool))
                } else {
                    Err(GuardError::Type(format!("cannot compare {ta} {} {tb}", op.symbol())))
                }
            }
            Expr::And(xs) | Expr::Or(xs) => {
                let mut parts = Vec::with_capacity(xs.len());
                for x in xs {
                    let (e, ty) = x.resolve_term(vars)?;
                    if ty != VarType::Bool {
                        return Err(GuardError::Type(format!("connective over {ty}")));
                    }
                    parts.push(e);
                }
                Ok((if matches!(self, Expr::And(_)) { Expr::And(parts) } else { Expr::Or(parts) }, VarType::Bool))
            }
            Expr::Not(x) => {
                let (e, ty) = x.resolve_term(vars)?;
                if ty != VarType::Bool {
                    return Err(GuardError::Type(format!("negation of {ty}")));
                }
                Ok((Expr::Not(Box::new(e)), VarType::Bool))
            }
        }
    }

    /// Evaluates the guard. Read-annotated variables are looked up in `read`,
    /// write-annotated ones in `write`.
    pub fn eval(&self, read: &Assignment, write: &Assignment) -> Result<bool, GuardError> {
        match self.eval_value(read, write)? {
            Value::Bool(b) => Ok(b),
            other => Err(GuardError::Type(format!("guard evaluated to {other}"))),
        }
    }

    fn eval_value(&self, read: &Assignment, write: &Assignment) -> Result<Value, GuardError> {
        Ok(match self {
            Expr::Const(v) => v.clone(),
            Expr::Var { name, annot } => {
                let source = if *annot == Annot::Read { read } else { write };
                source
                    .get(name)
                    .cloned()
                    .ok_or_else(|| GuardError::Uncovered { name: name.clone(), annot: *annot })?
            }
            Expr::Add(xs) => {
                let mut sum = Rational::zero();
                let mut all_int = true;
                for x in xs {
                    let v = x.eval_value(read, write)?;
                    all_int &= matches!(v, Value::Int(_));
                    sum += v.as_rational().ok_or_else(|| GuardError::Type(format!("addition over {v}")))?;
                }
                numeric_value(sum, all_int)?
            }
            Expr::Neg(x) => {
                let v = x.eval_value(read, write)?;
                let is_int = matches!(v, Value::Int(_));
                let q = v.as_rational().ok_or_else(|| GuardError::Type(format!("negation of {v}")))?;
                numeric_value(-q, is_int)?
            }
            Expr::Cmp(op, a, b) => {
                let va = a.eval_value(read, write)?;
                let vb = b.eval_value(read, write)?;
                let ord = va
                    .partial_cmp_value(&vb)
                    .ok_or_else(|| GuardError::Type(format!("cannot compare {va} with {vb}")))?;
                if !op.is_equality() && !(va.var_type().is_numeric() && vb.var_type().is_numeric()) {
                    return Err(GuardError::Type(format!("ordering over {va}")));
                }
                Value::Bool(match op {
                    CmpOp::Eq => ord.is_eq(),
                    CmpOp::Ne => ord.is_ne(),
                    CmpOp::Lt => ord.is_lt(),
                    CmpOp::Le => ord.is_le(),
                    CmpOp::Gt => ord.is_gt(),
                    CmpOp::Ge => ord.is_ge(),
                })
            }
            Expr::And(xs) => {
                let mut acc = true;
                for x in xs {
                    acc &= x.eval(read, write)?;
                }
                Value::Bool(acc)
            }
            Expr::Or(xs) => {
                let mut acc = false;
                for x in xs {
                    acc |= x.eval(read, write)?;
                }
                Value::Bool(acc)
            }
            Expr::Not(x) => Value::Bool(!x.eval(read, write)?),
        })
    }

    /// Prefix-notation JSON form, e.g. `["and", [">=", ["wvar","x"], ["int",0]]]`.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Expr::Const(Value::Bool(b)) => json!(["bool", b]),
            Expr::Const(Value::Int(i)) => json!(["int", i]),
            Expr::Const(Value::Rat(q)) => json!(["rat", format_exact(q)]),
            Expr::Const(Value::Str(s)) => json!(["str", s]),
            Expr::Var { name, annot: Annot::Read } => json!(["rvar", name]),
            Expr::Var { name, annot: Annot::Write } => json!(["wvar", name]),
            Expr::Add(xs) => prefix("+", xs),
            Expr::Neg(x) => json!(["-", x.to_json()]),
            Expr::Cmp(op, a, b) => json!([op.symbol(), a.to_json(), b.to_json()]),
            Expr::And(xs) => prefix("and", xs),
            Expr::Or(xs) => prefix("or", xs),
            Expr::Not(x) => json!(["not", x.to_json()]),
        }
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Expr, GuardError> {
        let syntax = |m: &str| GuardError::Syntax(format!("{m}: {value}"));
        let items = match value {
            serde_json::Value::Null => return Ok(Expr::truth()),
            serde_json::Value::Bool(b) => return Ok(Expr::Const(Value::Bool(*b))),
            serde_json::Value::Array(items) => items,
            _ => return Err(syntax("expected a prefix array")),
        };
        let head = items.first().and_then(|h| h.as_str()).ok_or_else(|| syntax("missing operator"))?;
        let args = &items[1..];
        let one = || -> Result<&serde_json::Value, GuardError> {
            match args {
                [a] => Ok(a),
                _ => Err(syntax("expected exactly one argument")),
            }
        };
        let sub = |xs: &[serde_json::Value]| xs.iter().map(Expr::from_json).collect::<Result<Vec<_>, _>>();
        Ok(match head {
            "true" => Expr::Const(Value::Bool(true)),
            "false" => Expr::Const(Value::Bool(false)),
            "rvar" | "wvar" => {
                let name = one()?.as_str().ok_or_else(|| syntax("variable name must be a string"))?;
                Expr::Var {
                    name: name.to_string(),
                    annot: if head == "rvar" { Annot::Read } else { Annot::Write },
                }
            }
            "int" => {
                let v = one()?;
                let i = v
                    .as_i64()
                    .or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()))
                    .ok_or_else(|| syntax("bad integer literal"))?;
                Expr::int(i)
            }
            "rat" => {
                let v = one()?;
                let text = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n.to_string(),
                    _ => return Err(syntax("bad rational literal")),
                };
                Expr::Const(Value::Rat(parse_rational(&text).map_err(|_| syntax("bad rational literal"))?))
            }
            "bool" => Expr::Const(Value::Bool(one()?.as_bool().ok_or_else(|| syntax("bad boolean literal"))?)),
            "str" => Expr::Const(Value::Str(one()?.as_str().ok_or_else(|| syntax("bad string literal"))?.to_string())),
            "and" => Expr::And(sub(args)?),
            "or" => Expr::Or(sub(args)?),
            "not" => Expr::Not(Box::new(Expr::from_json(one()?)?)),
            "+" => Expr::Add(sub(args)?),
            "-" => match args {
                [a] => Expr::Neg(Box::new(Expr::from_json(a)?)),
                [a, b] => Expr::Add(vec![Expr::from_json(a)?, Expr::Neg(Box::new(Expr::from_json(b)?))]),
                _ => return Err(syntax("`-` takes one or two arguments")),
            },
            op => match (CmpOp::from_symbol(op), args) {
                (Some(cmp), [a, b]) => Expr::cmp(cmp, Expr::from_json(a)?, Expr::from_json(b)?),
                (Some(_), _) => return Err(syntax("comparison takes two arguments")),
                (None, _) => return Err(syntax("unknown operator")),
            },
        })
    }

    /// Parses the infix text syntax used in PNML guard attributes:
    /// `x' >= 0 && (y != x || !flag)`. A trailing `'` marks a written variable.
    pub fn parse_text(text: &str) -> Result<Expr, GuardError> {
        let tokens = tokenize(text)?;
        let mut parser = TextParser { tokens, pos: 0 };
        if parser.tokens.is_empty() {
            return Ok(Expr::truth());
        }
        let e = parser.disjunction()?;
        if parser.pos != parser.tokens.len() {
            return Err(GuardError::Syntax(format!("trailing input in `{text}`")));
        }
        Ok(e)
    }
}

fn prefix(op: &str, xs: &[Expr]) -> serde_json::Value {
    let mut v = vec![json!(op)];
    v.extend(xs.iter().map(Expr::to_json));
    serde_json::Value::Array(v)
}

fn unify_numeric<'a>(parts: impl Iterator<Item = (&'a Expr, VarType)>) -> Result<VarType, GuardError> {
    let mut has_rat = false;
    let mut int_non_const = false;
    for (e, t) in parts {
        match t {
            VarType::Rat => has_rat = true,
            VarType::Int => int_non_const |= !is_int_literal(e),
            other => return Err(GuardError::Type(format!("arithmetic over {other}"))),
        }
    }
    if has_rat && int_non_const {
        return Err(GuardError::Type("mixing int and rat terms".into()));
    }
    Ok(if has_rat { VarType::Rat } else { VarType::Int })
}

fn is_int_literal(e: &Expr) -> bool {
    match e {
        Expr::Const(Value::Int(_)) => true,
        Expr::Neg(x) => is_int_literal(x),
        Expr::Add(xs) => xs.iter().all(is_int_literal),
        _ => false,
    }
}

fn widen(e: Expr, ty: VarType) -> Expr {
    if ty != VarType::Rat {
        return e;
    }
    match e {
        Expr::Const(Value::Int(i)) => Expr::Const(Value::Rat(Rational::from_integer(i.into()))),
        Expr::Neg(x) => Expr::Neg(Box::new(widen(*x, ty))),
        Expr::Add(xs) => Expr::Add(xs.into_iter().map(|x| widen(x, ty)).collect()),
        other => other,
    }
}

fn numeric_value(q: Rational, is_int: bool) -> Result<Value, GuardError> {
    if is_int {
        use num_traits::ToPrimitive;
        let i = q.to_integer().to_i64().ok_or_else(|| GuardError::Type("integer overflow".into()))?;
        Ok(Value::Int(i))
    } else {
        Ok(Value::Rat(q))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var { name, annot: Annot::Read } => write!(f, "{name}"),
            Expr::Var { name, annot: Annot::Write } => write!(f, "{name}'"),
            Expr::Add(xs) if xs.is_empty() => f.write_str("0"),
            Expr::Add(xs) => write_joined(f, xs, " + "),
            Expr::Neg(x) => write!(f, "-({x})"),
            Expr::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Expr::And(xs) if xs.is_empty() => f.write_str("true"),
            Expr::And(xs) => write_joined(f, xs, " && "),
            Expr::Or(xs) if xs.is_empty() => f.write_str("false"),
            Expr::Or(xs) => write_joined(f, xs, " || "),
            Expr::Not(x) => write!(f, "!({x})"),
        }
    }
}

fn write_joined(f: &mut fmt::Formatter<'_>, xs: &[Expr], sep: &str) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        match x {
            Expr::Const(_) | Expr::Var { .. } | Expr::Not(_) | Expr::Neg(_) => write!(f, "{x}")?,
            _ => write!(f, "({x})")?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String, Annot),
    Num(Rational, bool),
    Str(String),
    Op(&'static str),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<Tok>, GuardError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '(' || c == ')' {
            out.push(if c == '(' { Tok::LParen } else { Tok::RParen });
            i += 1;
            continue;
        }
        if c == '"' {
            let start = i + 1;
            let end = (start..chars.len())
                .find(|&j| chars[j] == '"')
                .ok_or_else(|| GuardError::Syntax(format!("unterminated string in `{text}`")))?;
            out.push(Tok::Str(chars[start..end].iter().collect()));
            i = end + 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '/') {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            let q = parse_rational(&lit).map_err(|e| GuardError::Syntax(e.to_string()))?;
            let is_int = !lit.contains(['.', '/']);
            out.push(Tok::Num(q, is_int));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == ':') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "and" => Tok::Op("&&"),
                "or" => Tok::Op("||"),
                "not" => Tok::Op("!"),
                "true" => Tok::Ident("true".into(), Annot::Read),
                "false" => Tok::Ident("false".into(), Annot::Read),
                _ => {
                    let annot = if chars.get(i) == Some(&'\'') {
                        i += 1;
                        Annot::Write
                    } else {
                        Annot::Read
                    };
                    Tok::Ident(word, annot)
                }
            };
            out.push(tok);
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let op = ["&&", "||", ">=", "<=", "==", "!=", "<>"].into_iter().find(|o| *o == two);
        if let Some(op) = op {
            out.push(Tok::Op(op));
            i += 2;
            continue;
        }
        let op = match c {
            '!' => "!",
            '>' => ">",
            '<' => "<",
            '=' => "=",
            '+' => "+",
            '-' => "-",
            _ => return Err(GuardError::Syntax(format!("unexpected `{c}` in `{text}`"))),
        };
        out.push(Tok::Op(op));
        i += 1;
    }
    Ok(out)
}

struct TextParser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl TextParser {
    fn peek_op(&self) -> Option<&'static str> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(o)) => Some(o),
            _ => None,
        }
    }

    fn disjunction(&mut self) -> Result<Expr, GuardError> {
        let mut parts = vec![self.conjunction()?];
        while self.peek_op() == Some("||") {
            self.pos += 1;
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Or(parts) })
    }

    fn conjunction(&mut self) -> Result<Expr, GuardError> {
        let mut parts = vec![self.negation()?];
        while self.peek_op() == Some("&&") {
            self.pos += 1;
            parts.push(self.negation()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn negation(&mut self) -> Result<Expr, GuardError> {
        if self.peek_op() == Some("!") {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.negation()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, GuardError> {
        let lhs = self.sum()?;
        if let Some(op) = self.peek_op().and_then(CmpOp::from_symbol) {
            self.pos += 1;
            let rhs = self.sum()?;
            return Ok(Expr::cmp(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Expr, GuardError> {
        let mut parts = vec![self.unary()?];
        loop {
            match self.peek_op() {
                Some("+") => {
                    self.pos += 1;
                    parts.push(self.unary()?);
                }
                Some("-") => {
                    self.pos += 1;
                    parts.push(Expr::Neg(Box::new(self.unary()?)));
                }
                _ => break,
            }
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Add(parts) })
    }

    fn unary(&mut self) -> Result<Expr, GuardError> {
        if self.peek_op() == Some("-") {
            self.pos += 1;
            return Ok(match self.unary()? {
                Expr::Const(Value::Int(i)) => Expr::int(-i),
                Expr::Const(Value::Rat(q)) => Expr::Const(Value::Rat(-q)),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, GuardError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| GuardError::Syntax("unexpected end of guard".into()))?;
        self.pos += 1;
        Ok(match tok {
            Tok::LParen => {
                let e = self.disjunction()?;
                if self.tokens.get(self.pos) != Some(&Tok::RParen) {
                    return Err(GuardError::Syntax("missing `)`".into()));
                }
                self.pos += 1;
                e
            }
            Tok::Num(q, true) => {
                use num_traits::ToPrimitive;
                Expr::int(q.to_integer().to_i64().ok_or_else(|| GuardError::Syntax("integer literal too large".into()))?)
            }
            Tok::Num(q, false) => Expr::Const(Value::Rat(q)),
            Tok::Str(s) => Expr::Const(Value::Str(s)),
            Tok::Ident(w, _) if w == "true" => Expr::Const(Value::Bool(true)),
            Tok::Ident(w, _) if w == "false" => Expr::Const(Value::Bool(false)),
            Tok::Ident(name, annot) => Expr::Var { name, annot },
            other => return Err(GuardError::Syntax(format!("unexpected token {other:?}"))),
        })
    }
}
