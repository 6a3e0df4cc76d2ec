//! Quantifier-free terms over booleans, integers and reals, with an SMT-LIB
//! printer and an exact evaluator.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sort {
    Bool,
    Int,
    Real,
}

impl Sort {
    pub fn smtlib(self) -> &'static str {
        match self {
            Sort::Bool => "Bool",
            Sort::Int => "Int",
            Sort::Real => "Real",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Bool(bool),
    Int(BigInt),
    Real(Rational),
    /// A declared constant or a nullary definition.
    Var(String),
    Add(Vec<Term>),
    Sub(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    /// Multiplication by a constant.
    Scale(Rational, Box<Term>),
    ToReal(Box<Term>),
    Cmp(Rel, Box<Term>, Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    Not(Box<Term>),
    Implies(Box<Term>, Box<Term>),
    Ite(Box<Term>, Box<Term>, Box<Term>),
}

pub fn var(name: impl Into<String>) -> Term {
    Term::Var(name.into())
}

pub fn int(i: i64) -> Term {
    Term::Int(BigInt::from(i))
}

pub fn real(q: Rational) -> Term {
    Term::Real(q)
}

pub fn add(mut xs: Vec<Term>) -> Term {
    match xs.len() {
        0 => Term::Int(BigInt::zero()),
        1 => xs.pop().unwrap(),
        _ => Term::Add(xs),
    }
}

pub fn plus(a: Term, b: Term) -> Term {
    Term::Add(vec![a, b])
}

pub fn cmp(rel: Rel, a: Term, b: Term) -> Term {
    Term::Cmp(rel, Box::new(a), Box::new(b))
}

pub fn eq(a: Term, b: Term) -> Term {
    cmp(Rel::Eq, a, b)
}

pub fn le(a: Term, b: Term) -> Term {
    cmp(Rel::Le, a, b)
}

pub fn lt(a: Term, b: Term) -> Term {
    cmp(Rel::Lt, a, b)
}

pub fn ge(a: Term, b: Term) -> Term {
    cmp(Rel::Ge, a, b)
}

pub fn and(mut xs: Vec<Term>) -> Term {
    xs.retain(|x| *x != Term::Bool(true));
    if xs.contains(&Term::Bool(false)) {
        return Term::Bool(false);
    }
    match xs.len() {
        0 => Term::Bool(true),
        1 => xs.pop().unwrap(),
        _ => Term::And(xs),
    }
}

pub fn or(mut xs: Vec<Term>) -> Term {
    xs.retain(|x| *x != Term::Bool(false));
    if xs.contains(&Term::Bool(true)) {
        return Term::Bool(true);
    }
    match xs.len() {
        0 => Term::Bool(false),
        1 => xs.pop().unwrap(),
        _ => Term::Or(xs),
    }
}

pub fn not(a: Term) -> Term {
    match a {
        Term::Bool(b) => Term::Bool(!b),
        Term::Not(x) => *x,
        other => Term::Not(Box::new(other)),
    }
}

pub fn implies(a: Term, b: Term) -> Term {
    match (&a, &b) {
        (Term::Bool(false), _) | (_, Term::Bool(true)) => Term::Bool(true),
        (Term::Bool(true), _) => b,
        _ => Term::Implies(Box::new(a), Box::new(b)),
    }
}

pub fn iff(a: Term, b: Term) -> Term {
    eq(a, b)
}

pub fn ite(c: Term, a: Term, b: Term) -> Term {
    match c {
        Term::Bool(true) => a,
        Term::Bool(false) => b,
        _ if a == b => a,
        c => Term::Ite(Box::new(c), Box::new(a), Box::new(b)),
    }
}

/// `min(a, b)` as `ite(a ≤ b, a, b)`.
pub fn min2(a: Term, b: Term) -> Term {
    ite(le(a.clone(), b.clone()), a, b)
}

/// Sort lookup for variables and definitions.
pub trait SortEnv {
    fn sort_of(&self, name: &str) -> Option<Sort>;
}

impl SortEnv for HashMap<String, Sort> {
    fn sort_of(&self, name: &str) -> Option<Sort> {
        self.get(name).copied()
    }
}

impl Term {
    pub fn sort(&self, env: &dyn SortEnv) -> Sort {
        match self {
            Term::Bool(_) | Term::Cmp(..) | Term::And(_) | Term::Or(_) | Term::Not(_) | Term::Implies(..) => Sort::Bool,
            Term::Int(_) => Sort::Int,
            Term::Real(_) | Term::ToReal(_) | Term::Scale(..) => Sort::Real,
            Term::Var(n) => env.sort_of(n).unwrap_or_else(|| panic!("undeclared `{n}`")),
            Term::Add(xs) => {
                if xs.iter().any(|x| x.sort(env) == Sort::Real) {
                    Sort::Real
                } else {
                    Sort::Int
                }
            }
            Term::Sub(a, b) => {
                if a.sort(env) == Sort::Real || b.sort(env) == Sort::Real {
                    Sort::Real
                } else {
                    Sort::Int
                }
            }
            Term::Neg(a) => a.sort(env),
            Term::Ite(_, a, b) => {
                if a.sort(env) == Sort::Real || b.sort(env) == Sort::Real {
                    Sort::Real
                } else {
                    a.sort(env)
                }
            }
        }
    }

    /// Inserts `to_real` where integer and real operands meet.
    pub fn coerce(self, env: &dyn SortEnv) -> Term {
        fn lift(t: Term, env: &dyn SortEnv) -> Term {
            match t {
                Term::Int(i) => Term::Real(Rational::from_integer(i)),
                t if t.sort(env) == Sort::Int => Term::ToReal(Box::new(t)),
                t => t,
            }
        }
        let rec = |t: Term| t.coerce(env);
        match self {
            Term::Add(xs) => {
                let xs: Vec<Term> = xs.into_iter().map(rec).collect();
                if xs.iter().any(|x| x.sort(env) == Sort::Real) {
                    Term::Add(xs.into_iter().map(|x| lift(x, env)).collect())
                } else {
                    Term::Add(xs)
                }
            }
            Term::Sub(a, b) => {
                let (a, b) = (rec(*a), rec(*b));
                if a.sort(env) != b.sort(env) {
                    Term::Sub(Box::new(lift(a, env)), Box::new(lift(b, env)))
                } else {
                    Term::Sub(Box::new(a), Box::new(b))
                }
            }
            Term::Cmp(r, a, b) => {
                let (a, b) = (rec(*a), rec(*b));
                let (sa, sb) = (a.sort(env), b.sort(env));
                if sa != sb && sa != Sort::Bool && sb != Sort::Bool {
                    Term::Cmp(r, Box::new(lift(a, env)), Box::new(lift(b, env)))
                } else {
                    Term::Cmp(r, Box::new(a), Box::new(b))
                }
            }
            Term::Ite(c, a, b) => {
                let (c, a, b) = (rec(*c), rec(*a), rec(*b));
                if a.sort(env) != b.sort(env) {
                    Term::Ite(Box::new(c), Box::new(lift(a, env)), Box::new(lift(b, env)))
                } else {
                    Term::Ite(Box::new(c), Box::new(a), Box::new(b))
                }
            }
            Term::Neg(a) => Term::Neg(Box::new(rec(*a))),
            Term::Scale(q, a) => Term::Scale(q, Box::new(lift(rec(*a), env))),
            Term::ToReal(a) => Term::ToReal(Box::new(rec(*a))),
            Term::And(xs) => Term::And(xs.into_iter().map(rec).collect()),
            Term::Or(xs) => Term::Or(xs.into_iter().map(rec).collect()),
            Term::Not(a) => Term::Not(Box::new(rec(*a))),
            Term::Implies(a, b) => Term::Implies(Box::new(rec(*a)), Box::new(rec(*b))),
            leaf => leaf,
        }
    }

    /// Names of variables and definitions referenced.
    pub fn for_each_var(&self, f: &mut impl FnMut(&str)) {
        match self {
            Term::Var(n) => f(n),
            Term::Bool(_) | Term::Int(_) | Term::Real(_) => {}
            Term::Add(xs) | Term::And(xs) | Term::Or(xs) => xs.iter().for_each(|x| x.for_each_var(f)),
            Term::Neg(a) | Term::Not(a) | Term::ToReal(a) | Term::Scale(_, a) => a.for_each_var(f),
            Term::Sub(a, b) | Term::Cmp(_, a, b) | Term::Implies(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Term::Ite(c, a, b) => {
                c.for_each_var(f);
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }

    pub fn write_smtlib(&self, out: &mut String) {
        match self {
            Term::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Term::Int(i) => write_int(out, i),
            Term::Real(q) => write_real(out, q),
            Term::Var(n) => out.push_str(n),
            Term::Add(xs) => nary(out, "+", xs),
            Term::And(xs) => nary(out, "and", xs),
            Term::Or(xs) => nary(out, "or", xs),
            Term::Sub(a, b) => nary_ref(out, "-", &[a, b]),
            Term::Neg(a) => nary_ref(out, "-", &[a]),
            Term::Not(a) => nary_ref(out, "not", &[a]),
            Term::ToReal(a) => nary_ref(out, "to_real", &[a]),
            Term::Implies(a, b) => nary_ref(out, "=>", &[a, b]),
            Term::Cmp(r, a, b) => nary_ref(out, r.symbol(), &[a, b]),
            Term::Ite(c, a, b) => nary_ref(out, "ite", &[c, a, b]),
            Term::Scale(q, a) => {
                out.push_str("(* ");
                write_real(out, q);
                out.push(' ');
                a.write_smtlib(out);
                out.push(')');
            }
        }
    }

    pub fn to_smtlib(&self) -> String {
        let mut s = String::new();
        self.write_smtlib(&mut s);
        s
    }
}

fn nary(out: &mut String, op: &str, xs: &[Term]) {
    out.push('(');
    out.push_str(op);
    for x in xs {
        out.push(' ');
        x.write_smtlib(out);
    }
    out.push(')');
}

fn nary_ref(out: &mut String, op: &str, xs: &[&Term]) {
    out.push('(');
    out.push_str(op);
    for x in xs {
        out.push(' ');
        x.write_smtlib(out);
    }
    out.push(')');
}

fn write_int(out: &mut String, i: &BigInt) {
    if i.is_negative() {
        let _ = write!(out, "(- {})", -i);
    } else {
        let _ = write!(out, "{i}");
    }
}

fn write_real(out: &mut String, q: &Rational) {
    let neg = q.is_negative();
    let a = q.abs();
    let body = if a.is_integer() {
        format!("{}.0", a.numer())
    } else {
        format!("(/ {}.0 {}.0)", a.numer(), a.denom())
    };
    if neg {
        let _ = write!(out, "(- {body})");
    } else {
        out.push_str(&body);
    }
}

/// A value in a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SValue {
    Bool(bool),
    Num(Rational),
}

impl SValue {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            SValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self {
            SValue::Num(q) => Some(q),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no value for `{0}`")]
    Unbound(String),
    #[error("ill-sorted term: {0}")]
    Sort(String),
}

/// Evaluates terms under an assignment to declared constants, expanding
/// nullary definitions (memoized).
pub struct Evaluator<'a> {
    model: &'a HashMap<String, SValue>,
    defs: &'a HashMap<String, Term>,
    cache: HashMap<String, SValue>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a HashMap<String, SValue>, defs: &'a HashMap<String, Term>) -> Self {
        Evaluator { model, defs, cache: HashMap::new() }
    }

    pub fn num(&mut self, t: &Term) -> Result<Rational, EvalError> {
        match self.eval(t)? {
            SValue::Num(q) => Ok(q),
            SValue::Bool(_) => Err(EvalError::Sort(t.to_smtlib())),
        }
    }

    pub fn truth(&mut self, t: &Term) -> Result<bool, EvalError> {
        match self.eval(t)? {
            SValue::Bool(b) => Ok(b),
            SValue::Num(_) => Err(EvalError::Sort(t.to_smtlib())),
        }
    }

    pub fn eval(&mut self, t: &Term) -> Result<SValue, EvalError> {
        Ok(match t {
            Term::Bool(b) => SValue::Bool(*b),
            Term::Int(i) => SValue::Num(Rational::from_integer(i.clone())),
            Term::Real(q) => SValue::Num(q.clone()),
            Term::Var(n) => {
                if let Some(v) = self.model.get(n) {
                    v.clone()
                } else if let Some(v) = self.cache.get(n) {
                    v.clone()
                } else if let Some(body) = self.defs.get(n) {
                    let v = self.eval(body)?;
                    self.cache.insert(n.clone(), v.clone());
                    v
                } else {
                    return Err(EvalError::Unbound(n.clone()));
                }
            }
            Term::Add(xs) => {
                let mut s = Rational::zero();
                for x in xs {
                    s += self.num(x)?;
                }
                SValue::Num(s)
            }
            Term::Sub(a, b) => SValue::Num(self.num(a)? - self.num(b)?),
            Term::Neg(a) => SValue::Num(-self.num(a)?),
            Term::Scale(q, a) => SValue::Num(q * self.num(a)?),
            Term::ToReal(a) => SValue::Num(self.num(a)?),
            Term::Cmp(r, a, b) => {
                let (va, vb) = (self.eval(a)?, self.eval(b)?);
                SValue::Bool(match (r, va, vb) {
                    (Rel::Eq, x, y) => x == y,
                    (r, SValue::Num(x), SValue::Num(y)) => match r {
                        Rel::Lt => x < y,
                        Rel::Le => x <= y,
                        Rel::Ge => x >= y,
                        Rel::Gt => x > y,
                        Rel::Eq => unreachable!(),
                    },
                    _ => return Err(EvalError::Sort(t.to_smtlib())),
                })
            }
            Term::And(xs) => {
                for x in xs {
                    if !self.truth(x)? {
                        return Ok(SValue::Bool(false));
                    }
                }
                SValue::Bool(true)
            }
            Term::Or(xs) => {
                for x in xs {
                    if self.truth(x)? {
                        return Ok(SValue::Bool(true));
                    }
                }
                SValue::Bool(false)
            }
            Term::Not(a) => SValue::Bool(!self.truth(a)?),
            Term::Implies(a, b) => SValue::Bool(!self.truth(a)? || self.truth(b)?),
            Term::Ite(c, a, b) => {
                if self.truth(c)? {
                    self.eval(a)?
                } else {
                    self.eval(b)?
                }
            }
        })
    }
}
