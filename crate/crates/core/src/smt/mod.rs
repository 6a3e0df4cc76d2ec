//! Encoding of the conformance problem as an SMT optimization problem.

mod encode;
pub mod term;

use std::collections::HashMap;
use std::fmt::Write as _;

use num_traits::{ToPrimitive, Zero};

use crate::dpn::{Value, VarType};
use crate::rational::Rational;
pub use encode::{big_m, build_problem, build_run_problem, EncodeError};
use term::{EvalError, Evaluator, SValue, Sort, SortEnv, Term};

/// Run-length bound `N(k+1) + k` with `N = ceil(4·m1 + 2·m2 + c)`.
///
/// `N` bounds the visible transitions of an optimal alignment's run and `k`
/// silent transitions can sit in each of the `N + 1` gaps around them.
pub fn standard_bound(m1: usize, m2: usize, c: &Rational, k: usize) -> usize {
    let n = (Rational::from_integer((4 * m1 + 2 * m2).into()) + c).ceil();
    let n = n.to_integer().to_usize().expect("bound fits in usize");
    n * (k + 1) + k
}

/// Bound for arbitrary penalties: an optimal alignment costs at most
/// `upper`, so it has at most `upper / pm_min` visible model moves besides the
/// `m` synchronous ones. Returns `None` when `pm_min` is zero.
pub fn generic_bound(m: usize, upper: &Rational, pm_min: &Rational, k: usize) -> Option<usize> {
    if *pm_min <= Rational::zero() {
        return None;
    }
    let extra = (upper / pm_min).floor().to_integer().to_usize()?;
    let n = m + extra;
    Some(n * (k + 1) + k)
}

/// Names of the problem's declared constants, derived from indices: events
/// `k` and rows/columns `i`, `j` are 1-based, places and variables 0-based,
/// transition codes are `index + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub m: usize,
    pub sequential: bool,
    pub n_places: usize,
    pub vars: Vec<(String, VarType)>,
    /// Transition ids of the (augmented) net, by code − 1.
    pub transitions: Vec<String>,
    /// Event ids in trace order, by event index − 1.
    pub events: Vec<String>,
    /// For sequential traces, the event index placed in row `i` (at `i − 1`).
    pub row_event: Option<Vec<usize>>,
    /// Interned strings; code `strings.len()` stands for any other string.
    pub strings: Vec<String>,
    /// Per event, its admissible labels by code − 1.
    pub labels: Vec<Vec<String>>,
}

pub const OTHER_STRING: &str = "#other";

impl Layout {
    pub fn t(&self, i: usize) -> String {
        format!("t_{i}")
    }
    pub fn m(&self, i: usize, p: usize) -> String {
        format!("m_{i}_{p}")
    }
    pub fn x(&self, i: usize, v: usize) -> String {
        format!("x_{i}_{v}")
    }
    pub fn drop(&self, k: usize) -> String {
        format!("drop_{k}")
    }
    pub fn act(&self, k: usize) -> String {
        format!("act_{k}")
    }
    pub fn td(&self, v: usize, k: usize) -> String {
        format!("td_{v}_{k}")
    }
    pub fn ts(&self, k: usize) -> String {
        format!("ts_{k}")
    }
    pub fn pos(&self, k: usize) -> String {
        format!("pos_{k}")
    }
    pub fn nth(&self, j: usize) -> String {
        format!("nth_{j}")
    }
    pub fn d(&self, i: usize, j: usize) -> String {
        format!("d_{i}_{j}")
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|(v, _)| v == name)
    }

    pub fn sort_of_type(ty: VarType) -> Sort {
        match ty {
            VarType::Bool => Sort::Bool,
            VarType::Int | VarType::Str => Sort::Int,
            VarType::Rat => Sort::Real,
        }
    }

    pub fn string_code(&self, s: &str) -> usize {
        self.strings.iter().position(|x| x == s).unwrap_or(self.strings.len())
    }

    /// Constant term for a value stored in a variable of type `ty`.
    pub fn value_term(&self, v: &Value, ty: VarType) -> Term {
        match v {
            Value::Bool(b) => Term::Bool(*b),
            Value::Str(s) => term::int(self.string_code(s) as i64),
            _ => {
                let q = v.as_rational().expect("numeric value");
                if ty == VarType::Int && q.is_integer() {
                    Term::Int(q.to_integer())
                } else {
                    Term::Real(q)
                }
            }
        }
    }

    /// Value of a variable of type `ty` from a model value.
    pub fn decode_value(&self, ty: VarType, v: &SValue) -> Option<Value> {
        Some(match (ty, v) {
            (VarType::Bool, SValue::Bool(b)) => Value::Bool(*b),
            (VarType::Int, SValue::Num(q)) if q.is_integer() => Value::Int(q.to_integer().to_i64()?),
            (VarType::Rat, SValue::Num(q)) => Value::Rat(q.clone()),
            (VarType::Str, SValue::Num(q)) if q.is_integer() => {
                let code = q.to_integer().to_usize()?;
                Value::Str(self.strings.get(code).cloned().unwrap_or_else(|| OTHER_STRING.to_string()))
            }
            _ => return None,
        })
    }

    /// Number of declared constants the encoding must contain.
    pub fn expected_declarations(&self) -> usize {
        let (n, m, np, nv) = (self.n, self.m, self.n_places, self.vars.len());
        let trace = m * (2 + nv) + if self.sequential { 0 } else { 3 * m };
        n + (n + 1) * np + (n + 1) * nv + trace + (m + 1) * (n + 1)
    }
}

/// The competing branches of one δ cell, each already including the
/// predecessor cell's δ.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cell {
    pub sync: Option<Term>,
    pub log: Option<Term>,
    pub drop: Option<Term>,
    pub model: Option<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemMeta {
    pub m: usize,
    pub m1: usize,
    pub m2: usize,
    pub n: usize,
    pub c: Rational,
    pub k: usize,
    pub big_m: Rational,
}

#[derive(Debug, Clone)]
pub struct SmtProblem {
    pub declarations: Vec<(String, Sort)>,
    pub definitions: Vec<(String, Sort, Term)>,
    /// Assertions grouped by a short section name.
    pub sections: Vec<(String, Vec<Term>)>,
    pub objective: Option<Term>,
    pub layout: Layout,
    pub cells: Vec<Vec<Cell>>,
    pub meta: ProblemMeta,
    sorts: HashMap<String, Sort>,
}

impl SortEnv for SmtProblem {
    fn sort_of(&self, name: &str) -> Option<Sort> {
        self.sorts.get(name).copied()
    }
}

impl SmtProblem {
    /// A problem from hand-written parts, with an empty layout.
    pub fn from_parts(declarations: Vec<(String, Sort)>, assertions: Vec<Term>, objective: Option<Term>) -> SmtProblem {
        let sorts = declarations.iter().cloned().collect();
        let layout = Layout {
            n: 0,
            m: 0,
            sequential: true,
            n_places: 0,
            vars: Vec::new(),
            transitions: Vec::new(),
            events: Vec::new(),
            row_event: None,
            strings: Vec::new(),
            labels: Vec::new(),
        };
        let meta = ProblemMeta {
            m: 0,
            m1: 0,
            m2: 0,
            n: 0,
            c: Rational::zero(),
            k: 0,
            big_m: Rational::zero(),
        };
        let mut p = SmtProblem {
            declarations,
            definitions: Vec::new(),
            sections: Vec::new(),
            objective,
            layout,
            cells: Vec::new(),
            meta,
            sorts,
        };
        let assertions = assertions.into_iter().map(|t| t.coerce(&p.sorts)).collect();
        p.sections.push(("constraints".into(), assertions));
        p
    }

    pub fn assertions(&self) -> impl Iterator<Item = &Term> {
        self.sections.iter().flat_map(|(_, v)| v.iter())
    }

    pub fn assertion_count(&self) -> usize {
        self.sections.iter().map(|(_, v)| v.len()).sum()
    }

    /// Declarations, definitions and assertions, without any commands.
    pub fn write_body(&self, out: &mut String) {
        for (name, sort) in &self.declarations {
            let _ = writeln!(out, "(declare-const {name} {})", sort.smtlib());
        }
        for (name, sort, body) in &self.definitions {
            let _ = write!(out, "(define-fun {name} () {} ", sort.smtlib());
            body.write_smtlib(out);
            out.push_str(")\n");
        }
        for (section, terms) in &self.sections {
            let _ = writeln!(out, "; {section}");
            for t in terms {
                out.push_str("(assert ");
                t.write_smtlib(out);
                out.push_str(")\n");
            }
        }
    }

    /// A complete script: the body, `(minimize objective)` if requested,
    /// `check-sat` and `get-value` over all declared constants.
    pub fn to_smtlib(&self, minimize: bool, extra: &[Term]) -> String {
        let mut out = String::from("(set-option :produce-models true)\n(set-logic QF_LIRA)\n");
        self.write_body(&mut out);
        for t in extra {
            out.push_str("(assert ");
            t.write_smtlib(&mut out);
            out.push_str(")\n");
        }
        if minimize {
            if let Some(obj) = &self.objective {
                out.push_str("(minimize ");
                obj.write_smtlib(&mut out);
                out.push_str(")\n");
            }
        }
        out.push_str("(check-sat)\n");
        out.push_str(&self.get_value_command());
        out
    }

    pub fn get_value_command(&self) -> String {
        let mut out = String::from("(get-value (");
        for (i, (name, _)) in self.declarations.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(name);
        }
        out.push_str("))\n");
        out
    }

    pub fn definitions_map(&self) -> HashMap<String, Term> {
        self.definitions.iter().map(|(n, _, t)| (n.clone(), t.clone())).collect()
    }

    /// Re-evaluates every assertion under `model`; the error names the first
    /// violated one.
    pub fn check_model(&self, model: &HashMap<String, SValue>) -> Result<(), String> {
        for (name, _) in &self.declarations {
            if !model.contains_key(name) {
                return Err(format!("model has no value for `{name}`"));
            }
        }
        let defs = self.definitions_map();
        let mut ev = Evaluator::new(model, &defs);
        for (section, terms) in &self.sections {
            for t in terms {
                match ev.truth(t) {
                    Ok(true) => {}
                    Ok(false) => return Err(format!("{section}: violated {}", t.to_smtlib())),
                    Err(e) => return Err(format!("{section}: {e}")),
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, model: &HashMap<String, SValue>) -> Result<Rational, EvalError> {
        let defs = self.definitions_map();
        let obj = self.objective.clone().unwrap_or(Term::Real(Rational::zero()));
        Evaluator::new(model, &defs).num(&obj)
    }

    /// Evaluates every δ cell; `[i][j]`.
    pub fn delta_values(&self, model: &HashMap<String, SValue>) -> Result<Vec<Vec<Rational>>, EvalError> {
        let defs = self.definitions_map();
        let mut ev = Evaluator::new(model, &defs);
        let l = &self.layout;
        if self.cells.is_empty() {
            return Ok(Vec::new());
        }
        (0..=l.m)
            .map(|i| (0..=l.n).map(|j| ev.num(&Term::Var(l.d(i, j)))).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests;
