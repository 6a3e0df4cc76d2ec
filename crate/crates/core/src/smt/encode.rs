use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};

use super::term::{self, and, eq, ge, implies, int, ite, le, lt, min2, not, or, plus, real, var, Sort, Term};
use super::{Cell, Layout, ProblemMeta, SmtProblem};
use crate::cost::CostFunctions;
use crate::dpn::{Annot, CmpOp, Dpn, Expr, Transition, Value, VarType};
use crate::log::{LogError, TimeSpec, UncertainEvent, UncertainTrace, ValueSpec};
use crate::rational::{int as qint, Cost, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("no variable `{0}` in the net")]
    UnknownVariable(String),
}

/// Upper bound on any genuine alignment cost plus one: every branch that
/// would use a forbidden move costs at least this much.
pub fn big_m(net: &Dpn, trace: &UncertainTrace, cf: &CostFunctions, n: usize, c: &Rational) -> Rational {
    let base = qint((3 * trace.m1() + trace.m2()) as i64);
    let upper = base.max(cf.gamma0_log_cost(trace));
    let max_pm = net.transitions().iter().map(|t| cf.model_penalty(t)).max().unwrap_or_else(Rational::zero);
    Rational::one() + upper + c + qint(n as i64) * max_pm
}

struct Builder<'a> {
    net: &'a Dpn,
    layout: Layout,
    declarations: Vec<(String, Sort)>,
    definitions: Vec<(String, Sort, Term)>,
    sections: Vec<(String, Vec<Term>)>,
    sorts: HashMap<String, Sort>,
}

impl<'a> Builder<'a> {
    fn new(net: &'a Dpn, trace: Option<&UncertainTrace>, n: usize) -> Self {
        let mut strings: BTreeSet<String> = net.string_literals();
        let mut events = Vec::new();
        let mut labels = Vec::new();
        let mut row_event = None;
        let mut sequential = true;
        if let Some(trace) = trace {
            for ue in trace.events() {
                for spec in ue.data.values() {
                    for v in spec.mentioned() {
                        if let Value::Str(s) = v {
                            strings.insert(s);
                        }
                    }
                }
                events.push(ue.id.clone());
                labels.push(ue.labels.keys().cloned().collect());
            }
            sequential = trace.is_sequential();
            if sequential {
                let order = trace.time_ordered();
                row_event = Some(
                    order.iter().map(|ue| 1 + trace.events().iter().position(|x| x.id == ue.id).unwrap()).collect(),
                );
            }
        }
        let layout = Layout {
            n,
            m: events.len(),
            sequential,
            n_places: net.places().len(),
            vars: net.variables().iter().map(|v| (v.name.clone(), v.ty)).collect(),
            transitions: net.transitions().iter().map(|t| t.id.clone()).collect(),
            events,
            row_event,
            strings: strings.into_iter().collect(),
            labels,
        };
        Builder {
            net,
            layout,
            declarations: Vec::new(),
            definitions: Vec::new(),
            sections: Vec::new(),
            sorts: HashMap::new(),
        }
    }

    fn declare(&mut self, name: String, sort: Sort) -> Term {
        self.sorts.insert(name.clone(), sort);
        self.declarations.push((name.clone(), sort));
        Term::Var(name)
    }

    fn define(&mut self, name: String, sort: Sort, body: Term) -> Term {
        let body = body.coerce(&self.sorts);
        self.sorts.insert(name.clone(), sort);
        self.definitions.push((name.clone(), sort, body));
        Term::Var(name)
    }

    fn assert(&mut self, section: &str, t: Term) {
        if t == Term::Bool(true) {
            return;
        }
        let t = t.coerce(&self.sorts);
        match self.sections.last_mut() {
            Some((s, v)) if s == section => v.push(t),
            _ => self.sections.push((section.to_string(), vec![t])),
        }
    }

    fn string_range(&self, x: Term) -> Term {
        and(vec![ge(x.clone(), int(0)), le(x, int(self.layout.strings.len() as i64))])
    }

    /// Control-flow, data and final-marking constraints for runs of length n.
    fn encode_run(&mut self) {
        let net = self.net;
        let n = self.layout.n;
        let np = net.places().len();
        let nt = net.transitions().len();
        let vars = self.layout.vars.clone();
        for i in 0..=n {
            for p in 0..np {
                let mv = self.declare(self.layout.m(i, p), Sort::Int);
                self.assert("markings are non-negative", ge(mv, int(0)));
            }
            for (v, (_, ty)) in vars.iter().enumerate() {
                let xv = self.declare(self.layout.x(i, v), Layout::sort_of_type(*ty));
                if *ty == VarType::Str {
                    let r = self.string_range(xv);
                    self.assert("string codes", r);
                }
            }
        }
        for i in 1..=n {
            let tv = self.declare(self.layout.t(i), Sort::Int);
            self.assert("transition codes", and(vec![ge(tv.clone(), int(1)), le(tv, int(nt as i64))]));
        }
        for p in 0..np {
            let m0 = var(self.layout.m(0, p));
            self.assert("initial state", eq(m0, int(net.initial_marking()[p] as i64)));
        }
        for (v, var_decl) in net.variables().iter().enumerate() {
            let init = self.layout.value_term(&var_decl.init, var_decl.ty);
            self.assert("initial state", eq(var(self.layout.x(0, v)), init));
        }
        for i in 1..=n {
            for (j, t) in net.transitions().iter().enumerate() {
                let step = self.step(i, t);
                self.assert("firing", implies(eq(var(self.layout.t(i)), int(j as i64 + 1)), step));
            }
        }
        for p in 0..np {
            let mn = var(self.layout.m(n, p));
            self.assert("final marking", eq(mn, int(net.final_marking()[p] as i64)));
        }
    }

    /// Enabledness, marking update, guard and frame for firing `t` at step i.
    fn step(&self, i: usize, t: &Transition) -> Term {
        let l = &self.layout;
        let mut parts = Vec::new();
        for (&p, &w) in &t.pre {
            parts.push(ge(var(l.m(i - 1, p)), int(w as i64)));
        }
        for p in 0..l.n_places {
            let delta = t.post.get(&p).copied().unwrap_or(0) as i64 - t.pre.get(&p).copied().unwrap_or(0) as i64;
            let prev = var(l.m(i - 1, p));
            let rhs = if delta == 0 { prev } else { plus(prev, int(delta)) };
            parts.push(eq(var(l.m(i, p)), rhs));
        }
        parts.push(self.guard_term(&t.guard, i));
        for (v, (name, _)) in l.vars.iter().enumerate() {
            if !t.writes().contains(name) {
                parts.push(eq(var(l.x(i, v)), var(l.x(i - 1, v))));
            }
        }
        and(parts)
    }

    /// The guard with `v^r` read from step i − 1 and `v^w` from step i.
    fn guard_term(&self, e: &Expr, i: usize) -> Term {
        let l = &self.layout;
        match e {
            Expr::Const(v) => match v {
                Value::Bool(b) => Term::Bool(*b),
                Value::Int(k) => int(*k),
                Value::Rat(q) => real(q.clone()),
                Value::Str(s) => int(l.string_code(s) as i64),
            },
            Expr::Var { name, annot } => {
                let v = l.var_index(name).expect("resolved guard");
                var(l.x(if *annot == Annot::Read { i - 1 } else { i }, v))
            }
            Expr::Add(xs) => term::add(xs.iter().map(|x| self.guard_term(x, i)).collect()),
            Expr::Neg(x) => Term::Neg(Box::new(self.guard_term(x, i))),
            Expr::Cmp(op, a, b) => {
                let (a, b) = (self.guard_term(a, i), self.guard_term(b, i));
                match op {
                    CmpOp::Eq => eq(a, b),
                    CmpOp::Ne => not(eq(a, b)),
                    CmpOp::Lt => lt(a, b),
                    CmpOp::Le => le(a, b),
                    CmpOp::Gt => term::cmp(term::Rel::Gt, a, b),
                    CmpOp::Ge => ge(a, b),
                }
            }
            Expr::And(xs) => and(xs.iter().map(|x| self.guard_term(x, i)).collect()),
            Expr::Or(xs) => or(xs.iter().map(|x| self.guard_term(x, i)).collect()),
            Expr::Not(x) => not(self.guard_term(x, i)),
        }
    }

    /// Realization choices: dropping, labels, data and (if needed) order.
    fn encode_trace(&mut self, trace: &UncertainTrace) {
        let m = trace.len();
        let vars = self.layout.vars.clone();
        for (idx, ue) in trace.events().iter().enumerate() {
            let k = idx + 1;
            let drop = self.declare(self.layout.drop(k), Sort::Bool);
            if ue.is_certain() {
                self.assert("certain events stay", not(drop));
            }
            let act = self.declare(self.layout.act(k), Sort::Int);
            let nl = ue.labels.len() as i64;
            self.assert("label choice", and(vec![ge(act.clone(), int(1)), le(act, int(nl))]));
            for (v, (name, ty)) in vars.iter().enumerate() {
                let td = self.declare(self.layout.td(v, k), Layout::sort_of_type(*ty));
                if *ty == VarType::Str {
                    let r = self.string_range(td.clone());
                    self.assert("string codes", r);
                }
                if let Some(spec) = ue.data.get(name) {
                    let c = self.spec_term(td, spec, *ty);
                    self.assert("data choice", c);
                }
            }
        }
        if self.layout.sequential {
            return;
        }
        for (idx, ue) in trace.events().iter().enumerate() {
            let k = idx + 1;
            let ts = self.declare(self.layout.ts(k), Sort::Int);
            let c = match &ue.ts {
                TimeSpec::Set(s) => or(s.iter().map(|&t| eq(ts.clone(), Term::Int(t.into()))).collect()),
                TimeSpec::Interval(lo, hi) => {
                    and(vec![ge(ts.clone(), Term::Int((*lo).into())), le(ts, Term::Int((*hi).into()))])
                }
            };
            self.assert("timestamp choice", c);
            let pos = self.declare(self.layout.pos(k), Sort::Int);
            self.assert("positions", and(vec![ge(pos.clone(), int(1)), le(pos, int(m as i64))]));
        }
        for j in 1..=m {
            let nth = self.declare(self.layout.nth(j), Sort::Int);
            self.assert("row selection", or((1..=m).map(|k| eq(nth.clone(), int(k as i64))).collect()));
        }
        let l = &self.layout;
        let mut coupling = Vec::new();
        for a in 1..=m {
            for b in 1..=m {
                if a == b {
                    continue;
                }
                let (pa, pb, sa, sb) = (var(l.pos(a)), var(l.pos(b)), var(l.ts(a)), var(l.ts(b)));
                coupling.push(implies(lt(pa.clone(), pb.clone()), le(sa.clone(), sb.clone())));
                coupling.push(implies(lt(sa, sb), lt(pa, pb)));
            }
        }
        let mut inverse = Vec::new();
        for i in 1..=m {
            for k in 1..=m {
                inverse.push(term::iff(eq(var(l.nth(i)), int(k as i64)), eq(var(l.pos(k)), int(i as i64))));
            }
        }
        for t in coupling {
            self.assert("order follows timestamps", t);
        }
        for t in inverse {
            self.assert("rows invert positions", t);
        }
    }

    fn spec_term(&self, x: Term, spec: &ValueSpec, ty: VarType) -> Term {
        match spec {
            ValueSpec::Set(vals) => or(vals.iter().map(|v| eq(x.clone(), self.layout.value_term(v, ty))).collect()),
            ValueSpec::Interval(lo, hi) => {
                let bound = |q: &Rational| self.layout.value_term(&Value::Rat(q.clone()), ty);
                and(vec![ge(x.clone(), bound(lo)), le(x, bound(hi))])
            }
        }
    }

    /// Cost definitions and the δ recurrence.
    fn encode_delta(&mut self, trace: &UncertainTrace, cf: &CostFunctions, big_m: &Rational) -> Vec<Vec<Cell>> {
        let net = self.net;
        let (m, n) = (self.layout.m, self.layout.n);
        let bm = || real(big_m.clone());
        let nv = self.layout.vars.len();

        // per event: log-move cost, removal cost and sync cost against column j
        for (idx, ue) in trace.events().iter().enumerate() {
            let k = idx + 1;
            let labels: Vec<&String> = ue.labels.keys().collect();
            let act = var(self.layout.act(k));
            let drop = var(self.layout.drop(k));
            let by_label = |f: &dyn Fn(&String) -> Term| -> Term {
                let mut acc = f(labels[labels.len() - 1]);
                for (li, l) in labels.iter().enumerate().rev().skip(1) {
                    acc = ite(eq(act.clone(), int(li as i64 + 1)), f(l), acc);
                }
                acc
            };
            let guard_drop = |t: Term| if ue.is_certain() { t } else { ite(drop.clone(), bm(), t) };

            let log_cost = by_label(&|l| {
                let th = cf.theta_for(ue, l).expect("admissible label");
                real(cf.combine(Cost::Finite(cf.log_penalty(l)), &th, false).finite().cloned().unwrap())
            });
            self.define(format!("lc_{k}"), Sort::Real, guard_drop(log_cost));
            let removal = match cf.removal(ue) {
                Cost::Finite(q) if !ue.is_certain() => ite(drop.clone(), real(q), bm()),
                _ => bm(),
            };
            self.define(format!("kap_{k}"), Sort::Real, removal);

            for j in 1..=n {
                let body = by_label(&|l| self.sync_select(ue, k, l, j, cf, nv, big_m));
                self.define(format!("sy_{k}_{j}"), Sort::Real, guard_drop(body));
            }
        }
        for j in 1..=n {
            let tj = var(self.layout.t(j));
            let ts = net.transitions();
            let mut acc = real(cf.model_penalty(&ts[ts.len() - 1]));
            for (ti, t) in ts.iter().enumerate().rev().skip(1) {
                acc = ite(eq(tj.clone(), int(ti as i64 + 1)), real(cf.model_penalty(t)), acc);
            }
            self.define(format!("pm_{j}"), Sort::Real, acc);
        }

        // per row: the selected event's costs
        let row = |b: &Self, i: usize, f: &dyn Fn(usize) -> Term| -> Term {
            match &b.layout.row_event {
                Some(order) => f(order[i - 1]),
                None => {
                    let nth = var(b.layout.nth(i));
                    let mut acc = f(m);
                    for k in (1..m).rev() {
                        acc = ite(eq(nth.clone(), int(k as i64)), f(k), acc);
                    }
                    acc
                }
            }
        };
        let mut lcost = vec![Term::Bool(false)];
        let mut kappa = vec![Term::Bool(false)];
        let mut scost: Vec<Vec<Term>> = vec![Vec::new()];
        for i in 1..=m {
            let sequential = self.layout.sequential;
            let lc = row(self, i, &|k| var(format!("lc_{k}")));
            let kp = row(self, i, &|k| var(format!("kap_{k}")));
            if sequential {
                lcost.push(lc);
                kappa.push(kp);
            } else {
                lcost.push(self.define(format!("lr_{i}"), Sort::Real, lc));
                kappa.push(self.define(format!("kr_{i}"), Sort::Real, kp));
            }
            let mut srow = vec![Term::Bool(false)];
            for j in 1..=n {
                let s = row(self, i, &|k| var(format!("sy_{k}_{j}")));
                srow.push(if sequential { s } else { self.define(format!("sr_{i}_{j}"), Sort::Real, s) });
            }
            scost.push(srow);
        }

        for i in 0..=m {
            for j in 0..=n {
                self.declare(self.layout.d(i, j), Sort::Real);
            }
        }
        let d = |i: usize, j: usize| var(format!("d_{i}_{j}"));
        let mut cells = vec![vec![Cell::default(); n + 1]; m + 1];
        self.assert("alignment cost", eq(d(0, 0), real(Rational::zero())));
        for i in 0..=m {
            for j in 0..=n {
                if i == 0 && j == 0 {
                    continue;
                }
                let cell = Cell {
                    sync: (i > 0 && j > 0).then(|| plus(scost[i][j].clone(), d(i - 1, j - 1))),
                    log: (i > 0).then(|| plus(lcost[i].clone(), d(i - 1, j))),
                    drop: (i > 0).then(|| plus(kappa[i].clone(), d(i - 1, j))),
                    model: (j > 0).then(|| plus(var(format!("pm_{j}")), d(i, j - 1))),
                };
                let rhs = match (&cell.sync, &cell.log, &cell.drop, &cell.model) {
                    (Some(s), Some(l), Some(k), Some(mo)) => {
                        min2(min2(s.clone(), l.clone()), min2(k.clone(), mo.clone()))
                    }
                    (None, Some(l), Some(k), None) => min2(l.clone(), k.clone()),
                    (None, None, None, Some(mo)) => mo.clone(),
                    _ => unreachable!(),
                };
                self.assert("alignment cost", eq(d(i, j), rhs));
                cells[i][j] = cell;
            }
        }
        cells
    }

    /// Cost of syncing event k under label l with the firing at column j:
    /// big-M unless `t_j` is a transition labelled l.
    #[allow(clippy::too_many_arguments)]
    fn sync_select(
        &self,
        ue: &UncertainEvent,
        k: usize,
        label: &str,
        j: usize,
        cf: &CostFunctions,
        nv: usize,
        big_m: &Rational,
    ) -> Term {
        let th = cf.theta_for(ue, label).expect("admissible label");
        let tj = var(self.layout.t(j));
        let mut acc = real(big_m.clone());
        for (ti, t) in self.net.transitions().iter().enumerate().rev() {
            if t.synthetic || t.label.as_deref() != Some(label) {
                continue;
            }
            let compared: Vec<usize> = cf
                .compared_vars(t, ue)
                .into_iter()
                .map(|v| self.layout.var_index(v).expect("net variable"))
                .collect();
            let cost = if nv == 0 || compared.is_empty() {
                real(cf.combine(Cost::zero(), &th, false).finite().cloned().unwrap())
            } else {
                let share = Rational::one() / qint(nv as i64);
                // per mismatching variable: combine is linear in the mismatch count
                let unit = cf.combine(Cost::Finite(share.clone()), &th, false).finite().cloned().unwrap();
                let zero = cf.combine(Cost::zero(), &th, false).finite().cloned().unwrap();
                let neq: Vec<Term> =
                    compared.iter().map(|&v| not(eq(var(self.layout.td(v, k)), var(self.layout.x(j, v))))).collect();
                let sum = term::add(neq.iter().map(|c| ite(c.clone(), real(unit.clone()), real(Rational::zero()))).collect());
                if zero.is_zero() {
                    sum
                } else {
                    ite(or(neq), sum, real(zero))
                }
            };
            acc = ite(eq(tj.clone(), int(ti as i64 + 1)), cost, acc);
        }
        acc
    }

    fn finish(self, meta: ProblemMeta, cells: Vec<Vec<Cell>>, objective: Option<Term>) -> SmtProblem {
        SmtProblem {
            declarations: self.declarations,
            definitions: self.definitions,
            sections: self.sections,
            objective,
            layout: self.layout,
            cells,
            meta,
            sorts: self.sorts,
        }
    }
}

/// The full optimization problem for `trace` against `net` (augmented with a
/// final loop) with runs of length `n`. `c` and `k` are recorded and enter big-M.
pub fn build_problem(
    net: &Dpn,
    trace: &UncertainTrace,
    cf: &CostFunctions,
    n: usize,
    c: &Rational,
    k: usize,
) -> Result<SmtProblem, EncodeError> {
    let net = net.augment_final_loop();
    let trace = trace.coerce_to(&net)?;
    let big_m = big_m(&net, &trace, cf, n, c);
    let mut b = Builder::new(&net, Some(&trace), n);
    b.encode_run();
    b.encode_trace(&trace);
    let cells = b.encode_delta(&trace, cf, &big_m);
    let meta = ProblemMeta { m: trace.len(), m1: trace.m1(), m2: trace.m2(), n, c: c.clone(), k, big_m };
    let objective = Some(var(b.layout.d(trace.len(), n)));
    Ok(b.finish(meta, cells, objective))
}

/// Only the run constraints: satisfiable iff a process run of length `n`
/// exists in the augmented net.
pub fn build_run_problem(net: &Dpn, n: usize) -> SmtProblem {
    let net = net.augment_final_loop();
    let mut b = Builder::new(&net, None, n);
    b.encode_run();
    let meta = ProblemMeta { m: 0, m1: 0, m2: 0, n, c: Rational::zero(), k: 0, big_m: Rational::zero() };
    b.finish(meta, Vec::new(), None)
}
